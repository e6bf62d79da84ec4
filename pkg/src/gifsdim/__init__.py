"""Hausdorff-dimension estimates for graph-directed affine iterated function systems."""

from .bowen import (
    DimensionReport,
    NoPositiveRootError,
    bowen_root,
    det_bracket,
    dim_bounds_affine,
    lower_potential,
    upper_potential,
)
from .graph import DirectedMultigraph, admissible, enumerate_words, full_shift, is_finitely_irreducible
from .linalg import inf_norm, is_conformal, min_quasiregular_K, op_norm, singular_values
from .model import (
    AffineMap,
    AffineSystem,
    Box,
    PerturbedFamily,
    SpecSyntaxError,
    SpecValidationError,
    family_at,
    quasiregularity_report,
    validate,
)
from .oracle import box_count_dim, chaos_game, coding_perturbation_check, coding_point, default_scales
from .perturbation import (
    affine_condition_check,
    compute_pn,
    compute_tk,
    fit_expansion,
    k_order_check,
)
from .pressure import (
    CountableSystem,
    TailRule,
    finiteness_threshold,
    pressure_cylinder,
    pressure_spectral,
    pressure_truncated,
)
from .specfile import dump_spec, load_spec, parse_spec

__version__ = "0.1.0"
