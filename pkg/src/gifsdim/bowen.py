"""Bowen-equation roots and the dimension brackets of affine systems."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedMultigraph, is_finitely_irreducible
from .linalg import DEFAULT_CONFORMAL_TOL, is_conformal, min_quasiregular_K, singular_values
from .model import AffineSystem, validate
from .pressure import pressure_spectral

__all__ = [
    "NoPositiveRootError",
    "BowenRoot",
    "bowen_root",
    "bowen_solve",
    "upper_potential",
    "lower_potential",
    "det_potential",
    "DimensionReport",
    "dim_bounds_affine",
    "det_bracket",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10


class NoPositiveRootError(ValueError):
    """``s -> P(s phi)`` has no zero on ``s > 0``."""


@dataclass(frozen=True)
class BowenRoot:
    root: float
    lo: float
    hi: float
    iterations: int
    pressure_lo: float
    pressure_hi: float


def bowen_solve(g: DirectedMultigraph, phi, tol: float = DEFAULT_TOL) -> BowenRoot:
    """Bisection for ``P(s phi) = 0`` keeping the bracket and its pressures."""
    vals = np.array([float(phi[e]) for e in g.edges]) if hasattr(phi, "keys") else np.asarray(phi, float)
    if np.any(vals >= 0):
        raise ValueError("potential must be strictly negative on every edge")
    if tol <= 0:
        raise ValueError("tol must be positive")
    p0 = pressure_spectral(g, np.zeros_like(vals)).value
    if not p0 > 0:
        raise NoPositiveRootError("no positive root: pressure at s=0 is not positive")
    # P(s phi) <= P(0) + s max(phi) bounds the root from above
    hi = p0 / -vals.max()
    lo = 0.0
    p_lo, p_hi = p0, pressure_spectral(g, hi * vals).value
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p = pressure_spectral(g, mid * vals).value
        if p > 0:
            lo, p_lo = mid, p
        elif p < 0:
            hi, p_hi = mid, p
        else:
            lo = hi = mid
            p_lo = p_hi = p
        it += 1
    return BowenRoot(0.5 * (lo + hi), lo, hi, it, p_lo, p_hi)


def bowen_root(g: DirectedMultigraph, phi, tol: float = DEFAULT_TOL) -> float:
    """Unique ``s > 0`` with ``P(s phi) = 0`` for a negative potential ``phi``.

    Raises :class:`NoPositiveRootError` if ``P(0) <= 0``.
    """
    return bowen_solve(g, phi, tol).root


def upper_potential(sys: AffineSystem) -> dict:
    """``log |M_e|`` per edge."""
    return {e: math.log(singular_values(T.linear)[0]) for e, T in sys.maps.items()}


def lower_potential(sys: AffineSystem) -> dict:
    """``log |M_e|_i = -log |M_e^{-1}|`` per edge."""
    return {e: math.log(singular_values(T.linear)[-1]) for e, T in sys.maps.items()}


def det_potential(sys: AffineSystem) -> dict:
    """``log |det M_e|`` per edge."""
    return {e: float(np.sum(np.log(singular_values(T.linear)))) for e, T in sys.maps.items()}


@dataclass
class DimensionReport:
    lower: float
    upper: float
    det_bracket: tuple
    conformal: bool
    K: float
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def det_bracket(sys: AffineSystem, K: float, tol: float = DEFAULT_TOL) -> tuple:
    """Interval from ``|P((s/D) log|det|)| <= (s/D) log K``.

    The endpoint equations ``P((s/D) phi_det) = +-(s/D) log K`` are Bowen
    equations for the shifted potentials ``(phi_det -+ log K) / D``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    g = sys.graph
    phid = det_potential(sys)
    d = sys.dim
    logK = math.log(K)
    lo_phi = {e: (v - logK) / d for e, v in phid.items()}
    hi_phi = {e: (v + logK) / d for e, v in phid.items()}
    if any(v >= 0 for v in hi_phi.values()):
        raise NoPositiveRootError("degenerate bracket: |det M_e| * K >= 1 for some edge")
    return (bowen_root(g, lo_phi, tol), bowen_root(g, hi_phi, tol))


def dim_bounds_affine(
    sys: AffineSystem,
    tol: float = DEFAULT_TOL,
    conformal_tol: float = DEFAULT_CONFORMAL_TOL,
    depth: int = 1,
    check: bool = True,
) -> DimensionReport:
    """Lower/upper Hausdorff-dimension bounds from infimum and operator norms.

    The upper bound solves ``P(s log|M|) = 0`` and the lower bound solves
    ``P(s log|M|_i) = 0``. The lower bound is only guaranteed under strong
    separation; with ``check`` the system is validated at ``depth`` and the
    report carries ``"lower-bound-heuristic"`` when only the open set
    condition holds.
    """
    flags = []
    diagnostics = {}
    if check:
        rep = validate(sys, depth)
        diagnostics["min_separation"] = rep.min_separation
        if not rep.hard_ok:
            flags.append("invalid-system")
            warnings.warn("; ".join(rep.failures), stacklevel=2)
        if not rep.ssc:
            flags.append("lower-bound-heuristic")
            if not rep.osc:
                flags.append("no-separation")
            warnings.warn("strong separation not verified; lower bound is heuristic", stacklevel=2)
        if not is_finitely_irreducible(sys.graph, max_len=len(sys.graph.edges)).verdict:
            flags.append("not-finitely-irreducible")
    g = sys.graph
    up = bowen_solve(g, upper_potential(sys), tol)
    low = bowen_solve(g, lower_potential(sys), tol)
    conformal = all(is_conformal(T.linear, conformal_tol) for T in sys.maps.values())
    K = max(min_quasiregular_K(T.linear) for T in sys.maps.values())
    try:
        db = det_bracket(sys, K, tol)
    except NoPositiveRootError:
        db = (math.nan, math.nan)
        flags.append("det-bracket-degenerate")
    if conformal:
        flags.append("conformal")
    diagnostics.update(
        upper_iterations=up.iterations,
        lower_iterations=low.iterations,
        upper_residuals=(up.pressure_lo, up.pressure_hi),
        lower_residuals=(low.pressure_lo, low.pressure_hi),
    )
    return DimensionReport(low.root, up.root, db, conformal, K, flags, diagnostics)
