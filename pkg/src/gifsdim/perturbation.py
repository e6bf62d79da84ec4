"""Dimension under perturbation: sweeps, expansion coefficients, exponent bookkeeping."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .bowen import DEFAULT_TOL, dim_bounds_affine
from .linalg import op_norm
from .model import PerturbedFamily, family_at, loglog_slope, quasiregularity_report
from .pressure import CountableSystem, finiteness_threshold

__all__ = [
    "ConditionReport",
    "ExpansionFit",
    "UnreliableExpansionError",
    "compute_tk",
    "compute_t_tilde",
    "compute_pn",
    "affine_pn",
    "uniform_t_table",
    "affine_condition_check",
    "dimension_sweep",
    "fit_expansion",
    "k_order_check",
    "default_grid",
]


def default_grid(eps0: float = 0.1, levels: int = 11) -> list:
    """``eps_j = eps0 * 2**-j`` for ``j = 0..levels-1``."""
    return [eps0 * 2.0**-j for j in range(levels)]


# ---------------------------------------------------------------------------
# exponent bookkeeping


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> tuple:
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def compute_tk(t_table: Mapping[tuple, float], D: int, k: int) -> float:
    """Minimum of ``(1/D) sum_p t(i_p, j_p + 1)`` over the admissible tuples.

    The tuples ``(i_p)``, ``(j_p)`` range over non-negative integers with
    ``i = sum i_p``, ``j = sum j_p`` and either ``i = k, j = 0`` or
    ``0 <= i < k, 1 <= j <= k - i``.
    """
    if k < 1 or D < 1:
        raise ValueError("need k >= 1 and D >= 1")
    pairs = [(k, 0)] + [(i, j) for i in range(k) for j in range(1, k - i + 1)]
    best = math.inf
    for i, j in pairs:
        for ip in _compositions(i, D):
            for jp in _compositions(j, D):
                total = 0.0
                for a, b in zip(ip, jp):
                    key = (a, b + 1)
                    if key not in t_table:
                        raise KeyError(f"t{key} missing from the exponent table")
                    total += t_table[key]
                best = min(best, total / D)
    return best


def compute_t_tilde(t_table: Mapping[tuple, float], tk: Sequence[float], t0: float, D: int, n: int) -> float:
    """``min{t_n, t0, t0/D + (D-1)/D t(l, 1) for l = 1..n}``; ``t0`` for ``n = 0``."""
    if n == 0:
        return t0
    cands = [tk[n - 1], t0]
    cands += [t0 / D + (D - 1) / D * t_table[(l, 1)] for l in range(1, n + 1)]
    return min(cands)


def compute_pn(p_low: float, tk: Sequence[float], t_tilde: float, n: int) -> float:
    """Threshold ``p(n)`` that ``dim_H J / D`` must exceed."""
    if n == 0:
        return p_low / t_tilde
    if len(tk) < n:
        raise ValueError(f"need t_1..t_{n}")
    terms = [p_low + (n / k) * (1 - tk[k - 1]) for k in range(1, n + 1)]
    terms += [p_low / tk[k - 1] for k in range(1, n + 1)]
    terms += [p_low + 1 - t_tilde, p_low / t_tilde]
    return max(terms)


def affine_pn(s_fin: float, D: int, n: int, t: float) -> float:
    """``max(s + D n (1 - t), s / t)`` with ``s`` the finiteness threshold."""
    return max(s_fin + D * n * (1 - t), s_fin / t)


def uniform_t_table(n: int, t: float) -> dict:
    """``t(l, k) = t`` for ``l = 0..n``, ``k = 1..n-l+1``."""
    return {(l, k): t for l in range(n + 1) for k in range(1, n - l + 2)}


@dataclass
class ConditionReport:
    t_table: dict
    t_k: list
    t_tilde: float
    p_low: float
    p_n: float
    dim_check: bool
    failing: list = field(default_factory=list)
    effective_order: int = 0

    @property
    def verdict(self) -> bool:
        return not self.failing


def affine_condition_check(
    fam: PerturbedFamily,
    t: float,
    dim_bracket: tuple,
    grid: Sequence[float] | None = None,
) -> ConditionReport:
    """Exponent conditions for an affine family at Hölder-type exponent ``t``.

    For affine maps the higher derivatives vanish, so the uniform table
    ``t(l, k) = t`` is admissible and gives ``t_k = t_tilde = t``; then
    ``D p(n) = max(s + D n (1 - t), s / t)`` with ``s`` the finiteness
    threshold of ``P(s log|M|)``. The dimension check compares ``p_n(t)``
    with the lower end of ``dim_bracket``.

    Orders whose coefficients vanish on every edge impose nothing, so
    ``n`` is the highest order with a non-zero coefficient (0 for a
    constant family).
    """
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    sys = fam.base
    D = sys.dim
    n = 0
    for terms in fam.coeffs.values():
        for k, (Mk, ak) in enumerate(terms, start=1):
            if np.any(Mk) or np.any(ak):
                n = max(n, k)
    failing = []
    pot = {e: math.log(op_norm(T.linear)) for e, T in sys.maps.items()}
    s_fin = finiteness_threshold(CountableSystem(sys.graph, pot, sys.tail))
    p_low = s_fin / D
    table = uniform_t_table(n, t)
    tk = [compute_tk(table, D, k) for k in range(1, n + 1)]
    t_tilde = compute_t_tilde(table, tk, t, D, n)
    p_n = affine_pn(s_fin, D, n, t)
    dim_ok = p_n < dim_bracket[0]
    if not dim_ok:
        failing.append("dimension")

    # finiteness of max_k sup_e |M_{e,k}| / |M_e|^t and of the offsets
    worst = 0.0
    for e, terms in fam.coeffs.items():
        base_norm = op_norm(sys.maps[e].linear)
        for Mk, ak in terms:
            if np.any(Mk):
                worst = max(worst, op_norm(Mk) / base_norm**t)
            if not np.all(np.isfinite(ak)):
                failing.append("offset-finiteness")
    if not math.isfinite(worst):
        failing.append("coefficient-finiteness")

    if grid is not None and n > 0:
        qr = quasiregularity_report(fam, grid)
        if not qr.satisfies_order(n):
            failing.append("quasiregularity")
    return ConditionReport(table, tk, t_tilde, p_low, p_n, dim_ok, failing, n)


# ---------------------------------------------------------------------------
# sweeps and expansion fits


class UnreliableExpansionError(ValueError):
    """Bracket widths swamp the variation the expansion is meant to capture."""

    def __init__(self, message, widths):
        super().__init__(message)
        self.widths = widths


@dataclass
class SweepRow:
    eps: float
    lower: float
    upper: float
    K: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def dimension_sweep(fam: PerturbedFamily, grid: Sequence[float], tol: float = 1e-12, workers: int = 1):
    """Dimension bracket and ``K`` at every ``eps`` in ``grid`` (grid order kept)."""

    def one(eps):
        rep = dim_bounds_affine(family_at(fam, eps), tol=tol, check=False)
        return SweepRow(float(eps), rep.lower, rep.upper, rep.K)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, grid))
    return [one(eps) for eps in grid]


@dataclass
class ExpansionFit:
    order: int
    coefficients: list
    remainder_slope: float
    remainder_scale: float
    grid: list
    brackets: list  # (eps, lower, upper) per grid point
    method: str
    width_slope: float = math.nan

    def __call__(self, eps):
        return sum(c * np.asarray(eps) ** k for k, c in enumerate(self.coefficients))


def _richardson_limit(values: np.ndarray, depth: int) -> float:
    """Extrapolate ``values[j] ~ L + c_1 h_j + c_2 h_j^2 + ...`` with ``h_j = h_0 2^-j``.

    The tableau is built to ``depth`` columns; among the deepest column the
    entry that moves least against its neighbour is taken.
    """
    cols = [np.asarray(values, dtype=float)]
    for m in range(1, depth + 1):
        prev = cols[-1]
        if prev.size < 2:
            break
        f = 2.0**m
        cols.append((f * prev[1:] - prev[:-1]) / (f - 1.0))
    last = cols[-1]
    if last.size == 1:
        return float(last[0])
    diffs = np.abs(np.diff(last))
    j = int(np.argmin(diffs))
    return float(last[j + 1])


def _extract_coefficients(grid, d, s0, n, depth, method):
    grid = np.asarray(grid, dtype=float)
    coeffs = [s0]
    if method == "richardson":
        for k in range(1, n + 1):
            partial = sum(c * grid**i for i, c in enumerate(coeffs))
            g = (d - partial) / grid**k
            coeffs.append(_richardson_limit(g, depth))
    elif method == "polyfit":
        if n > 0:
            # rows scaled by eps^-n: the remainder is only small relative to eps^n
            w = grid**-n
            V = np.vstack([grid**k * w for k in range(1, n + 1)]).T
            sol, *_ = np.linalg.lstsq(V, (d - s0) * w, rcond=None)
            coeffs.extend(float(x) for x in sol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return coeffs


def fit_expansion(
    fam: PerturbedFamily,
    n: int,
    grid: Sequence[float] | None = None,
    method: str = "richardson",
    tol: float = 1e-12,
    width_share: float = 0.5,
    workers: int = 1,
    sweep=None,
) -> ExpansionFit:
    """Coefficients ``s_0..s_n`` of ``dim(eps) = s_0 + s_1 eps + ... + o(eps^n)``.

    ``dim(eps)`` is the midpoint of the dimension bracket; ``s_0`` is taken
    from the unperturbed system. The grid must be dyadic and decreasing
    for the Richardson method. The remainder slope is the log-log slope of
    the fit residual over grid points above the root-solver noise floor;
    ``remainder_scale`` is ``max |residual| / eps^n``.
    """
    grid = default_grid() if grid is None else [float(x) for x in grid]
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly decreasing")
    rows = sweep if sweep is not None else dimension_sweep(fam, grid, tol, workers)
    base = dim_bounds_affine(fam.base, tol=tol, check=False)
    s0 = base.midpoint
    d = np.array([r.mid for r in rows])
    widths = np.array([r.width for r in rows])
    g = np.asarray(grid)

    noise = 1e3 * tol
    variation = np.abs(d - s0)
    if np.any(widths > width_share * variation + noise):
        raise UnreliableExpansionError(
            "nonconformality dominates, expansion unreliable", widths.tolist()
        )
    depth = n + 2
    coeffs = _extract_coefficients(g, d, s0, n, depth, method)

    fitted = sum(c * g**k for k, c in enumerate(coeffs))
    resid = np.abs(d - fitted)
    keep = resid > noise
    if keep.sum() >= 3:
        rslope, _ = loglog_slope(g[keep], resid[keep])
    else:
        rslope = math.inf
    scale = float(np.max(resid / g**n)) if n > 0 else float(np.max(resid))
    wkeep = widths > noise
    wslope = loglog_slope(g[wkeep], widths[wkeep])[0] if wkeep.sum() >= 3 else math.inf
    brackets = [(r.eps, r.lower, r.upper) for r in rows]
    return ExpansionFit(n, coeffs, rslope, scale, list(grid), brackets, method, wslope)


@dataclass
class KOrderVerdict:
    passed: bool
    slope: float
    exactly_conformal: bool
    note: str


def k_order_check(fam: PerturbedFamily, n: int, grid: Sequence[float] | None = None, margin: float = 0.05):
    """Whether ``K(eps) - 1`` decays faster than ``eps^n`` on the grid."""
    grid = default_grid() if grid is None else grid
    qr = quasiregularity_report(fam, grid)
    if qr.exactly_conformal:
        return KOrderVerdict(True, math.nan, True, "exactly conformal")
    ok = qr.satisfies_order(n, margin)
    note = f"slope {qr.slope:.4f} {'>' if ok else '<='} {n} + {margin}"
    return KOrderVerdict(ok, qr.slope, False, note)
