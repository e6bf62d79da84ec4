"""Topological pressure of locally constant edge potentials.

For ``f(omega) = f(omega_0)`` the pressure is ``log rho(B)`` with the
edge-indexed matrix ``B[e, e'] = A(e e') exp(f(e'))``. Writing
``B = X Y`` with ``X[e, v] = [t(e) = v]`` and ``Y[v, e'] = [i(e') = v] exp f(e')``
shows that ``B`` and the vertex matrix ``C = Y X``,
``C[u, v] = sum_{e: u -> v} exp f(e)``, share their non-zero spectrum, so the
spectral route works on ``|V| x |V|`` matrices. This is what makes long
truncations of countable edge families cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .graph import DirectedMultigraph, enumerate_words

__all__ = [
    "PressureValue",
    "NonConvergenceError",
    "weighted_edge_matrix",
    "vertex_weight_matrix",
    "log_spectral_radius",
    "pressure_spectral",
    "pressure_cylinder",
    "TailRule",
    "CountableSystem",
    "TruncatedPressure",
    "pressure_truncated",
    "finiteness_threshold",
]

NEG_INF = -math.inf


class NonConvergenceError(RuntimeError):
    """Power iteration did not close its Collatz-Wielandt bracket."""


@dataclass(frozen=True)
class PressureValue:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self):
        return float(self.value)


def _potential_vector(g: DirectedMultigraph, f) -> np.ndarray:
    if isinstance(f, Mapping):
        vals = np.array([float(f[e]) for e in g.edges])
    else:
        vals = np.asarray(f, dtype=float)
        if vals.shape != (len(g.edges),):
            raise ValueError("potential must give one value per edge")
    if np.any(np.isnan(vals)) or np.any(vals == math.inf):
        raise ValueError("potential values must be finite or -inf")
    return vals


def weighted_edge_matrix(g: DirectedMultigraph, f) -> np.ndarray:
    """``B[e, e'] = A(e e') exp(f(e'))`` indexed by edges."""
    vals = _potential_vector(g, f)
    return g.incidence_matrix() * np.exp(vals)[None, :]


def vertex_weight_matrix(g: DirectedMultigraph, f, shift: float = 0.0) -> np.ndarray:
    """``C[u, v] = sum over edges u -> v of exp(f(e) - shift)``."""
    vals = _potential_vector(g, f)
    C = np.zeros((len(g.vertices), len(g.vertices)))
    vidx = {v: k for k, v in enumerate(g.vertices)}
    for e, val in zip(g.edges, vals):
        C[vidx[g.initial[e]], vidx[g.terminal[e]]] += math.exp(val - shift)
    return C


def _log_rho_irreducible(C: np.ndarray, rtol: float, max_iter: int) -> tuple[float, int]:
    n = C.shape[0]
    if n == 1:
        c = C[0, 0]
        return (math.log(c) if c > 0 else NEG_INF), 0
    # diagonal shift makes an irreducible block primitive without moving
    # the Perron vector; rho(C + cI) = rho(C) + c
    row = C.sum(axis=1)
    c = 0.5 * (row.min() + row.max())
    S = C + c * np.eye(n)
    x = np.ones(n)
    for it in range(1, max_iter + 1):
        y = S @ x
        ratios = y / x
        lo, hi = ratios.min() - c, ratios.max() - c
        if lo > 0 and math.log(hi) - math.log(lo) <= rtol:
            return 0.5 * (math.log(hi) + math.log(lo)), it
        x = y / y.max()
    raise NonConvergenceError(
        f"power iteration did not converge in {max_iter} steps (bracket [{lo}, {hi}])"
    )


def log_spectral_radius(C: np.ndarray, rtol: float = 1e-12, max_iter: int = 200_000):
    """``log rho(C)`` for a non-negative square matrix.

    Each strongly connected block is handled by shifted power iteration,
    stopping once the Collatz-Wielandt lower and upper bounds agree to
    ``rtol`` in log scale. The result is the maximum over blocks, which is
    the spectral radius of a reducible matrix.

    Returns ``(value, iterations)``; ``value`` is ``-inf`` for a nilpotent
    pattern.
    """
    C = np.asarray(C, dtype=float)
    if np.any(C < 0):
        raise ValueError("matrix must be non-negative")
    n_comp, labels = connected_components(C > 0, directed=True, connection="strong")
    best, total_it = NEG_INF, 0
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        block = C[np.ix_(idx, idx)]
        if len(idx) > 1 or block[0, 0] > 0:
            val, it = _log_rho_irreducible(block, rtol, max_iter)
            total_it += it
            best = max(best, val)
    return best, total_it


def pressure_spectral(g: DirectedMultigraph, f, rtol: float = 1e-12) -> PressureValue:
    """Pressure of the locally constant potential ``f`` via the spectral radius.

    ``f`` maps edge names to values (or is a vector in edge order). Weights
    are rescaled by ``exp(max f)`` before iterating so that products of
    strong contractions cannot underflow.
    """
    vals = _potential_vector(g, f)
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        return PressureValue(NEG_INF, "spectral", {"iterations": 0})
    shift = float(finite.max())
    C = vertex_weight_matrix(g, vals, shift=shift)
    val, it = log_spectral_radius(C, rtol=rtol)
    return PressureValue(val + shift, "spectral", {"iterations": it, "shift": shift})


def _word_block_sums(g, vals, length):
    """Log-sum of ``exp(S f)`` over words of ``length``, keyed by (first, last) edge."""
    m = len(g.edges)
    idx = {e: k for k, e in enumerate(g.edges)}
    acc = [[[] for _ in range(m)] for _ in range(m)]
    for w in enumerate_words(g, length):
        acc[idx[w[0]]][idx[w[-1]]].append(sum(vals[idx[e]] for e in w))
    out = np.full((m, m), NEG_INF)
    for a in range(m):
        for b in range(m):
            if acc[a][b]:
                # sorted summation so enumeration order cannot change the bits
                out[a, b] = logsumexp(np.sort(np.array(acc[a][b])))
    return out


def pressure_cylinder(g: DirectedMultigraph, f, n: int, split: int | None = None) -> PressureValue:
    """``(1/n) log sum_{|w| = n} exp(S_n f(w))`` by explicit word enumeration.

    The supremum inside each cylinder is exact for locally constant ``f``.
    Words longer than ``split`` (default 6) are enumerated as admissible
    concatenations of two shorter blocks; every length-``n`` word is still
    visited as a pair of explicitly enumerated halves.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    vals = _potential_vector(g, f)
    if split is None:
        split = 6
    if n <= split:
        terms = [sum(vals[g.edge_index(e)] for e in w) for w in enumerate_words(g, n)]
        if not terms:
            return PressureValue(NEG_INF, "cylinder", {"n": n, "words": 0})
        total = logsumexp(np.sort(np.array(terms)))
        return PressureValue(total / n, "cylinder", {"n": n, "words": len(terms)})
    h = n // 2
    left = _word_block_sums(g, vals, h)
    right = _word_block_sums(g, vals, n - h)
    A = g.incidence_matrix().astype(bool)
    # total = logsumexp over (a, b, c, d) of left[a, b] + right[c, d] with A[b, c]
    left_end = logsumexp(left, axis=0)  # indexed by last edge of the left block
    right_start = logsumexp(right, axis=1)  # indexed by first edge of the right block
    pair = left_end[:, None] + right_start[None, :]
    pair = np.where(A, pair, NEG_INF)
    flat = np.sort(pair.ravel())
    total = logsumexp(flat) if np.any(np.isfinite(flat)) else NEG_INF
    return PressureValue(total / n, "cylinder", {"n": n, "split": (h, n - h)})


# ---------------------------------------------------------------------------
# countable edge families


@dataclass(frozen=True)
class TailRule:
    """Closed form for the norms of the edges ``k = start, start+1, ...``.

    ``polynomial``: ``norm_k = scale * k**(-exponent)``.
    ``geometric``: ``norm_k = scale * ratio**k``.
    All tail edges are loops at ``vertex``.
    """

    rule: str
    scale: float = 1.0
    exponent: float = 2.0
    ratio: float = 0.5
    start: int = 1
    vertex: str | None = None

    def __post_init__(self):
        if self.rule not in ("polynomial", "geometric"):
            raise ValueError(f"unknown tail rule {self.rule!r}")
        if self.scale <= 0:
            raise ValueError("tail scale must be positive")
        if self.rule == "polynomial" and self.exponent <= 0:
            raise ValueError("polynomial tail needs a positive exponent")
        if self.rule == "geometric" and not 0 < self.ratio < 1:
            raise ValueError("geometric tail needs 0 < ratio < 1")
        if self.start < 1:
            raise ValueError("tail start index must be >= 1")

    def norms(self, count: int) -> np.ndarray:
        k = np.arange(self.start, self.start + count, dtype=float)
        if self.rule == "polynomial":
            return self.scale * k ** (-self.exponent)
        return self.scale * self.ratio**k

    def log_norms(self, count: int) -> np.ndarray:
        k = np.arange(self.start, self.start + count, dtype=float)
        if self.rule == "polynomial":
            return math.log(self.scale) - self.exponent * np.log(k)
        return math.log(self.scale) + k * math.log(self.ratio)

    def tail_sum_bound(self, s: float, count: int) -> float:
        """Upper bound on ``sum_{k > last} norm_k**s`` after ``count`` tail edges."""
        last = self.start + count - 1
        if s <= 0:
            return math.inf
        if self.rule == "polynomial":
            a = self.exponent * s
            if a <= 1:
                return math.inf
            # integral test: sum_{k > N} k^-a <= int_N^inf x^-a dx
            return self.scale**s * last ** (1 - a) / (a - 1)
        q = self.ratio**s
        return self.scale**s * q ** (last + 1) / (1 - q)


@dataclass(frozen=True)
class CountableSystem:
    """A finite graph plus an optional closed-form tail of loops.

    ``potential`` gives the per-edge values of ``phi`` on the finite part;
    tail edges carry ``phi = log norm_k``. Pressures are taken for ``s * phi``.
    """

    graph: DirectedMultigraph
    potential: Mapping[str, float]
    tail: TailRule | None = None

    def tail_vertex(self) -> str:
        if self.tail is None:
            raise ValueError("system has no tail")
        return self.tail.vertex or self.graph.vertices[0]


@dataclass
class TruncatedPressure:
    values: list  # PressureValue per level
    levels: list
    converged: bool
    diverged: bool
    upper_bound: float  # pressure bound including the closed-form tail

    @property
    def finite(self) -> bool:
        return not self.diverged


def _truncated_value(sys: CountableSystem, s: float, count: int) -> float:
    g = sys.graph
    vals = s * _potential_vector(g, sys.potential)
    finite = vals[np.isfinite(vals)]
    if sys.tail is None or count == 0:
        return pressure_spectral(g, vals).value
    tail_logs = s * sys.tail.log_norms(count)
    shift = float(max(finite.max() if finite.size else NEG_INF, tail_logs.max()))
    C = vertex_weight_matrix(g, vals, shift=shift)
    v = g.vertex_index(sys.tail_vertex())
    C[v, v] += math.exp(logsumexp(np.sort(tail_logs - shift)))
    val, _ = log_spectral_radius(C)
    return val + shift


def pressure_truncated(
    sys: CountableSystem,
    s: float,
    levels: Sequence[int],
    tol: float = 1e-6,
    ceiling: float = 50.0,
) -> TruncatedPressure:
    """Pressures ``P(s phi)`` of finite subsystems keeping ``levels`` tail edges.

    The sequence is non-decreasing since each level contains the previous
    one. ``converged`` is set once the closed-form tail bound shows the
    remaining edges move the pressure by less than ``tol``; ``diverged`` is
    set when that bound is infinite or a value passes ``ceiling``.
    """
    levels = sorted(int(x) for x in levels)
    values, diverged, converged = [], False, False
    upper = math.inf
    for count in levels:
        p = _truncated_value(sys, s, count)
        values.append(PressureValue(p, "truncated", {"level": count}))
        if p > ceiling:
            diverged = True
            break
    if sys.tail is None:
        converged = True
        upper = values[-1].value
    elif not diverged:
        count = levels[-1]
        bound = sys.tail.tail_sum_bound(s, count)
        if math.isinf(bound):
            diverged = True
        else:
            # the tail adds at most `bound` to the loop weight at its vertex;
            # for one-vertex systems that moves log rho by log(1 + bound/Z)
            vals = s * _potential_vector(sys.graph, sys.potential)
            g = sys.graph
            shift = 0.0
            C = vertex_weight_matrix(g, vals, shift=shift)
            vi = g.vertex_index(sys.tail_vertex())
            C[vi, vi] += float(np.sum(sys.tail.norms(count) ** s)) + bound
            upper, _ = log_spectral_radius(C)
            converged = upper - values[-1].value < tol
    return TruncatedPressure(values, levels, converged, diverged, upper)


def finiteness_threshold(
    sys: CountableSystem,
    tol: float = 1e-3,
    s_max: float = 64.0,
    level: int = 1000,
) -> float:
    """``inf{s >= 0 : P(s phi) < inf}`` by bisection on the divergence verdict.

    Returns 0 for finite systems and whenever no divergence is found on
    ``(0, s_max]``.
    """
    if sys.tail is None:
        return 0.0

    def diverges(s):
        return pressure_truncated(sys, s, [level]).diverged

    lo, hi = 0.0, s_max
    if diverges(hi):
        raise ValueError(f"pressure still infinite at s={s_max}")
    if not diverges(tol / 4):
        return 0.0
    lo = tol / 4
    while hi - lo > tol / 2:
        mid = 0.5 * (lo + hi)
        if diverges(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
