"""Affine graph-directed systems, their validation and perturbed families."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .graph import DirectedMultigraph, enumerate_words
from .linalg import min_quasiregular_K, singular_values
from .pressure import TailRule

__all__ = [
    "SpecError",
    "SpecSyntaxError",
    "SpecValidationError",
    "AffineMap",
    "Box",
    "AffineSystem",
    "PerturbedFamily",
    "ValidationReport",
    "validate",
    "family_at",
    "QuasiregularityReport",
    "quasiregularity_report",
    "loglog_slope",
]


class SpecError(Exception):
    """Base class for problems with a system description."""


class SpecSyntaxError(SpecError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class SpecValidationError(SpecError):
    def __init__(self, message, edge=None, line=None):
        self.edge = edge
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class AffineMap:
    """``x -> linear @ x + offset``."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        M = np.array(self.linear, dtype=float, ndmin=2)
        a = np.array(self.offset, dtype=float, ndmin=1)
        if M.shape != (a.size, a.size):
            raise ValueError(f"linear part {M.shape} does not match offset of size {a.size}")
        M.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "linear", M)
        object.__setattr__(self, "offset", a)

    @property
    def dim(self) -> int:
        return self.offset.size

    def __call__(self, x):
        return np.asarray(x) @ self.linear.T + self.offset

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self o inner``."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.offset + self.offset)

    def image_box(self, box: "Box") -> "Box":
        c = self(box.center)
        h = np.abs(self.linear) @ box.half_widths
        return Box(c - h, c + h)

    def fixed_point(self) -> np.ndarray:
        return np.linalg.solve(np.eye(self.dim) - self.linear, self.offset)


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[low, high]``."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        lo = np.array(self.low, dtype=float, ndmin=1)
        hi = np.array(self.high, dtype=float, ndmin=1)
        if lo.shape != hi.shape:
            raise ValueError("box corners differ in dimension")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    @property
    def dim(self) -> int:
        return self.low.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.low + self.high)

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (self.high - self.low)

    @property
    def nonempty_interior(self) -> bool:
        return bool(np.all(self.low < self.high))

    def contains_box(self, other: "Box", rtol: float = 1e-12) -> bool:
        slack = rtol * max(1.0, float(np.max(np.abs(self.high - self.low))))
        return bool(np.all(other.low >= self.low - slack) and np.all(other.high <= self.high + slack))

    def contains_box_strictly(self, other: "Box") -> bool:
        return bool(np.all(other.low > self.low) and np.all(other.high < self.high))

    def contains_points(self, pts, atol: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.low - atol) & (pts <= self.high + atol), axis=1)

    def distance(self, other: "Box") -> float:
        gap = np.maximum(0.0, np.maximum(other.low - self.high, self.low - other.high))
        return float(np.sqrt(gap @ gap))

    def interiors_overlap(self, other: "Box") -> bool:
        return bool(np.all(np.minimum(self.high, other.high) > np.maximum(self.low, other.low)))


def _check_map(e: str, T: AffineMap, line=None) -> float:
    if not np.all(np.isfinite(T.linear)) or not np.all(np.isfinite(T.offset)):
        raise SpecValidationError(f"edge {e}: non-finite map entries", edge=e, line=line)
    sv = singular_values(T.linear)
    if sv[-1] <= 0.0:
        raise SpecValidationError(f"edge {e}: non-invertible linear part", edge=e, line=line)
    if sv[0] >= 1.0:
        raise SpecValidationError(
            f"edge {e}: not a contraction (operator norm {sv[0]:.6g})", edge=e, line=line
        )
    return float(sv[0])


@dataclass(frozen=True)
class AffineSystem:
    """Graph-directed system of affine contractions with box seed sets.

    Construction enforces what every downstream computation needs: matching
    dimensions, a map per edge, invertible contracting linear parts. The
    geometric conditions on the boxes are checked by :func:`validate`.
    """

    dim: int
    graph: DirectedMultigraph
    maps: Mapping[str, AffineMap]
    seed: Mapping[str, Box]
    domain: Mapping[str, Box]
    tail: TailRule | None = None
    name: str = "system"
    ratio: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "maps", dict(self.maps))
        object.__setattr__(self, "seed", dict(self.seed))
        object.__setattr__(self, "domain", dict(self.domain))
        for v in self.graph.vertices:
            for kind, boxes in (("J", self.seed), ("O", self.domain)):
                if v not in boxes:
                    raise SpecValidationError(f"vertex {v}: missing {kind} box")
                if boxes[v].dim != self.dim:
                    raise SpecValidationError(f"vertex {v}: {kind} box has wrong dimension")
        r = 0.0
        for e in self.graph.edges:
            if e not in self.maps:
                raise SpecValidationError(f"edge {e}: missing map", edge=e)
            T = self.maps[e]
            if T.dim != self.dim:
                raise SpecValidationError(f"edge {e}: dimension mismatch", edge=e)
            r = max(r, _check_map(e, T))
        object.__setattr__(self, "ratio", r)

    def word_map(self, w: Sequence[str]) -> AffineMap:
        """``T_{w_0} o ... o T_{w_{k-1}}``."""
        T = self.maps[w[0]]
        for e in w[1:]:
            T = T.compose(self.maps[e])
        return T

    def word_box(self, w: Sequence[str]) -> Box:
        return self.word_map(w).image_box(self.seed[self.graph.terminal[w[-1]]])

    def with_maps(self, maps: Mapping[str, AffineMap], name=None) -> "AffineSystem":
        return AffineSystem(self.dim, self.graph, maps, self.seed, self.domain, self.tail, name or self.name)


@dataclass
class ValidationReport:
    ratio: float
    seed_interiors: bool  # J_v non-empty interior, pairwise disjoint interiors
    seed_in_domain: bool  # J_v inside O_v
    image_inclusion: bool  # T_e(J_t(e)) in J_i(e) and T_e(O_t(e)) in O_i(e)
    separation: dict  # (e, e') -> lower bound on Delta(e, e')
    ssc: bool
    osc: bool
    depth: int
    failures: list = field(default_factory=list)
    ssc_offenders: list = field(default_factory=list)

    @property
    def hard_ok(self) -> bool:
        return self.seed_interiors and self.seed_in_domain and self.image_inclusion and self.ratio < 1

    @property
    def min_separation(self) -> float:
        return min(self.separation.values()) if self.separation else math.inf


def _prefix_words(g: DirectedMultigraph, e: str, depth: int):
    if depth == 1:
        return [(e,)]
    return [w for w in enumerate_words(g, depth) if w[0] == e]


def validate(sys: AffineSystem, depth: int = 1) -> ValidationReport:
    """Check the box conditions and estimate separation at word depth ``depth``.

    ``Delta(e, e')`` is bounded below by the smallest distance between the
    image boxes of all admissible words of length ``depth`` starting with
    ``e`` and ``e'``. The bound is conservative and grows with ``depth``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    g = sys.graph
    failures = []

    interiors = True
    for v in g.vertices:
        if not sys.seed[v].nonempty_interior:
            interiors = False
            failures.append(f"J[{v}] has empty interior")
    for u, v in itertools.combinations(g.vertices, 2):
        if sys.seed[u].interiors_overlap(sys.seed[v]):
            interiors = False
            failures.append(f"J[{u}] and J[{v}] have overlapping interiors")

    in_domain = True
    for v in g.vertices:
        if not sys.domain[v].contains_box_strictly(sys.seed[v]):
            in_domain = False
            failures.append(f"J[{v}] is not inside the open set O[{v}]")

    inclusion = True
    for e in g.edges:
        T = sys.maps[e]
        u, v = g.initial[e], g.terminal[e]
        if not sys.seed[u].contains_box(T.image_box(sys.seed[v])):
            inclusion = False
            failures.append(f"edge {e}: image of J[{v}] leaves J[{u}]")
        if not sys.domain[u].contains_box(T.image_box(sys.domain[v])):
            inclusion = False
            failures.append(f"edge {e}: image of O[{v}] leaves O[{u}]")

    if sys.ratio >= 1:
        failures.append("maps are not uniformly contracting")

    boxes = {e: [sys.word_box(w) for w in _prefix_words(g, e, depth)] for e in g.edges}
    separation = {}
    offenders = []
    osc = True
    for e, e2 in itertools.combinations(g.edges, 2):
        d = min(b1.distance(b2) for b1 in boxes[e] for b2 in boxes[e2])
        separation[(e, e2)] = d
        if d <= 0:
            offenders.append((e, e2))
        first = sys.maps[e].image_box(sys.seed[g.terminal[e]])
        second = sys.maps[e2].image_box(sys.seed[g.terminal[e2]])
        if first.interiors_overlap(second):
            osc = False
    return ValidationReport(
        ratio=sys.ratio,
        seed_interiors=interiors,
        seed_in_domain=in_domain,
        image_inclusion=inclusion,
        separation=separation,
        ssc=not offenders,
        osc=osc,
        depth=depth,
        failures=failures,
        ssc_offenders=offenders,
    )


# ---------------------------------------------------------------------------
# perturbed families

_SCAN_GRID = np.linspace(0.0, 1.0, 201)


@dataclass(frozen=True)
class PerturbedFamily:
    """``M_e(eps) = M_e + sum_k M_{e,k} eps^k`` and likewise for offsets.

    ``coeffs[e]`` lists ``(M_{e,k}, a_{e,k})`` for ``k = 1..order``. An
    optional ``evaluator(edge, eps) -> AffineMap`` takes precedence over the
    polynomial when present (exact closed-form families).
    """

    order: int
    base: AffineSystem
    coeffs: Mapping[str, Sequence[tuple[np.ndarray, np.ndarray]]]
    evaluator: Callable[[str, float], AffineMap] | None = None
    eps_max: float = field(init=False)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        coeffs = {}
        d = self.base.dim
        for e in self.base.graph.edges:
            terms = list(self.coeffs.get(e, []))
            if len(terms) > self.order:
                raise SpecValidationError(f"edge {e}: more coefficients than order {self.order}", edge=e)
            terms += [(np.zeros((d, d)), np.zeros(d))] * (self.order - len(terms))
            coeffs[e] = tuple(
                (np.array(M, dtype=float).reshape(d, d), np.array(a, dtype=float).reshape(d))
                for M, a in terms
            )
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "eps_max", self._scan_validity(_SCAN_GRID))

    def map_at(self, e: str, eps: float) -> AffineMap:
        if self.evaluator is not None:
            return self.evaluator(e, eps)
        T = self.base.maps[e]
        M = np.array(T.linear)
        a = np.array(T.offset)
        p = 1.0
        for Mk, ak in self.coeffs[e]:
            p *= eps
            M = M + Mk * p
            a = a + ak * p
        return AffineMap(M, a)

    def _ok(self, eps: float) -> bool:
        for e in self.base.graph.edges:
            sv = singular_values(self.map_at(e, eps).linear)
            if not (sv[-1] > 0 and sv[0] < 1):
                return False
        return True

    def _scan_validity(self, grid) -> float:
        last = 0.0
        for eps in grid:
            if not self._ok(eps):
                break
            last = float(eps)
        return last

    def validity_prefix(self, grid: Sequence[float]) -> list:
        """Largest prefix of ``grid`` (in the given order) where every map is valid."""
        out = []
        for eps in grid:
            if not self._ok(eps):
                break
            out.append(eps)
        return out

    def is_constant(self) -> bool:
        return self.evaluator is None and all(
            not np.any(Mk) and not np.any(ak) for terms in self.coeffs.values() for Mk, ak in terms
        )


def family_at(fam: PerturbedFamily, eps: float) -> AffineSystem:
    """The system with every map evaluated at ``eps``.

    ``eps = 0`` returns the base system itself.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0:
        return fam.base
    if eps > fam.eps_max:
        raise SpecValidationError(f"eps={eps} is outside the validity range [0, {fam.eps_max}]")
    maps = {e: fam.map_at(e, eps) for e in fam.base.graph.edges}
    return fam.base.with_maps(maps, name=f"{fam.base.name}@{eps:g}")


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its standard error."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        return math.nan, math.nan
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[0])
    if lx.size > 2:
        resid = ly - A @ coef
        s2 = resid @ resid / (lx.size - 2)
        stderr = float(np.sqrt(s2 / np.sum((lx - lx.mean()) ** 2)))
    else:
        stderr = 0.0
    return slope, stderr


@dataclass
class QuasiregularityReport:
    grid: list
    K: list
    slope: float
    stderr: float
    exactly_conformal: bool

    def satisfies_order(self, n: int, margin: float = 0.05) -> bool:
        """``K(eps) = 1 + o(eps^n)`` judged from the fitted slope."""
        return self.exactly_conformal or self.slope > n + margin


def quasiregularity_report(fam: PerturbedFamily, grid: Sequence[float], floor: float = 1e-13):
    """``K(eps)`` = worst minimal quasiregularity constant over the edges."""
    grid = [float(x) for x in grid]
    if any(x <= 0 for x in grid):
        raise ValueError("grid must be positive")
    Ks = []
    for eps in grid:
        sys = family_at(fam, eps)
        Ks.append(max(min_quasiregular_K(T.linear) for T in sys.maps.values()))
    excess = np.array(Ks) - 1.0
    keep = excess > floor
    if not np.any(keep):
        return QuasiregularityReport(grid, Ks, math.nan, math.nan, True)
    slope, stderr = loglog_slope(np.array(grid)[keep], excess[keep])
    return QuasiregularityReport(grid, Ks, slope, stderr, False)
