"""Geometric ground truth: chaos-game sampling and box counting.

Random numbers come from numpy's Philox counter-based generator. Chain
``c`` of a run with seed ``s`` uses ``Philox(SeedSequence([s, c]))``, so a
chain's stream depends only on ``(s, c)`` and clouds are reproducible no
matter how chains are scheduled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import op_norm
from .model import AffineSystem, PerturbedFamily, family_at, loglog_slope

__all__ = [
    "PointCloud",
    "BoxCountReport",
    "chain_generator",
    "chaos_game",
    "coding_point",
    "periodic_point",
    "box_count_dim",
    "default_scales",
    "CodingPerturbationReport",
    "coding_perturbation_check",
]


@dataclass(frozen=True)
class PointCloud:
    dim: int
    points: np.ndarray
    vertices: np.ndarray  # vertex label per point
    seed: int
    chains: int

    def __len__(self):
        return self.points.shape[0]

    def to_csv(self, path) -> None:
        header = ",".join([f"x{k + 1}" for k in range(self.dim)] + ["vertex"])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for p, v in zip(self.points, self.vertices):
                fh.write(",".join(repr(float(x)) for x in p) + f",{v}\n")


def chain_generator(seed: int, chain: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chain])))


def chaos_game(
    sys: AffineSystem,
    n_points: int,
    burn_in: int = 64,
    seed: int = 0,
    chains: int = 64,
) -> PointCloud:
    """Sample the limit set by random walks on the edges.

    A chain sitting at vertex ``v`` picks an edge ``e`` with ``t(e) = v``
    uniformly, applies ``T_e`` and moves to ``i(e)``. All chains start at
    the centre of the first vertex's seed box and drop ``burn_in`` steps.
    The uniform choice is not the natural measure; densities are biased,
    supports are not.
    """
    g = sys.graph
    incoming = {v: [g.edge_index(e) for e in g.in_edges(v)] for v in g.vertices}
    for v, lst in incoming.items():
        if not lst:
            raise ValueError(f"not right-resolving: no edge ends at vertex {v!r}")
    chains = max(1, min(chains, n_points))
    per_chain = -(-n_points // chains)
    steps = burn_in + per_chain
    d = sys.dim
    nv = len(g.vertices)
    Ms = np.stack([sys.maps[e].linear for e in g.edges])
    As = np.stack([sys.maps[e].offset for e in g.edges])
    src = np.array([g.vertex_index(g.initial[e]) for e in g.edges])
    # incoming edge table padded per vertex
    width = max(len(v) for v in incoming.values())
    table = np.zeros((nv, width), dtype=int)
    counts = np.zeros(nv, dtype=int)
    for k, v in enumerate(g.vertices):
        table[k, : len(incoming[v])] = incoming[v]
        counts[k] = len(incoming[v])

    u = np.stack([chain_generator(seed, c).random(steps) for c in range(chains)])
    x = np.tile(sys.seed[g.vertices[0]].center, (chains, 1))
    vert = np.zeros(chains, dtype=int)
    pts = np.empty((chains, per_chain, d))
    labs = np.empty((chains, per_chain), dtype=int)
    for step in range(steps):
        pick = np.minimum((u[:, step] * counts[vert]).astype(int), counts[vert] - 1)
        e = table[vert, pick]
        x = np.einsum("cij,cj->ci", Ms[e], x) + As[e]
        vert = src[e]
        if step >= burn_in:
            pts[:, step - burn_in] = x
            labs[:, step - burn_in] = vert
    pts = pts.reshape(-1, d)[:n_points]
    names = np.array(g.vertices, dtype=object)[labs.reshape(-1)[:n_points]]
    return PointCloud(d, pts, names, seed, chains)


def periodic_point(sys: AffineSystem, w: Sequence[str]) -> np.ndarray:
    """Coding point of the periodic code ``w w w ...`` (fixed point of ``T_w``)."""
    g = sys.graph
    if g.terminal[w[-1]] != g.initial[w[0]]:
        raise ValueError("word is not a cycle")
    return sys.word_map(w).fixed_point()


def coding_point(sys: AffineSystem, w: Sequence[str], reps: int = 1) -> np.ndarray:
    """``T_w^reps`` applied to the centre of the seed box of ``t(w)``."""
    g = sys.graph
    w = tuple(w)
    for a, b in zip(w, w[1:]):
        if g.terminal[a] != g.initial[b]:
            raise ValueError(f"word not admissible at {a}{b}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if reps > 1 and g.terminal[w[-1]] != g.initial[w[0]]:
        raise ValueError("word is not a cycle; reps must be 1")
    T = sys.word_map(w)
    x = sys.seed[g.terminal[w[-1]]].center
    for _ in range(reps):
        x = T(x)
    return x


@dataclass
class BoxCountReport:
    scales: list
    counts: list
    slope: float
    stderr: float
    warnings: list = field(default_factory=list)


def default_scales(sys: AffineSystem, levels: int = 8) -> list:
    """Dyadic box sizes ``L/2, ..., L/2**levels`` with ``L`` the seed extent."""
    lows = np.min([b.low for b in sys.seed.values()], axis=0)
    highs = np.max([b.high for b in sys.seed.values()], axis=0)
    L = float(np.max(highs - lows))
    return [L * 2.0**-k for k in range(1, levels + 1)]


def box_count_dim(cloud: PointCloud, scales: Sequence[float], anchor=None) -> BoxCountReport:
    """Slope of ``log N(delta)`` against ``-log delta`` with its standard error.

    Boxes form a grid anchored at ``anchor`` (the seed-box lower corner when
    called through the CLI; the cloud minimum otherwise).
    """
    pts = np.asarray(cloud.points)
    notes = []
    if pts.shape[0] < 10_000:
        notes.append(f"only {pts.shape[0]} points; estimate is unreliable")
    scales = sorted((float(s) for s in scales), reverse=True)
    if len(scales) < 4 or scales[0] / scales[-1] < 4:
        notes.append("fewer than 4 scales or less than 2 octaves")
    origin = pts.min(axis=0) if anchor is None else np.asarray(anchor, dtype=float)
    counts = []
    for s in scales:
        cells = np.floor((pts - origin) / s).astype(np.int64)
        counts.append(int(np.unique(cells, axis=0).shape[0]))
    for w in notes:
        warnings.warn(w, stacklevel=2)
    if counts[-1] <= 1:
        notes.append("degenerate cloud: all points in one box at the finest scale")
        warnings.warn(notes[-1], stacklevel=2)
        return BoxCountReport(scales, counts, 0.0, 0.0, notes)
    slope, stderr = loglog_slope(1.0 / np.array(scales), np.array(counts, dtype=float))
    return BoxCountReport(scales, counts, max(slope, 0.0), stderr, notes)


@dataclass
class CodingPerturbationReport:
    grid: list
    deviations: list
    slope: float
    stderr: float


def _coding_value(sys: AffineSystem, w, tol=1e-12):
    g = sys.graph
    if g.terminal[w[-1]] == g.initial[w[0]]:
        return periodic_point(sys, w)
    # non-cyclic word: long enough prefixes already pin the point down
    r = max(op_norm(T.linear) for T in sys.maps.values())
    if r ** len(w) > tol:
        warnings.warn("word too short for the requested truncation error", stacklevel=3)
    return coding_point(sys, w, 1)


def coding_perturbation_check(
    fam: PerturbedFamily,
    grid: Sequence[float],
    sample_words: Sequence[Sequence[str]],
) -> CodingPerturbationReport:
    """``max_w |pi(eps, w) - pi(0, w)|`` over the grid and its log-log slope.

    Cyclic words are evaluated exactly as periodic points; other words are
    pushed through their maps from the seed-box centre.
    """
    base = [_coding_value(fam.base, w) for w in sample_words]
    devs = []
    for eps in grid:
        sys = family_at(fam, eps)
        devs.append(
            max(float(np.linalg.norm(_coding_value(sys, w) - b)) for w, b in zip(sample_words, base))
        )
    devs_arr = np.array(devs)
    keep = devs_arr > 0
    if keep.sum() >= 2:
        slope, stderr = loglog_slope(np.array(grid)[keep], devs_arr[keep])
    else:
        slope, stderr = math.nan, math.nan
    return CodingPerturbationReport(list(grid), devs, slope, stderr)
