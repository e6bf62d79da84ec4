"""Directed multigraphs, admissible words and finite irreducibility."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "DirectedMultigraph",
    "IrreducibilityReport",
    "admissible",
    "enumerate_words",
    "is_finitely_irreducible",
    "full_shift",
]


@dataclass(frozen=True)
class DirectedMultigraph:
    """Finite directed multigraph ``(V, E, i, t)``.

    Edges keep their declaration order; that order is the lexicographic
    order used by word enumeration.
    """

    vertices: tuple[str, ...]
    edges: tuple[str, ...]
    initial: Mapping[str, str]
    terminal: Mapping[str, str]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "initial", dict(self.initial))
        object.__setattr__(self, "terminal", dict(self.terminal))
        if not self.edges:
            raise ValueError("graph needs at least one edge")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex names")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edge names")
        vs = set(self.vertices)
        for e in self.edges:
            for role, ends in (("initial", self.initial), ("terminal", self.terminal)):
                if e not in ends:
                    raise ValueError(f"edge {e!r} has no {role} vertex")
                if ends[e] not in vs:
                    raise ValueError(f"edge {e!r}: unknown {role} vertex {ends[e]!r}")
        object.__setattr__(self, "_index", {e: k for k, e in enumerate(self.edges)})

    @classmethod
    def from_edges(cls, edges: Sequence[tuple[str, str, str]], vertices=None):
        """Build from ``(name, from, to)`` triples."""
        if vertices is None:
            vertices = []
            for _, u, v in edges:
                for x in (u, v):
                    if x not in vertices:
                        vertices.append(x)
        return cls(
            vertices=tuple(vertices),
            edges=tuple(e for e, _, _ in edges),
            initial={e: u for e, u, _ in edges},
            terminal={e: v for e, _, v in edges},
        )

    def edge_index(self, e: str) -> int:
        try:
            return self._index[e]
        except KeyError:
            raise KeyError(f"unknown edge {e!r}") from None

    def vertex_index(self, v: str) -> int:
        return self.vertices.index(v)

    def incidence_matrix(self) -> np.ndarray:
        """Edge-indexed 0-1 matrix with ``A[e, e'] = 1`` iff ``t(e) = i(e')``."""
        t = np.array([self.terminal[e] for e in self.edges], dtype=object)
        i = np.array([self.initial[e] for e in self.edges], dtype=object)
        return (t[:, None] == i[None, :]).astype(int)

    def successors(self, e: str) -> list[str]:
        v = self.terminal[e]
        return [f for f in self.edges if self.initial[f] == v]

    def out_edges(self, v: str) -> list[str]:
        return [e for e in self.edges if self.initial[e] == v]

    def in_edges(self, v: str) -> list[str]:
        return [e for e in self.edges if self.terminal[e] == v]

    def subgraph(self, keep: Sequence[str]) -> "DirectedMultigraph":
        keep_set = set(keep)
        kept = [e for e in self.edges if e in keep_set]
        return DirectedMultigraph(
            self.vertices,
            tuple(kept),
            {e: self.initial[e] for e in kept},
            {e: self.terminal[e] for e in kept},
        )


def full_shift(n_edges: int, prefix: str = "e") -> DirectedMultigraph:
    """One vertex carrying ``n_edges`` self-loops."""
    return DirectedMultigraph.from_edges(
        [(f"{prefix}{k}", "v", "v") for k in range(n_edges)], vertices=["v"]
    )


def admissible(g: DirectedMultigraph, e: str, e2: str) -> bool:
    """True iff ``e`` may be followed by ``e2``, i.e. ``t(e) = i(e2)``."""
    g.edge_index(e)
    g.edge_index(e2)
    return g.terminal[e] == g.initial[e2]


def enumerate_words(g: DirectedMultigraph, n: int) -> Iterator[tuple[str, ...]]:
    """Yield every admissible word of length ``n`` once, lexicographically.

    The stream is produced by depth-first search, so memory stays linear
    in ``n``.
    """
    if n < 1:
        raise ValueError("word length must be >= 1")
    succ = {e: g.successors(e) for e in g.edges}
    word: list[str] = []
    stack = [iter(g.edges)]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if word:
                word.pop()
            continue
        word.append(nxt)
        if len(word) == n:
            yield tuple(word)
            word.pop()
        else:
            stack.append(iter(succ[nxt]))


@dataclass
class IrreducibilityReport:
    verdict: bool
    witnesses: dict  # (e, e') -> connecting word (possibly empty tuple)
    failing: list
    max_len: int

    @property
    def witness_set(self) -> set:
        """The finite set ``F`` of non-empty connecting words."""
        return {w for w in self.witnesses.values() if w}


def is_finitely_irreducible(g: DirectedMultigraph, max_len: int) -> IrreducibilityReport:
    """Search a shortest word ``w`` with ``e w e'`` a path for every pair.

    A pair that is directly admissible gets the empty word. Words longer
    than ``max_len`` are not searched, so a ``False`` verdict only means no
    witness exists up to that length.
    """
    succ = {e: g.successors(e) for e in g.edges}
    witnesses: dict = {}
    failing = []
    for e in g.edges:
        # breadth-first search over middle words, starting after e
        parent: dict = {}
        frontier = deque()
        found: dict = {}
        for f in succ[e]:
            found.setdefault(f, ())
        for f in succ[e]:
            if f not in parent:
                parent[f] = None
                frontier.append((f, 1))
        while frontier:
            f, depth = frontier.popleft()
            path = []
            x = f
            while x is not None:
                path.append(x)
                x = parent[x]
            middle = tuple(reversed(path))
            for h in succ[f]:
                if h not in found:
                    found[h] = middle
            if depth < max_len:
                for h in succ[f]:
                    if h not in parent:
                        parent[h] = f
                        frontier.append((h, depth + 1))
        for e2 in g.edges:
            if e2 in found:
                witnesses[(e, e2)] = found[e2]
            else:
                failing.append((e, e2))
    return IrreducibilityReport(not failing, witnesses, failing, max_len)
