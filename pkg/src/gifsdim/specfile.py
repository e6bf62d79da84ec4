"""Reader and writer for the line-oriented system description format.

::

    gifs 1 dim=2 order=0
    vertex v J=0,0|1,1 O=-0.5,-0.5|1.5,1.5
    edge e0 v v
    map e0 k=0 M=0.5,0,0,0.25 a=0,0
    tail polynomial scale=1 exponent=2 start=1

``#`` starts a comment. ``k=0`` lines give the base map of an edge and
``k>=1`` lines the perturbation coefficients. A file with ``order=0`` loads
as an :class:`AffineSystem`, anything else as a :class:`PerturbedFamily`.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .graph import DirectedMultigraph
from .model import (
    AffineMap,
    AffineSystem,
    Box,
    PerturbedFamily,
    SpecSyntaxError,
    SpecValidationError,
    _check_map,
)
from .pressure import TailRule

__all__ = ["load_spec", "parse_spec", "dump_spec", "SUPPORTED_VERSIONS"]

SUPPORTED_VERSIONS = ("1",)


def _numbers(text, lineno, fieldname, count=None):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise SpecSyntaxError(f"malformed number in {text!r}", lineno, fieldname) from None
    if count is not None and len(vals) != count:
        raise SpecSyntaxError(f"expected {count} numbers, got {len(vals)}", lineno, fieldname)
    return vals


def _keyvals(tokens, lineno):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise SpecSyntaxError(f"expected key=value, got {tok!r}", lineno)
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _box(text, lineno, fieldname, dim):
    if "|" not in text:
        raise SpecSyntaxError("box must be low|high", lineno, fieldname)
    lo, hi = text.split("|", 1)
    return Box(_numbers(lo, lineno, fieldname, dim), _numbers(hi, lineno, fieldname, dim))


def parse_spec(text: str, name: str = "system"):
    """Parse a description from a string; see :func:`load_spec`."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    if not lines or lines[0][1][0] != "gifs":
        raise SpecSyntaxError("missing 'gifs' header", lines[0][0] if lines else 1)

    lineno, head = lines[0]
    if len(head) < 2 or head[1] not in SUPPORTED_VERSIONS:
        raise SpecSyntaxError("unsupported or missing version", lineno, "version")
    kv = _keyvals(head[2:], lineno)
    try:
        dim = int(kv["dim"])
        order = int(kv.get("order", "0"))
    except KeyError:
        raise SpecSyntaxError("header needs dim=<D>", lineno, "dim") from None
    except ValueError:
        raise SpecSyntaxError("dim/order must be integers", lineno, "dim") from None
    if not 1 <= dim <= 8 or order < 0:
        raise SpecSyntaxError("dim must be in 1..8 and order >= 0", lineno, "dim")

    seeds, domains, vertices = {}, {}, []
    edges = []
    edge_line = {}
    maps: dict = {}
    tail = None
    for lineno, toks in lines[1:]:
        kind = toks[0]
        if kind == "vertex":
            if len(toks) < 3:
                raise SpecSyntaxError("vertex needs a name and J=", lineno)
            v = toks[1]
            kvv = _keyvals(toks[2:], lineno)
            if "J" not in kvv:
                raise SpecSyntaxError("vertex needs J=", lineno, "J")
            seeds[v] = _box(kvv["J"], lineno, "J", dim)
            if "O" in kvv:
                domains[v] = _box(kvv["O"], lineno, "O", dim)
            else:
                raise SpecSyntaxError("vertex needs O=", lineno, "O")
            vertices.append(v)
        elif kind == "edge":
            if len(toks) != 4:
                raise SpecSyntaxError("edge line is 'edge <name> <from> <to>'", lineno)
            edges.append((toks[1], toks[2], toks[3]))
            edge_line[toks[1]] = lineno
        elif kind == "map":
            if len(toks) < 3:
                raise SpecSyntaxError("map line needs an edge and fields", lineno)
            e = toks[1]
            kvm = _keyvals(toks[2:], lineno)
            for req in ("k", "M", "a"):
                if req not in kvm:
                    raise SpecSyntaxError(f"map needs {req}=", lineno, req)
            try:
                k = int(kvm["k"])
            except ValueError:
                raise SpecSyntaxError("k must be an integer", lineno, "k") from None
            if not 0 <= k <= order:
                raise SpecSyntaxError(f"k={k} outside 0..{order}", lineno, "k")
            M = np.array(_numbers(kvm["M"], lineno, "M", dim * dim)).reshape(dim, dim)
            a = np.array(_numbers(kvm["a"], lineno, "a", dim))
            if (e, k) in maps:
                raise SpecSyntaxError(f"duplicate map for edge {e} k={k}", lineno, "k")
            maps[(e, k)] = (M, a, lineno)
        elif kind == "tail":
            if len(toks) < 2:
                raise SpecSyntaxError("tail needs a rule", lineno)
            kvt = _keyvals(toks[2:], lineno)
            params = {}
            try:
                for key in ("scale", "exponent", "ratio"):
                    if key in kvt:
                        params[key] = float(kvt[key])
                if "start" in kvt:
                    params["start"] = int(kvt["start"])
            except ValueError:
                raise SpecSyntaxError("malformed tail parameter", lineno) from None
            if "vertex" in kvt:
                params["vertex"] = kvt["vertex"]
            try:
                tail = TailRule(toks[1], **params)
            except (TypeError, ValueError) as exc:
                raise SpecSyntaxError(str(exc), lineno, "tail") from None
        else:
            raise SpecSyntaxError(f"unknown line type {kind!r}", lineno)

    if not edges:
        raise SpecSyntaxError("no edges declared", lines[-1][0])
    try:
        graph = DirectedMultigraph.from_edges(edges, vertices=vertices)
    except ValueError as exc:
        raise SpecValidationError(str(exc)) from None
    known = set(graph.edges)
    for (e, k), (_, _, ln) in maps.items():
        if e not in known:
            raise SpecSyntaxError(f"map for unknown edge {e!r}", ln, "edge")
    if tail is not None and tail.vertex is not None and tail.vertex not in vertices:
        raise SpecValidationError(f"tail vertex {tail.vertex!r} is not declared")

    base = {}
    for e in graph.edges:
        if (e, 0) not in maps:
            raise SpecValidationError(f"edge {e}: missing map", edge=e, line=edge_line[e])
        M, a, ln = maps[(e, 0)]
        T = AffineMap(M, a)
        _check_map(e, T, line=ln)
        base[e] = T
    sys = AffineSystem(dim, graph, base, seeds, domains, tail=tail, name=name)
    if order == 0:
        return sys
    coeffs = {
        e: [maps.get((e, k), (np.zeros((dim, dim)), np.zeros(dim), None))[:2] for k in range(1, order + 1)]
        for e in graph.edges
    }
    return PerturbedFamily(order, sys, coeffs)


def load_spec(path):
    """Load an :class:`AffineSystem` or :class:`PerturbedFamily` from a file.

    Raises
    ------
    SpecSyntaxError
        The text does not follow the grammar (carries line and field).
    SpecValidationError
        A map is singular or not a contraction, or an edge has no map.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_spec(text, name=path.stem)


def _fmt(values) -> str:
    return ",".join(repr(float(x)) for x in np.ravel(values))


def dump_spec(obj, path=None) -> str:
    """Serialise a system or family; numbers round-trip exactly."""
    if isinstance(obj, PerturbedFamily):
        sys, order, coeffs = obj.base, obj.order, obj.coeffs
    else:
        sys, order, coeffs = obj, 0, {}
    out = [f"gifs 1 dim={sys.dim} order={order}"]
    for v in sys.graph.vertices:
        J, O = sys.seed[v], sys.domain[v]
        out.append(f"vertex {v} J={_fmt(J.low)}|{_fmt(J.high)} O={_fmt(O.low)}|{_fmt(O.high)}")
    for e in sys.graph.edges:
        out.append(f"edge {e} {sys.graph.initial[e]} {sys.graph.terminal[e]}")
    for e in sys.graph.edges:
        T = sys.maps[e]
        out.append(f"map {e} k=0 M={_fmt(T.linear)} a={_fmt(T.offset)}")
        for k, (Mk, ak) in enumerate(coeffs.get(e, ()), start=1):
            out.append(f"map {e} k={k} M={_fmt(Mk)} a={_fmt(ak)}")
    if sys.tail is not None:
        t = sys.tail
        parts = [f"tail {t.rule} scale={t.scale!r}"]
        parts.append(f"exponent={t.exponent!r}" if t.rule == "polynomial" else f"ratio={t.ratio!r}")
        parts.append(f"start={t.start}")
        if t.vertex is not None:
            parts.append(f"vertex={t.vertex}")
        out.append(" ".join(parts))
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def data_path(name: str) -> Path:
    """Path of a bundled description in ``gifsdim/data``."""
    return Path(os.path.dirname(__file__)) / "data" / name
