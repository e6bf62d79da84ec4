"""
Infinitely many maps
====================

A loop with norm 1 plus a tail of loops with norms k^-2. Finite pieces
have finite pressure for every s; the whole family only for s > 1/2.
"""

from gifsdim import DirectedMultigraph
from gifsdim.pressure import CountableSystem, TailRule, finiteness_threshold, pressure_truncated

g = DirectedMultigraph.from_edges([("k1", "v", "v")])
sys = CountableSystem(g, {"k1": 0.0}, TailRule("polynomial", exponent=2, start=2))

levels = [1, 10, 100, 1000, 10_000]
for s in (0.4, 0.6, 1.0):
    tr = pressure_truncated(sys, s, levels)
    vals = ", ".join(f"{p.value:.4f}" for p in tr.values)
    print(f"s={s}: {vals}  diverged={tr.diverged}  bound={tr.upper_bound:.4f}")

print("finiteness threshold:", finiteness_threshold(sys))
