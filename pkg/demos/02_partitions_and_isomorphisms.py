"""Circle partitions, the K permutation, and the slice decomposition of R.

The partition isomorphism K sends the arc [i/q, (i+1)/q) to the annulus
strip at height i*a/q, conjugating rotation by 1/q to rotation by a/q.
Pushing the single arc [0, 1/q_n) through the refined map K_n^{n+1} gives
the set R: q_{n+1}/q_n thin slices that stack into exactly b_{n+1}
connected components.  This file reproduces the worked decomposition with
(q_n, q_{n+1}, a_{n+1}, b_{n+1}) = (2, 20, 7, 3) and renders it as SVG.
"""

from pathlib import Path

from akforge import (build_Kn, build_Rn_raw, brute_force_Rn,
                     verify_fundamental_domain, verify_Kn_diagram)
from akforge.render import render_decomposition

# -- the permutation and its commuting diagram ------------------------------
iso = build_Kn(7, 20)
print("i -> 7i mod 20:", [iso(i) for i in range(8)], "...")
print("conjugacy diagram commutes:", verify_Kn_diagram(iso))
# iterated form: 7*3 = 1 mod 20, so shifting the source by 3*5 rotates the
# image by 5
print("iterated diagram (b=3, p=5):", verify_Kn_diagram(iso, b=3, p=5))

# -- the decomposition -------------------------------------------------------
dec = build_Rn_raw(2, 20, 7, 3)
print(f"\nR = K([0, 1/2)) with {len(dec.components)} components, m_n = {dec.m}:")
for c in dec.components:
    print(f"  l={c.l}: cell k={c.k}, offset r={c.r}, width f={c.f}/20 "
          f"-> [{c.lo(2, 20)}, {c.hi(2, 20)})")
print("total measure:", dec.measure())

# the component form equals the raw union of slices, exactly
oracle = brute_force_Rn(2, 20, 7)
print("matches brute-force slice union:", dec.vertical_set() == oracle)

# R is a fundamental domain: its 1/q_n translates tile the circle
print("translates tile the circle:", verify_fundamental_domain(dec))

# -- figure -------------------------------------------------------------------
out = Path(__file__).with_name("decomposition_2_20_7_3.svg")
out.write_text(render_decomposition(dec))
print("wrote", out.name)
