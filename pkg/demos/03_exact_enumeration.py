"""Exact map counts as the package's ground truth.

Two completely independent enumerations must agree cell by cell: a
dynamic program on the peel-one-edge recursion, graded by root-face
degree, inner degree and face count, and a brute-force scan over dart
rotation systems.  Their agreement anchors every analytic formula.
"""

from fractions import Fraction

from peelkit import (
    brute_force_maps,
    complete_nu,
    disk_coefficient,
    enumerate_dp,
    g_series,
    nu_from_q,
    preset,
    solve_boltzmann,
    volume_tables,
)
from peelkit.weights import WeightSequence

# --- rotation systems versus the loop equation --------------------------------

q_all = WeightSequence({k: Fraction(1) for k in range(1, 9)})
bf = brute_force_maps(q_all, 4)
totals = {}
for (l, D, F), v in bf.items():
    E = (l + D) // 2
    totals[E] = totals.get(E, Fraction(0)) + v
print("rooted planar maps by edge count:", [totals[E] for E in range(5)])

dp = enumerate_dp(q_all, 0, 8)
agree = all(
    dp.cells.get(key, Fraction(0)) == bf.get(key, Fraction(0))
    for key in set(bf) | {k for k in dp.cells if (k[0] + k[1]) // 2 <= 4}
)
print("dart scan == loop-equation table, cell by cell:", agree)

# --- truncated disk weights converge to the walk coefficients ------------------

quad = preset("two_p_angulation", p=2).weights
cd = solve_boltzmann(quad)
law = complete_nu(nu_from_q(quad, cd.c_plus, cd.r), k_neg=16)
print("\ntruncated W(2) lower bounds -> nu(-4) c_+^4 / 2 = 4/3:")
for D in (8, 16, 24, 32, 40):
    tab = enumerate_dp(quad, 2, D)
    print(f"  degree budget {D:2d}: {float(tab.disk_value(2)):.8f}")
print(f"  walk coefficient: {disk_coefficient(law, 2)}")

# --- vertex-graded weights and the fugacity series -----------------------------

vt = volume_tables(quad, 2, 24)
print(f"\nW(2, V) complete up to V* = {vt.V_star}:")
for V in sorted(vt.values)[:5]:
    print(f"  V = {V}: {vt.values[V]}")

gs = g_series(quad, 2, 32)
for g in (0.5, 0.9):
    cd_g = solve_boltzmann(quad, g=g)
    law_g = complete_nu(nu_from_q(quad.deformed(g), cd_g.c_plus, cd_g.r),
                        k_neg=16, critical=False)
    analytic = g**2 * disk_coefficient(law_g, 2)
    print(f"g = {g}: series lower bound {gs.eval(g):.8f} "
          f"<= deformed-solve value {analytic:.8f}")
