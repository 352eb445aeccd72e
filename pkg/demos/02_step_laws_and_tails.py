"""The two-sided walk behind the peeling process.

The positive jumps of the perimeter walk come straight from the face
weights, nu(k) = q_{k+2} c_+^k; the negative jumps are determined by them
through a linear kernel and decay like k^(-5/2).  This demo completes the
law, checks its derived constants, and looks at both tails.
"""

import math

import numpy as np

from peelkit import complete_nu, expected_volume, nu_from_q, preset, solve_boltzmann
from peelkit.walk import harmonic_residual

res = preset("two_p_angulation", p=2)
q = res.weights
cd = solve_boltzmann(q)
law = complete_nu(nu_from_q(q, cd.c_plus, cd.r), k_neg=2048)

print(f"perimeter constant L = {law.L_nu}  (4/3 for quadrangulations)")
print(f"volume constant    B = {law.B_nu}  (1/8)")
print(f"negative jumps: nu(-2) = {law.nu(-2)}, nu(-4) = {law.nu(-4)} (1/24)")

# the decisive structural property: the conditioning functions are
# harmonic for the completed law
worst = max(harmonic_residual(law, 1, k) for k in range(1, 31))
print(f"worst harmonicity residual over k = 1..30: {worst:.2e}")

# tail constant 3 L sqrt(1+r) / (4 sqrt(pi)); odd entries vanish for
# bipartite sequences, so compare parity-averaged values
print("\n    k    k^(5/2) * avg nu(-k)   limit")
for k in (50, 100, 400, 1000):
    avg = 0.5 * (float(law.nu(-k)) + float(law.nu(-k - 1)))
    print(f"{k:5d}    {k**2.5 * avg: .6f}            {law.tail_const:.6f}")

# mean volume of a Boltzmann map with a long boundary grows like B l^2
print("\n    l    E[vertices] / (B l^2)")
for l in (10, 50, 200, 1000):
    law_deep = law if l + 2 <= law.k_neg else complete_nu(
        nu_from_q(q, cd.c_plus, cd.r), k_neg=2 * l
    )
    print(f"{l:5d}    {expected_volume(law_deep, l) / (law.B_nu * l * l):.5f}")

# small-theta expansion of the characteristic function: the 3/2-stable
# signature |theta|^(3/2)
thetas = np.logspace(-2, -1, 5)
phi = law.char_function(thetas)
lead = math.sqrt((1 + law.r) / 2) * law.L_nu
print("\n[phi(t) - 1] / (L sqrt((1+r)/2) t^(3/2)) should approach -(1 - i):")
for t, p in zip(thetas, phi):
    print(f"theta = {t:.4f}: {(p - 1) / (lead * t**1.5): .4f}")
