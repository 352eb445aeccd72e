"""From face weights to spectral constants.

A Boltzmann planar map weights each non-root face of degree k by q_k.
This demo solves several weight sequences for the support endpoints
(c_plus, c_minus) of the pointed-disk generating function, classifies
them, and cross-checks the solution against the independent
mobile-counting fixed point.
"""

from fractions import Fraction

from peelkit import (
    WeightSequence,
    miermont_check,
    preset_by_alias,
    solve_boltzmann,
    tune_critical,
    validate,
)

# --- the classic families ----------------------------------------------------

for name in ("quadrangulation", "triangulation", "uniform"):
    res = preset_by_alias(name)
    cd = solve_boltzmann(res.weights)
    print(f"{name:15s} c+ = {cd.c_plus:.12f}  r = {cd.r:.12f}  "
          f"margin = {cd.margin:+.2e}  -> {cd.classification}")

# closed forms for comparison: quadrangulations have c+ = sqrt(8), r = 1;
# triangulations c+ = sqrt(6 + 4 sqrt 3), r = 2 sqrt(3) - 3.

# --- an arbitrary sequence ---------------------------------------------------

q = WeightSequence({3: Fraction(1, 10), 4: Fraction(1, 50)})
print("\nvalidation:", validate(q))
cd = solve_boltzmann(q)
print(f"mixed q: c+ = {cd.c_plus:.6f}, margin = {cd.margin:.6f} "
      f"({cd.classification})")

# scale the same shape onto the admissibility boundary
shape = WeightSequence({3: Fraction(1), 4: Fraction(1, 5)})
tuned = tune_critical(shape)
print(f"\nboundary scale for {{3: 1, 4: 1/5}}: t* = {tuned.t_star:.12e}")
print(f"critical constants there: c+ = {tuned.data.c_plus:.10f}, "
      f"r = {tuned.data.r:.10f}")

# --- the independent cross-check ---------------------------------------------

rep = miermont_check(shape.scaled(tuned.t_star), tuned.data)
print("\nmobile-counting fixed point residuals:",
      f"{rep.f_dot_residual:.2e}, {rep.f_diamond_residual:.2e}")
print(f"stability scalar A1 + 2 sqrt(z+) A0 = {rep.scalar:.12f} "
      "(equals 1 exactly at criticality)")
