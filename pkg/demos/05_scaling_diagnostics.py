"""Desk-scale checks of the stable scaling limits.

The rescaled perimeter converges to the 3/2-stable process conditioned to
stay positive, with explicit model-dependent constants; the volume rides
along at exponent 4/3.  Universality means different critical families
collapse onto the same curves once rescaled.
"""

from peelkit import (
    collapse_test,
    complete_nu,
    cplus_slope_test,
    ecf_test,
    exponent_regression,
    nu_from_q,
    preset,
    preset_by_alias,
    solve_boltzmann,
)


def law_of(alias):
    res = preset_by_alias(alias)
    cd = solve_boltzmann(res.weights)
    return complete_nu(nu_from_q(res.weights, cd.c_plus, cd.r))


quad = law_of("quadrangulation")

# --- the unconditioned walk's characteristic function ---------------------------

rep = ecf_test(quad, n=10_000, n_samples=30_000, thetas=(0.5, 1.0, 2.0), seed=1)
print("rescaled-walk ecf against exp(-|t|^(1/2)(|t| - it)/sqrt 2):")
for row in rep.to_report()["rows"]:
    print(f"  theta = {row['theta']}: |diff| = {row['abs_diff']:.4f} "
          f"(MC s.e. {row['std_error']:.4f})")

# --- cross-model collapse --------------------------------------------------------

laws = {name: law_of(name) for name in ("quadrangulation", "triangulation")}
col = collapse_test(laws, n=4000, chains=4000, seed=2)
print("\nrescaled medians at t = 1:")
for name, d in col.models.items():
    med = col.quantiles.index(0.5)
    print(f"  {name:15s} l_hat = {d['l_hat'][0][med]:.4f}  "
          f"v_hat = {d['v_hat'][0][med]:.4f}")
print(f"relative median gaps: perimeter {col.rel_median_gap('l_hat'):.3f}, "
      f"volume {col.rel_median_gap('v_hat'):.3f}")

# --- growth exponents -------------------------------------------------------------

er = exponent_regression(quad, n_values=(1000, 10_000), chains=1024, seed=3)
print(f"\nmedian growth exponents: perimeter {er.perimeter_slope:.3f} (2/3), "
      f"volume {er.volume_slope:.3f} (4/3)")

# --- the fugacity slope, a purely analytic limit -----------------------------------

for alias in ("quadrangulation", "triangulation", "uniform"):
    rep = cplus_slope_test(preset_by_alias(alias).weights)
    print(f"fugacity slope {alias:15s} estimate {rep.estimate:.8f} "
          f"predicted {rep.predicted:.8f}")
