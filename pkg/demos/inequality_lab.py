"""Empirical constants of the interpolation inequalities.

Every parameter set is checked in exact arithmetic before anything is
computed; then ratios LHS/RHS are taken over Gaussian and band-limited
families and under dilation.
"""
from fractions import Fraction

from jmgt import inequalities as iq
from jmgt.exceptions import ConfigurationError

try:
    iq.InequalitySpec.make("GN", j=1, m=2, p=3, q=2, r=2, alpha=Fraction(1, 2))
except ConfigurationError as exc:
    print("rejected:", exc)

for name, (specs, family, dilate) in iq.preregistered_suites().items():
    _, summary = iq.run_suite(specs, family, iq.DEFAULT_GRID, dilate)
    worst = max(summary.items(), key=lambda kv: kv[1][0])
    drift = max(d for _, _, d in summary.values())
    print(f"{name:24s} {len(specs):3d} specs  largest C_hat {worst[1][0]:.4f} "
          f"({worst[0]}, {worst[1][1]})  max drift {drift:.2%}")

# the regularity threshold and how the exponent table sits under its ceilings
from jmgt.experiments import threshold_calculator

s0, table = threshold_calculator(6)
over = [(r[0], r[1], r[2]) for r in table if not r[5]]
print(f"\ns = 6: s0 = {s0}; entries above their ceiling: {over}")
