"""Decay of ||V(t)|| from radial quadrature, exact in time.

Three kinds of data: a low-frequency power law (negative Sobolev regularity
gamma = 1), a flat low-frequency bump and a band away from the origin.  The
first two decay algebraically, the last exponentially.
"""
from jmgt import experiments as ex

cfg = ex.ExperimentConfig(profile="powerlaw-lowfreq", gamma=1.0)
fits, series = ex.decay_experiment(cfg)
for f in fits:
    print(f"power law, {f.band:5s}: exponent {f.exponent:.4f}  "
          f"(gamma/2 = {f.comparisons['gamma_half']}, gamma = {f.comparisons['gamma']}, "
          f"residual {f.residual:.2g})")

fits, _ = ex.decay_experiment(ex.ExperimentConfig(profile="flat-lowfreq"))
low = fits[0]
print(f"flat bump, low  : exponent {low.exponent:.4f}  (dim/4 = {low.comparisons['dim_quarter']})")

cfg = ex.ExperimentConfig(profile="band", profile_params=(("xi1", 2.0), ("xi2", 6.0)))
(fit,), series = ex.decay_experiment(cfg)
print(f"band [2, 6]     : rate {fit.exponent:.4f} vs 2 min|abscissa| "
      f"{fit.comparisons['two_min_abscissa']:.4f}")

# the tail of the series: ||V||^2 should shrink by exp(-rate * 50) over 50 time units
t, y = series.times, series.total
i, j = len(t) // 2, len(t) - 1
print(f"measured drop over [{t[i]:.0f}, {t[j]:.0f}]: {(y[j] / y[i]) ** 2:.3e}")
