"""Small data on the torus: energies stay bounded, with or without the
quadratic terms, and large high-order norms do not matter once the
threshold-order energy is small.
"""
import math

from jmgt import experiments as ex
from jmgt.dynamics import Params
from jmgt.energy import EnergyTracker

p = Params(B_over_A=5.0)

# linear runs with the exact propagator
cfg = ex.ExperimentConfig(n=32, T=20.0, dt=0.05, stride=10)
for seed in range(3):
    rep = ex.boundedness_experiment(cfg, U0=ex.random_state(cfg.grid, seed, amplitude=1e-3),
                                    nonlinear=False, linear_gamma=1.0)
    print(f"linear seed {seed}: C0={rep['C0']:.3f}  C_neg={rep['C_neg']:.3f}")

# nonlinear: three low modes plus a companion carrying a high mode
cfg = ex.ExperimentConfig(n=32, L=math.pi, T=20.0, dt=0.05, stride=10, s=7)
g, s0 = cfg.grid, ex.threshold_s0(cfg.s)
base = (ex.band_state(g, (1, 0, 0)) + ex.band_state(g, (0, 1, 0), 0.5, 1.0)
        + ex.band_state(g, (0, 0, 1), 0.7, 2.0))
base = base.scaled(1e-3 / math.sqrt(EnergyTracker.energy_sum(base, p, s0)))
comp = ex.companion_state(base, ex.band_state(g, (10, 10, 10)), p, s0, 7, 100.0)
for name, U in (("base", base), ("companion", comp)):
    rep = ex.boundedness_experiment(cfg, U0=U, m=7)
    print(f"{name:9s}: E_s0 = {math.sqrt(EnergyTracker.energy_sum(U, p, s0)):.2e}  "
          f"E_7 = {math.sqrt(EnergyTracker.energy_sum(U, p, 7)):.2e}  "
          f"max E_s0(t)/E_s0(0) = {rep['E_ratio_max']:.4f}")

# the I-terms scale linearly with the energy: slope one in log-log
res = ex.iterm_slope(ex.ExperimentConfig(n=16, T=2.0, dt=0.02), 1, (1e-4, 1e-3, 1e-2))
print("I-term slopes:", ", ".join(f"{s:.3f}" for s in res["term_slopes"]))
