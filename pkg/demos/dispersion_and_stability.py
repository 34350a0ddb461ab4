"""Per-mode dispersion of the linear system and where it is stable.

Sweeps the characteristic roots over |xi|, prints the decay envelope and the
certified Lyapunov constants, then maps stability over (tau, beta).
"""
import numpy as np

from jmgt import modes
from jmgt.dynamics import Params

p = Params(tau=0.5, beta=1.0)

# roots of the cubic at a few wavenumbers: one real root near -1/tau at large
# xi, a complex pair whose real part saturates at high frequency
for xi in (1e-2, 1.0, 1e2):
    r = modes.char_roots(xi, p)
    print(f"xi={xi:8.2g}  roots={np.round(r, 4)}")

# the abscissa behaves like -xi^2 at low frequency and like a negative
# constant at high frequency; c is the best constant in the envelope
xis = np.logspace(-3, 3, 200)
env = modes.abscissa_envelope(p, xis)
print(f"\nenvelope constant c = {env.c:.4f} (ok={env.ok})")

rep = modes.verify_lyapunov(p, np.logspace(-3, 3, 10))
print(f"Lyapunov candidate: delta={rep.delta:.3f} c={rep.c:.3f} kappa={rep.kappa:.3f} "
      f"certified={rep.ok}")

# stability over a coarse (tau, beta) grid: '#' stable, '.' unstable
g = np.linspace(0.1, 2.0, 20)
smap = modes.stability_region(g, g, [0.1, 1.0, 10.0, 100.0])
print("\nstability map (rows tau up, columns beta right)")
for i in range(len(g) - 1, -1, -1):
    print("".join("#" if s else ("~" if m else ".")
                  for s, m in zip(smap.stable[i], smap.marginal[i])))
