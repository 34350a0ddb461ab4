"""Energy, dissipation and nonlinear-estimate functionals.

Everything here is a weighted lattice sum.  With ``a = v + tau w`` and
``b = u + tau v`` the order-``k`` energy density per mode is

    |xi|**(2k) [ (1 + xi**2) |a|**2 + xi**2 (1 + xi**2) (|v|**2 + |b|**2) + |w|**2 ]

and the dissipation density is

    |xi|**(2k) [ xi**2 |v|**2 + xi**4 |v|**2 + |w|**2 + xi**4 |b|**2 + xi**2 |a|**2 ].

The negative-order variants replace ``|xi|**(2k)`` by ``|xi|**(-2 gamma)`` with
the zero mode removed.  ``grad^k`` follows the ``|xi|**k`` magnitude
convention, so these sums equal the grid L2 norms of the derivative tensors.
"""

import numpy as np

from . import spectral
from .dynamics import nonlinearity_hat
from .exceptions import DomainError

__all__ = ["instantaneous_energy_k", "dissipation_integrand_k", "negative_energy",
           "negative_dissipation_integrand", "equivalence_ratio", "v_side",
           "i_terms", "m0_norms", "EnergyTracker"]


def _moduli(U, p):
    uh, vh, wh = U.hat
    return (np.abs(vh + p.tau * wh) ** 2, np.abs(uh + p.tau * vh) ** 2,
            np.abs(vh) ** 2, np.abs(wh) ** 2)


def _weight(grid, s):
    """``|xi|**(2 s)``; zero at the zero mode for ``s != 0``."""
    if s == 0:
        return np.ones(grid.shape)
    w = np.zeros(grid.shape)
    nz = grid.xi2 > 0
    w[nz] = grid.xi2[nz] ** s
    return w


def _energy(U, p, s):
    a2, b2, v2, w2 = _moduli(U, p)
    x2 = U.grid.xi2
    dens = (1 + x2) * a2 + x2 * (1 + x2) * (v2 + b2) + w2
    return float(np.sum(_weight(U.grid, s) * dens))


def _dissipation(U, p, s):
    a2, b2, v2, w2 = _moduli(U, p)
    x2 = U.grid.xi2
    dens = x2 * (1 + x2) * v2 + w2 + x2 ** 2 * b2 + x2 * a2
    return float(np.sum(_weight(U.grid, s) * dens))


def _check_k(k):
    if k < 0 or int(k) != k:
        raise DomainError(f"k must be a nonnegative integer, got {k}")


def instantaneous_energy_k(U, p, k):
    """Order-``k`` energy at the current time (the quantity inside the sup)."""
    _check_k(k)
    return _energy(U, p, int(k))


def dissipation_integrand_k(U, p, k):
    """Order-``k`` dissipation integrand at the current time."""
    _check_k(k)
    return _dissipation(U, p, int(k))


def _check_gamma(gamma):
    if not gamma > 0:
        raise DomainError(f"negative-order energies need gamma > 0, got {gamma}")


def negative_energy(U, p, gamma):
    """Energy with every ``grad^k`` replaced by ``Lambda**(-gamma)``; zero mode dropped."""
    _check_gamma(gamma)
    return _energy(U, p, -gamma)


def negative_dissipation_integrand(U, p, gamma):
    _check_gamma(gamma)
    return _dissipation(U, p, -gamma)


def v_side(U, p, k):
    """``||grad^k V||**2 + ||grad^(k+1) V||**2 + ||w||**2``."""
    _check_k(k)
    a2, b2, v2, w2 = _moduli(U, p)
    x2 = U.grid.xi2
    dens = a2 + x2 * (b2 + v2)
    return float(np.sum(_weight(U.grid, k) * (1 + x2) * dens + w2))


def equivalence_ratio(U, p, k):
    """Order-``k`` energy divided by :func:`v_side`.

    At ``k = 0`` both sides coincide; for ``k >= 1`` they differ only in the
    ``w`` term, so the bounds depend on the smallest nonzero lattice ``|xi|``.
    """
    den = v_side(U, p, k)
    if den == 0:
        raise DomainError("equivalence ratio undefined for the zero state")
    return instantaneous_energy_k(U, p, k) / den


def _pair(F, G, grid):
    """Grid quadrature of ``f g`` for real fields given spectrally."""
    f = spectral.inverse_transform(F, grid)
    g = spectral.inverse_transform(G, grid)
    return float(np.sum(f * g) * grid.cell_volume)


def i_terms(U, p, k, N_hat=None):
    """The five pairings of ``R = grad^k N`` with the order-``k`` state.

    With ``(U, V, W) = grad^k (u, v, w)``:

    ``I1 = |int R (V + tau W)|``, ``I2 = |int grad R . grad (V + tau W)|``,
    ``I3 = |int R Delta(U + tau V)|``, ``I4 = |int grad R . grad V|``,
    ``I5 = |int R W|``.

    Evaluated by grid quadrature of ``Lambda``-multiplied fields; a gradient
    pairing integrates to the ``Lambda`` pairing.  Pass ``N_hat`` to reuse a
    computed nonlinearity.
    """
    _check_k(k)
    grid = U.grid
    uh, vh, wh = U.hat
    if N_hat is None:
        N_hat = nonlinearity_hat(U, p)
    lam = lambda F, s: spectral.lambda_power(F, s, grid)
    R = lam(N_hat, k)
    R1 = lam(N_hat, k + 1)
    ah = vh + p.tau * wh
    bh = uh + p.tau * vh
    return (abs(_pair(R, lam(ah, k), grid)),
            abs(_pair(R1, lam(ah, k + 1), grid)),
            abs(_pair(R, -grid.xi2 * lam(bh, k), grid)),
            abs(_pair(R1, lam(vh, k + 1), grid)),
            abs(_pair(R, lam(wh, k), grid)))


def _vec_sup(G, grid):
    mag2 = sum(spectral.inverse_transform(g, grid) ** 2 for g in G)
    return float(np.sqrt(np.max(mag2)))


def m0_norms(U, p):
    """``|v|_inf + |v + tau w|_inf + |grad(u + tau v)|_inf + |grad u|_inf + |grad v|_inf``.

    Vector sup norms use the pointwise Euclidean magnitude; grid maxima are
    lower bounds for the continuum sup.
    """
    grid = U.grid
    uh, vh, wh = U.hat
    total = np.max(np.abs(U.v)) + np.max(np.abs(U.v + p.tau * U.w))
    total += _vec_sup(spectral.gradient(uh + p.tau * vh, grid), grid)
    total += _vec_sup(spectral.gradient(uh, grid), grid)
    total += _vec_sup(spectral.gradient(vh, grid), grid)
    return float(total)


class EnergyTracker:
    """Trajectory observer accumulating the energy ladder.

    Tracks, for ``k = 0..s``, the instantaneous energies, their running sup,
    the dissipation integrands and their trapezoid integrals at the observation
    stride; optionally the negative-order pair for ``gamma``, the running max
    of ``M0`` and the I-terms at orders ``i_orders``.  One row per snapshot is
    kept in ``rows``.
    """

    def __init__(self, p, s=0, gamma=None, m0=False, i_orders=()):
        self.p, self.s, self.gamma = p, int(s), gamma
        self.m0, self.i_orders = m0, tuple(i_orders)
        self.rows = []
        self._last = None
        self.sup = np.zeros(self.s + 1)
        self.D2 = np.zeros(self.s + 1)
        self.sup_neg = 0.0
        self.D2_neg = 0.0
        self.m0_max = 0.0

    def __call__(self, t, U):
        p = self.p
        e = np.array([_energy(U, p, k) for k in range(self.s + 1)])
        d = np.array([_dissipation(U, p, k) for k in range(self.s + 1)])
        if self.gamma is not None:
            en, dn = negative_energy(U, p, self.gamma), negative_dissipation_integrand(U, p, self.gamma)
        if self._last is not None:
            t0, d0, dn0 = self._last
            h = t - t0
            self.D2 += 0.5 * h * (d0 + d)
            if self.gamma is not None:
                self.D2_neg += 0.5 * h * (dn0 + dn)
        self.sup = np.maximum(self.sup, e)
        row = {"t": t}
        for k in range(self.s + 1):
            row[f"e{k}"] = e[k]
            row[f"E{k}"] = self.sup[k]
            row[f"diss{k}"] = d[k]
            row[f"D{k}"] = self.D2[k]
        row["E_s"] = float(np.sum(self.sup))
        row["D_s"] = float(np.sum(self.D2))
        if self.gamma is not None:
            self.sup_neg = max(self.sup_neg, en)
            row.update(e_neg=en, E_neg=self.sup_neg, diss_neg=dn, D_neg=self.D2_neg)
        if self.m0:
            self.m0_max = max(self.m0_max, m0_norms(U, p))
            row["M0"] = self.m0_max
        if self.i_orders:
            N_hat = nonlinearity_hat(U, p)
            for k in self.i_orders:
                for i, val in enumerate(i_terms(U, p, k, N_hat), 1):
                    row[f"I{i}_k{k}"] = val
        self._last = (t, d, dn if self.gamma is not None else None)
        self.rows.append(row)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    @property
    def columns(self):
        return list(self.rows[0]) if self.rows else []

    def energy_s(self, order):
        """``E_order**2`` along the trajectory: the sum of running sups for ``k <= order``."""
        return np.sum([self.column(f"E{k}") for k in range(order + 1)], axis=0)

    @staticmethod
    def energy_sum(U, p, order):
        """Instantaneous ``sum_{k <= order} e_k``."""
        return sum(_energy(U, p, k) for k in range(order + 1))
