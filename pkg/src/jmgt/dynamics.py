"""First-order form of the Jordan-Moore-Gibson-Thompson equation.

With ``v = u_t`` and ``w = u_tt`` (sound speed scaled to 1) the equation
becomes

    u_t = v,   v_t = w,
    tau w_t = Delta u + beta Delta v - w + (B/A) v w + 2 grad u . grad v.

States are stored by their spectral coefficients; physical fields are
produced on demand.  Quadratic products are formed in physical space from
2/3-truncated factors and the product is truncated again, which makes them
equal to the exact (non-wrapped) convolution restricted to the kept band.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import spectral
from .exceptions import ConfigurationError, DomainError

__all__ = ["Params", "StateVector", "dealiased_product", "nonlinearity_hat",
           "rhs", "nonlinear_term_k", "compute_V", "v_norm"]


@dataclass(frozen=True)
class Params:
    """Physical parameters.

    ``c`` and ``alpha`` stay at 1 for the evolution system; ``alpha`` may be
    varied in the per-mode analysis only.  ``0 < tau < beta`` is enforced
    unless ``allow_unstable`` is set.
    """
    tau: float = 0.5
    beta: float = 1.0
    B_over_A: float = 5.0
    c: float = 1.0
    alpha: float = 1.0
    allow_unstable: bool = False

    def __post_init__(self):
        if self.tau == 0:
            raise DomainError("tau = 0 degenerates the system order (Kuznetsov limit)")
        if self.tau < 0 or self.beta <= 0:
            raise ConfigurationError(
                f"need tau > 0 and beta > 0, got tau={self.tau}, beta={self.beta}")
        if self.c <= 0 or self.alpha <= 0:
            raise ConfigurationError("c and alpha must be positive")
        if self.B_over_A < 0:
            raise ConfigurationError(f"B/A must be >= 0, got {self.B_over_A}")
        if not self.allow_unstable and not self.tau * self.c ** 2 < self.alpha * self.beta:
            raise ConfigurationError(
                f"tau={self.tau}, beta={self.beta} violates the dissipativity "
                "condition tau < beta; set allow_unstable to override")

    @property
    def gap(self):
        """``beta - tau``, positive in the dissipative regime."""
        return self.beta - self.tau


class StateVector:
    """The triple ``(u, v, w)`` on one grid, held as spectral coefficients.

    ``hat`` has shape ``(3,) + grid.shape``.  Physical fields ``u``, ``v``,
    ``w`` are computed lazily and cached; treat instances as immutable.
    """

    def __init__(self, grid, hat):
        hat = np.asarray(hat, dtype=complex)
        if hat.shape != (3,) + grid.shape:
            raise ConfigurationError(
                f"state coefficients have shape {hat.shape}, expected {(3,) + grid.shape}")
        self.grid = grid
        self.hat = hat

    @classmethod
    def from_fields(cls, grid, u, v, w):
        hat = np.stack([spectral.forward_transform(f, grid) for f in (u, v, w)])
        return cls(grid, hat)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex))

    @cached_property
    def fields(self):
        return tuple(spectral.inverse_transform(h, self.grid) for h in self.hat)

    @property
    def u(self):
        return self.fields[0]

    @property
    def v(self):
        return self.fields[1]

    @property
    def w(self):
        return self.fields[2]

    def scaled(self, factor):
        return StateVector(self.grid, factor * self.hat)

    def __add__(self, other):
        return StateVector(self.grid, self.hat + other.hat)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.hat) ** 2)))


def dealiased_product(A, B, grid):
    """Spectral coefficients of the product of two fields given spectrally.

    Both factors and the result are truncated with ``grid.dealias_mask``.
    """
    mask = grid.dealias_mask
    a = spectral.inverse_transform(np.where(mask, A, 0), grid)
    b = spectral.inverse_transform(np.where(mask, B, 0), grid)
    return np.where(mask, spectral.forward_transform(a * b, grid), 0)


def nonlinearity_hat(U, p):
    """Spectral coefficients of ``(B/A) v w + 2 grad u . grad v``."""
    grid = U.grid
    mask = grid.dealias_mask
    uh, vh, wh = (np.where(mask, h, 0) for h in U.hat)
    v = spectral.inverse_transform(vh, grid)
    prod = p.B_over_A * v * spectral.inverse_transform(wh, grid)
    for k in grid.wavenumbers:
        du = spectral.inverse_transform(1j * k * uh, grid)
        dv = spectral.inverse_transform(1j * k * vh, grid)
        prod = prod + 2.0 * du * dv
    return np.where(mask, spectral.forward_transform(prod, grid), 0)


def _linear_w_tendency(uh, vh, wh, grid, p):
    return (-p.c ** 2 * grid.xi2 * uh - p.beta * grid.xi2 * vh - p.alpha * wh) / p.tau


def rhs(U, p, nonlinear=True):
    """Time derivative of the state, returned as a ``StateVector``."""
    uh, vh, wh = U.hat
    dw = _linear_w_tendency(uh, vh, wh, U.grid, p)
    if nonlinear:
        dw = dw + nonlinearity_hat(U, p) / p.tau
    return StateVector(U.grid, np.stack([vh, wh, dw]))


def nonlinear_term_k(U, p, k):
    """The field ``R^(k) = grad^k N(U)`` in the magnitude convention.

    ``grad^k`` of a scalar is represented by the scalar field
    ``Lambda**k N``: it has the same L2 norm as the full derivative tensor
    and the same L2 pairings with other ``grad^k`` fields, which is all the
    energy estimates use.  ``k = 0`` returns ``N(U)`` itself.
    """
    if k < 0 or int(k) != k:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    Nh = nonlinearity_hat(U, p)
    if k == 0:
        return spectral.inverse_transform(Nh, U.grid)
    return spectral.inverse_transform(spectral.lambda_power(Nh, k, U.grid), U.grid)


def compute_V(U, p):
    """Fields of ``V = (v + tau w, grad(u + tau v), grad v)`` (1 + 2 dim entries)."""
    grid = U.grid
    uh, vh, wh = U.hat
    out = [spectral.inverse_transform(vh + p.tau * wh, grid)]
    out += [spectral.inverse_transform(g, grid) for g in spectral.gradient(uh + p.tau * vh, grid)]
    out += [spectral.inverse_transform(g, grid) for g in spectral.gradient(vh, grid)]
    return out


def v_norm(U, p, order=0):
    """``||grad^order V||_{L2}``, the root of the summed squared component norms."""
    grid = U.grid
    uh, vh, wh = U.hat
    a = np.abs(vh + p.tau * wh) ** 2
    b = np.abs(uh + p.tau * vh) ** 2
    v = np.abs(vh) ** 2
    density = a + grid.xi2 * (b + v)
    return float(np.sqrt(np.sum(grid.xi2 ** order * density)))
