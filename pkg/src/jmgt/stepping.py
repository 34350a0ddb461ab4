"""Time integration of the (non)linear system.

Three schemes act on the spectral state:

``exact-linear``
    ``U(t + dt) = exp(dt A(|xi|)) U(t)`` for every mode; linear runs only.
``imex2``
    Crank-Nicolson on the linear generator, Heun (explicit trapezoid) on the
    nonlinearity.  Second order, A-stable in the linear part.
``etd-rk``
    Second-order exponential time differencing (Cox-Matthews ETD2RK); exact for
    the linear part.

Per-mode operators depend on ``|xi|`` only and are built once per distinct
lattice shell ``|m|**2``.

The matrix exponential uses scaling and squaring with a fixed [13/13] Pade
approximant (Higham 2005): ``s = max(0, ceil(log2(||A||_1 / theta_13)))``
with ``theta_13 = 5.371920351148152``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import StateVector, nonlinearity_hat
from .exceptions import BlowUpError, ConfigurationError

__all__ = ["StepperConfig", "expm", "linear_generator", "linear_propagator",
           "phi_functions", "Stepper", "Trajectory", "step", "evolve",
           "lattice_abscissa"]

SCHEMES = ("exact-linear", "imex2", "etd-rk")
BLOWUP_FACTOR = 1e12

_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0])
_THETA13 = 5.371920351148152


def expm(A):
    """Matrix exponential of a square matrix or a stack ``(..., n, n)``."""
    A = np.asarray(A)
    single = A.ndim == 2
    if single:
        A = A[None]
    batch = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n))
    norm1 = np.max(np.sum(np.abs(A), axis=-2), axis=-1)
    with np.errstate(divide="ignore"):
        s = np.where(norm1 > _THETA13,
                     np.ceil(np.log2(np.maximum(norm1, 1e-300) / _THETA13)), 0)
    s = s.astype(int)
    A = A / (2.0 ** s)[:, None, None]

    b = _PADE13
    eye = np.broadcast_to(np.eye(n, dtype=A.dtype), A.shape)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye)
    R = np.linalg.solve(V - U, V + U)

    for j in range(int(s.max()) if s.size else 0):
        sq = R @ R
        R = np.where((s > j)[:, None, None], sq, R)
    R = R.reshape(batch + (n, n))
    return R[0] if single else R


def linear_generator(xi_mag, p):
    """Per-mode generator acting on ``(u_hat, v_hat, w_hat)``.

    Rows are ``(0, 1, 0)``, ``(0, 0, 1)`` and
    ``(-c**2 xi**2 / tau, -beta xi**2 / tau, -alpha / tau)``.  Array input gives
    a stack of matrices.
    """
    xi2 = np.asarray(xi_mag, dtype=float) ** 2
    A = np.zeros(xi2.shape + (3, 3))
    A[..., 0, 1] = 1.0
    A[..., 1, 2] = 1.0
    A[..., 2, 0] = -p.c ** 2 * xi2 / p.tau
    A[..., 2, 1] = -p.beta * xi2 / p.tau
    A[..., 2, 2] = -p.alpha / p.tau
    return A


def linear_propagator(xi_mag, p, dt):
    """``exp(dt A(xi))`` for scalar or array ``xi_mag``."""
    if dt < 0:
        raise ConfigurationError(f"dt must be nonnegative, got {dt}")
    return expm(dt * linear_generator(xi_mag, p))


def phi_functions(M):
    """``(exp(M), phi_1(M), phi_2(M))`` for a stack of matrices ``M``.

    Read off the exponential of the block matrix ``[[M, I, 0], [0, 0, I], [0, 0, 0]]``.
    """
    M = np.asarray(M)
    n = M.shape[-1]
    big = np.zeros(M.shape[:-2] + (3 * n, 3 * n))
    big[..., :n, :n] = M
    big[..., :n, n:2 * n] = np.eye(n)
    big[..., n:2 * n, 2 * n:] = np.eye(n)
    E = expm(big)
    return E[..., :n, :n], E[..., :n, n:2 * n], E[..., :n, 2 * n:]


def lattice_abscissa(grid, p):
    """Largest real part of the generator spectrum over all lattice shells."""
    shells = np.unique(grid.mode_sq)
    xi = 2 * np.pi / grid.L * np.sqrt(shells.astype(float))
    return float(np.max(np.linalg.eigvals(linear_generator(xi, p)).real))


@dataclass(frozen=True)
class StepperConfig:
    """Scheme name, step ``dt``, horizon ``T`` and observer ``stride`` (in steps)."""
    scheme: str = "exact-linear"
    dt: float = 0.01
    T: float = 1.0
    stride: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise ConfigurationError(f"T must be nonnegative, got {self.T}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigurationError(f"stride must be a positive integer, got {self.stride}")

    @property
    def n_steps(self):
        steps = int(round(self.T / self.dt))
        if abs(steps * self.dt - self.T) > 1e-9 * max(self.T, 1.0):
            raise ConfigurationError(f"T={self.T} is not a multiple of dt={self.dt}")
        return steps


class Stepper:
    """Precomputed per-shell operators for one (grid, params, config) triple."""

    def __init__(self, grid, p, cfg, nonlinear=False):
        if nonlinear and cfg.scheme == "exact-linear":
            raise ConfigurationError("the exact-linear scheme cannot carry the nonlinearity")
        self.grid, self.p, self.cfg, self.nonlinear = grid, p, cfg, nonlinear
        self.abscissa = lattice_abscissa(grid, p)
        if self.abscissa > 1e-12 and not p.allow_unstable:
            raise ConfigurationError(
                f"linear generator has spectral abscissa {self.abscissa:g} > 0")
        shells, inverse = np.unique(grid.mode_sq.ravel(), return_inverse=True)
        xi = 2 * np.pi / grid.L * np.sqrt(shells.astype(float))
        A = cfg.dt * linear_generator(xi, p)
        if cfg.scheme == "exact-linear":
            ops = {"P": expm(A)}
        elif cfg.scheme == "imex2":
            eye = np.eye(3)
            inv = np.linalg.inv(eye - 0.5 * A)
            ops = {"P": inv @ (eye + 0.5 * A), "B": inv[..., :, 2]}
        else:
            E, phi1, phi2 = phi_functions(A)
            ops = {"P": E, "phi1": phi1[..., :, 2], "phi2": phi2[..., :, 2]}
        # gather per-shell operators onto the flattened lattice
        self._ops = {k: np.ascontiguousarray(v[inverse]) for k, v in ops.items()}

    def _apply(self, hat):
        flat = hat.reshape(3, -1)
        return np.einsum("kij,jk->ik", self._ops["P"], flat).reshape(hat.shape)

    def _column(self, name, scalar):
        col = self._ops[name]
        flat = scalar.reshape(-1)
        return (col.T * flat).reshape((3,) + self.grid.shape)

    def _forcing(self, hat):
        return nonlinearity_hat(StateVector(self.grid, hat), self.p) / self.p.tau

    def step(self, hat):
        """Advance spectral coefficients ``hat`` (shape ``(3,) + grid.shape``) by ``dt``."""
        dt = self.cfg.dt
        lin = self._apply(hat)
        if not self.nonlinear:
            return lin
        n0 = self._forcing(hat)
        if self.cfg.scheme == "imex2":
            pred = lin + dt * self._column("B", n0)
            n1 = self._forcing(pred)
            return lin + 0.5 * dt * self._column("B", n0 + n1)
        a = lin + dt * self._column("phi1", n0)
        return a + dt * self._column("phi2", self._forcing(a) - n0)


@dataclass
class Trajectory:
    """Outcome of :func:`evolve`: observation times, step count and final state."""
    times: list
    steps: int
    final: StateVector


def step(U, p, cfg, nonlinear=False):
    """One step of the configured scheme."""
    return StateVector(U.grid, Stepper(U.grid, p, cfg, nonlinear).step(U.hat))


def evolve(U0, p, cfg, observers=(), nonlinear=False, stepper=None):
    """Integrate from ``U0`` over ``[0, cfg.T]``.

    Each observer is called as ``observer(t, U)`` at step 0, every
    ``cfg.stride`` steps and at the final step.  Raises :class:`BlowUpError`
    when the state turns non-finite or its norm exceeds ``1e12`` times the
    initial norm.
    """
    stepper = stepper or Stepper(U0.grid, p, cfg, nonlinear)
    n_steps = cfg.n_steps
    hat = U0.hat
    norm0 = math.sqrt(float(np.sum(np.abs(hat) ** 2)))
    times = []

    def observe(i, h):
        t = i * cfg.dt
        U = StateVector(U0.grid, h)
        for obs in observers:
            obs(t, U)
        times.append(t)

    observe(0, hat)
    for i in range(1, n_steps + 1):
        hat = stepper.step(hat)
        norm = math.sqrt(float(np.sum(np.abs(hat) ** 2)))
        if not math.isfinite(norm) or (norm0 > 0 and norm > BLOWUP_FACTOR * norm0):
            raise BlowUpError(
                f"state norm {norm:g} at t={i * cfg.dt:g} (initial {norm0:g}); "
                "likely blow-up or an unresolved time step",
                {"t": i * cfg.dt, "step": i, "norm": norm, "initial_norm": norm0,
                 "scheme": cfg.scheme})
        if i % cfg.stride == 0 or i == n_steps:
            observe(i, hat)
    return Trajectory(times, n_steps, StateVector(U0.grid, hat))
