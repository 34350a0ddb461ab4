"""Periodic-grid spectral machinery.

The whole space is approximated by the torus ``[0, L)^dim`` sampled on
``n`` points per axis.  Coefficients use the unitary-in-L2 normalization

    F[m] = L**(dim/2) / N * sum_x f(x) exp(-i k_m . x),    N = n**dim,

so that ``sum |F|**2`` equals the grid quadrature ``sum |f|**2 * dx**dim``
(Parseval holds exactly, not just up to a constant).  A single Fourier mode
``A exp(i k.x)`` has coefficient ``A * L**(dim/2)`` and L2 norm
``|A| * L**(dim/2)``.

Arrays are full complex ``fftn`` layouts (not ``rfftn``) so Hermitian pairing
and per-mode linear algebra can be written directly on the coefficient array.
Every function here is pure: inputs are never modified.
"""
import itertools
import math
import os
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .exceptions import ConfigurationError, DomainError, ResolutionWarning

__all__ = [
    "GridSpec", "CutoffSpec", "fft_workers",
    "forward_transform", "inverse_transform", "hermitian_partner",
    "lambda_power", "gradient", "divergence", "laplacian",
    "derivative_magnitude", "lowpass", "highpass",
    "lp_norm", "homogeneous_norm", "sobolev_norm", "spectral_sq_norm",
]

DEFAULT_MAX_POINTS = 256 ** 3


def fft_workers():
    """Thread count for the FFT kernels, read from ``JMGT_THREADS`` (default 1)."""
    raw = os.environ.get("JMGT_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigurationError(f"JMGT_THREADS must be an integer, got {raw!r}")
    return workers if workers != 0 else 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[0, L)^dim`` with ``n`` points per axis.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    n : int
        Points per axis; a power of two, at least 8.
    L : float
        Side length of the periodic box.
    dealias : float
        Fraction of the resolved band kept before quadratic products;
        modes with ``|m_j| >= dealias * n / 2`` on any axis are truncated.
        The default 2/3 makes quadratic products alias-free.
    max_points : int
        Memory budget expressed as the largest admissible ``n**dim``.
    """
    dim: int
    n: int
    L: float
    dealias: float = 2.0 / 3.0
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigurationError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigurationError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ConfigurationError(f"L must be positive, got {self.L}")
        if not 0 < self.dealias <= 1:
            raise ConfigurationError(f"dealias must lie in (0, 1], got {self.dealias}")
        if self.n ** self.dim > self.max_points:
            raise ConfigurationError(
                f"grid of {self.n}^{self.dim} points exceeds the budget of "
                f"{self.max_points} points")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n ** self.dim

    @property
    def dx(self):
        return self.L / self.n

    @property
    def cell_volume(self):
        return self.dx ** self.dim

    @property
    def nyquist(self):
        """Largest resolved angular wavenumber along one axis, ``pi n / L``."""
        return math.pi * self.n / self.L

    @property
    def norm_factor(self):
        return self.L ** (self.dim / 2) / self.size

    @cached_property
    def mode_numbers(self):
        """Integer mode index per axis in FFT ordering, broadcastable."""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        out = []
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.n
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self):
        """Angular wavenumbers ``k_j = 2 pi m_j / L`` per axis, broadcastable."""
        return tuple(2 * np.pi * m / self.L for m in self.mode_numbers)

    @cached_property
    def mode_sq(self):
        """Integer ``|m|**2`` on the full lattice; equal shells compare exactly."""
        out = np.zeros(self.shape, dtype=np.int64)
        for m in self.mode_numbers:
            out = out + m.astype(np.int64) ** 2
        return out

    @cached_property
    def xi2(self):
        """``|xi|**2 = (2 pi / L)**2 |m|**2`` on the full lattice."""
        return (2 * np.pi / self.L) ** 2 * self.mode_sq.astype(float)

    @cached_property
    def xi(self):
        return np.sqrt(self.xi2)

    @cached_property
    def dealias_mask(self):
        keep = np.ones(self.shape, dtype=bool)
        for m in self.mode_numbers:
            keep = keep & (np.abs(m) < self.dealias * self.n / 2)
        return keep

    @cached_property
    def coordinates(self):
        """Grid point coordinates ``x_j = i * dx`` per axis, broadcastable."""
        x = np.arange(self.n) * self.dx
        out = []
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.n
            out.append(x.reshape(shape))
        return tuple(out)

    def check_field(self, f, what="field"):
        f = np.asarray(f)
        if f.shape != self.shape:
            raise ConfigurationError(
                f"{what} has shape {f.shape}, grid expects {self.shape}")
        return f

    def single_mode(self, m, amplitude=1.0, phase=0.0):
        """Real field ``amplitude * cos(k_m . x + phase)`` for integer index ``m``."""
        m = tuple(m)
        if len(m) != self.dim:
            raise ConfigurationError(f"mode index {m} does not match dim={self.dim}")
        arg = sum(2 * np.pi * mj / self.L * x for mj, x in zip(m, self.coordinates))
        return amplitude * np.cos(arg + phase)


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth low/high frequency split with plateau radius ``R``.

    ``psi`` equals 1 on ``|xi| <= R``, 0 on ``|xi| >= 2R`` and follows the
    raised-cosine taper ``cos**2(pi (|xi| - R) / (2R))`` in between; ``phi`` is
    ``1 - psi``.  The taper is C1, enough for every check built on it.
    """
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigurationError(f"cutoff radius must be positive, got {self.R}")

    def psi(self, xi):
        xi = np.asarray(xi, dtype=float)
        t = np.clip((xi - self.R) / self.R, 0.0, 1.0)
        return np.where(t < 1, np.cos(0.5 * np.pi * t) ** 2, 0.0)

    def phi(self, xi):
        return 1.0 - self.psi(xi)


def forward_transform(f, grid):
    """Real field -> unitary spectral coefficients (see module docstring)."""
    f = grid.check_field(f)
    return scipy.fft.fftn(f, workers=fft_workers()) * grid.norm_factor


def inverse_transform(F, grid, real=True):
    """Spectral coefficients -> field; the imaginary round-off is dropped if ``real``."""
    F = grid.check_field(F, "spectral field")
    f = scipy.fft.ifftn(F, workers=fft_workers()) / grid.norm_factor
    return f.real if real else f


def hermitian_partner(F):
    """Return ``G`` with ``G[m] = F[-m]`` (indices mod n on every axis)."""
    F = np.asarray(F)
    return np.roll(np.flip(F), 1, axis=tuple(range(F.ndim)))


def lambda_power(F, gamma, grid, project_zero_mode=True):
    """Apply the multiplier ``|xi|**gamma``.

    For ``gamma < 0`` the zero mode has no finite multiplier; it is set to zero
    when ``project_zero_mode`` is true and rejected otherwise.
    """
    F = grid.check_field(F, "spectral field")
    if gamma == 0:
        return F.copy()
    out = np.zeros_like(F, dtype=complex)
    nz = grid.xi2 > 0
    if gamma < 0 and not project_zero_mode:
        if np.abs(F.flat[0]) > 0:
            raise DomainError(
                "negative-order multiplier applied to a field with nonzero mean; "
                "enable zero-mode projection or remove the mean first")
    out[nz] = F[nz] * grid.xi[nz] ** gamma
    return out


def gradient(F, grid):
    """Spectral gradient: list of ``i k_j F`` for each axis."""
    F = grid.check_field(F, "spectral field")
    return [1j * k * F for k in grid.wavenumbers]


def divergence(G, grid):
    if len(G) != grid.dim:
        raise ConfigurationError(f"vector field has {len(G)} components, dim={grid.dim}")
    return sum(1j * k * grid.check_field(g, "spectral field")
               for k, g in zip(grid.wavenumbers, G))


def laplacian(F, grid):
    return -grid.xi2 * grid.check_field(F, "spectral field")


def derivative_magnitude(F, grid, order):
    """Pointwise magnitude of the derivative tensor of a spectral field.

    For integer ``order`` this is ``sqrt(sum over ordered index tuples of
    |d_i1 ... d_ij f|**2)``, computed over multi-indices with multinomial
    weights; its squared L2 norm equals ``sum |xi|**(2 order) |F|**2``.
    Non-integer orders fall back to ``|Lambda**order f|`` with the zero mode
    dropped.
    """
    F = grid.check_field(F, "spectral field")
    if order < 0:
        raise DomainError(f"derivative order must be nonnegative, got {order}")
    if float(order) != int(order):
        return np.abs(inverse_transform(lambda_power(F, float(order), grid), grid))
    order = int(order)
    if order == 0:
        return np.abs(inverse_transform(F, grid))
    acc = np.zeros(grid.shape)
    for combo in itertools.combinations_with_replacement(range(grid.dim), order):
        counts = [combo.count(a) for a in range(grid.dim)]
        weight = math.factorial(order)
        for c in counts:
            weight //= math.factorial(c)
        mult = np.ones(grid.shape, dtype=complex)
        for axis, c in enumerate(counts):
            if c:
                mult = mult * (1j * grid.wavenumbers[axis]) ** c
        d = inverse_transform(mult * F, grid)
        acc += weight * d * d
    return np.sqrt(acc)


def _check_band(cutoff, grid):
    if 2 * cutoff.R >= grid.nyquist:
        warnings.warn(
            f"cutoff support 2R={2 * cutoff.R:g} reaches the grid Nyquist "
            f"frequency {grid.nyquist:g}; the low/high split is not faithful",
            ResolutionWarning, stacklevel=3)


def lowpass(F, cutoff, grid):
    """``psi(|xi|) F``: the low-frequency part."""
    F = grid.check_field(F, "spectral field")
    _check_band(cutoff, grid)
    return cutoff.psi(grid.xi) * F


def highpass(F, cutoff, grid):
    """``F - lowpass(F)``, so that the two parts add up to ``F`` exactly."""
    F = grid.check_field(F, "spectral field")
    _check_band(cutoff, grid)
    return F - cutoff.psi(grid.xi) * F


def spectral_sq_norm(F, grid, power=0.0):
    """``sum |xi|**(2 power) |F|**2``; the zero mode is skipped for ``power < 0``."""
    mag2 = np.abs(F) ** 2
    if power == 0:
        return float(mag2.sum())
    nz = grid.xi2 > 0
    return float(np.sum(grid.xi2[nz] ** power * mag2[nz]))


def lp_norm(f, p, grid):
    """Grid-quadrature L^p norm; ``p = inf`` is the grid maximum.

    The grid maximum is a lower bound for the continuum sup norm.
    """
    f = grid.check_field(f)
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(f))) if f.size else 0.0
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ConfigurationError(f"unsupported Lebesgue exponent {p!r}")
    if not p >= 1:
        raise ConfigurationError(f"unsupported Lebesgue exponent {p!r}; need p >= 1")
    return float((np.sum(np.abs(f) ** p) * grid.cell_volume) ** (1.0 / p))


def homogeneous_norm(f, gamma, grid, project_zero_mode=True):
    """``||Lambda**gamma f||_{L2}`` by a Parseval sum.

    Negative ``gamma`` needs a zero-mean field; a nonzero mean is projected out
    when ``project_zero_mode`` is set and rejected otherwise.
    """
    F = forward_transform(f, grid)
    if gamma < 0 and not project_zero_mode and abs(F.flat[0]) > 1e-14 * np.sqrt(
            spectral_sq_norm(F, grid)):
        raise DomainError("negative homogeneous norm of a field with nonzero mean")
    return math.sqrt(spectral_sq_norm(F, grid, gamma))


def sobolev_norm(f, s, grid):
    """``(||f||**2 + ||f||_{H^s dot}**2) ** 0.5``."""
    F = forward_transform(f, grid)
    return math.sqrt(spectral_sq_norm(F, grid) + spectral_sq_norm(F, grid, s))
