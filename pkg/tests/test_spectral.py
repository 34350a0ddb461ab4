import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jmgt import spectral
from jmgt.exceptions import ConfigurationError, DomainError, ResolutionWarning
from jmgt.spectral import CutoffSpec, GridSpec


def naive_dft(f, L):
    """Direct O(N^2) unitary DFT on a 3d grid, written from the definition."""
    n = f.shape[0]
    idx = np.arange(n)
    E = np.exp(-2j * np.pi * np.outer(idx, idx) / n)
    F = np.einsum("ia,jb,kc,abc->ijk", E, E, E, f)
    return F * L ** 1.5 / n ** 3


def test_forward_matches_direct_dft(grid8, rng):
    f = rng.normal(size=grid8.shape)
    F = spectral.forward_transform(f, grid8)
    assert np.allclose(F, naive_dft(f, grid8.L), rtol=0, atol=1e-12 * np.abs(F).max())


def test_parseval(grid8, rng):
    f = rng.normal(size=grid8.shape)
    F = spectral.forward_transform(f, grid8)
    assert np.sum(np.abs(F) ** 2) == pytest.approx(np.sum(f ** 2) * grid8.cell_volume, rel=1e-13)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1, 2, 3]))
def test_round_trip(seed, dim):
    g = GridSpec(dim, 8, 3.0)
    f = np.random.default_rng(seed).normal(size=g.shape)
    back = spectral.inverse_transform(spectral.forward_transform(f, g), g)
    assert np.allclose(back, f, atol=1e-13)


@given(st.integers(0, 2 ** 31 - 1))
def test_hermitian_symmetry_of_real_fields(seed):
    g = GridSpec(2, 8, 1.0)
    F = spectral.forward_transform(np.random.default_rng(seed).normal(size=g.shape), g)
    assert np.allclose(spectral.hermitian_partner(F), np.conj(F), atol=1e-13)


def test_derivatives_of_single_mode():
    g = GridSpec(3, 16, 2 * np.pi)
    x, y, z = (np.broadcast_to(c, g.shape) for c in g.coordinates)
    f = np.sin(2 * x + y)
    F = spectral.forward_transform(f, g)
    grad = [spectral.inverse_transform(G, g) for G in spectral.gradient(F, g)]
    assert np.allclose(grad[0], 2 * np.cos(2 * x + y), atol=1e-12)
    assert np.allclose(grad[1], np.cos(2 * x + y), atol=1e-12)
    assert np.allclose(grad[2], 0, atol=1e-12)
    lap = spectral.inverse_transform(spectral.laplacian(F, g), g)
    assert np.allclose(lap, -5 * f, atol=1e-11)
    div = spectral.inverse_transform(spectral.divergence(spectral.gradient(F, g), g), g)
    assert np.allclose(div, lap, atol=1e-11)
    half = spectral.inverse_transform(spectral.lambda_power(F, 0.5, g), g)
    assert np.allclose(half, 5 ** 0.25 * f, atol=1e-12)


def test_lambda_power_zero_mode():
    g = GridSpec(1, 8, 2 * np.pi)
    F = spectral.forward_transform(np.ones(g.shape) + np.cos(np.broadcast_to(g.coordinates[0], g.shape)), g)
    out = spectral.lambda_power(F, -1.0, g)
    assert out[0] == 0
    with pytest.raises(DomainError):
        spectral.lambda_power(F, -1.0, g, project_zero_mode=False)


def test_derivative_magnitude_parseval(rng):
    g = GridSpec(3, 8, 5.0)
    F = spectral.forward_transform(rng.normal(size=g.shape), g)
    for order in (1, 2, 3):
        F_band = np.where(g.dealias_mask, F, 0)
        mag = spectral.derivative_magnitude(F_band, g, order)
        lhs = np.sum(mag ** 2) * g.cell_volume
        assert lhs == pytest.approx(spectral.spectral_sq_norm(F_band, g, order), rel=1e-11)


def test_dealias_mask_is_strict():
    g = GridSpec(1, 16, 1.0)
    m = np.abs(g.mode_numbers[0].ravel())
    keep = g.dealias_mask.ravel()
    assert set(m[keep]) == set(range(6))      # |m| < 16/3
    assert not keep[m == 6].any()


def test_cutoffs_partition_unity():
    c = CutoffSpec(1.0)
    xi = np.linspace(0, 5, 501)
    assert np.allclose(c.psi(xi) + c.phi(xi), 1)
    assert np.all(c.psi(xi[xi <= 1]) == 1)
    assert np.all(c.psi(xi[xi >= 2]) == 0)


def test_lowpass_plus_highpass(rng):
    g = GridSpec(3, 16, 2 * np.pi)
    F = spectral.forward_transform(rng.normal(size=g.shape), g)
    c = CutoffSpec(1.5)
    assert np.allclose(spectral.lowpass(F, c, g) + spectral.highpass(F, c, g), F)
    with pytest.warns(ResolutionWarning):
        spectral.lowpass(F, CutoffSpec(5.0), g)


def test_norms_against_closed_forms():
    g = GridSpec(3, 32, 2 * np.pi)
    x = np.broadcast_to(g.coordinates[0], g.shape)
    f = np.sin(x)
    vol = (2 * np.pi) ** 3
    assert spectral.lp_norm(f, 2, g) == pytest.approx(math.sqrt(vol / 2), rel=1e-12)
    assert spectral.lp_norm(f, np.inf, g) == pytest.approx(1.0)
    assert spectral.lp_norm(f, 4, g) == pytest.approx((3 * vol / 8) ** 0.25, rel=1e-12)
    assert spectral.homogeneous_norm(f, 2, g) == pytest.approx(math.sqrt(vol / 2), rel=1e-12)
    assert spectral.sobolev_norm(f, 1, g) == pytest.approx(math.sqrt(vol), rel=1e-12)
    with pytest.raises(ConfigurationError):
        spectral.lp_norm(f, 0.5, g)


def test_grid_validation():
    for kw in (dict(dim=4, n=8, L=1), dict(dim=3, n=12, L=1), dict(dim=3, n=8, L=0),
               dict(dim=3, n=8, L=1, dealias=0), dict(dim=3, n=1024, L=1)):
        with pytest.raises(ConfigurationError):
            GridSpec(**kw)
    g = GridSpec(2, 8, 1.0)
    with pytest.raises(ConfigurationError):
        g.check_field(np.zeros((8, 4)))


def test_single_mode_wavenumber():
    g = GridSpec(3, 16, math.pi)
    f = g.single_mode((1, 0, 0), 2.0)
    F = spectral.forward_transform(f, g)
    big = np.argwhere(np.abs(F) > 1e-10)
    assert len(big) == 2
    assert np.allclose(g.xi[tuple(big.T)], 2.0)
