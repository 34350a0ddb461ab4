import numpy as np
import pytest
from hypothesis import given, strategies as st

from jmgt import spectral
from jmgt.dynamics import (Params, StateVector, compute_V, dealiased_product,
                           nonlinear_term_k, nonlinearity_hat, rhs, v_norm)
from jmgt.exceptions import ConfigurationError, DomainError
from jmgt.experiments import random_state
from jmgt.spectral import GridSpec
from jmgt.stepping import linear_generator


def direct_convolution(A, B, grid):
    """Exact product coefficients by summing over all pairs of lattice modes."""
    n = grid.n
    m = np.fft.fftfreq(n, 1.0 / n).astype(int)
    M = np.stack(np.meshgrid(m, m, m, indexing="ij"), -1).reshape(-1, 3)
    a, b = A.ravel(), B.ravel()
    nz_a, nz_b = np.flatnonzero(a), np.flatnonzero(b)
    out = np.zeros(grid.shape, dtype=complex)
    for i in nz_a:
        s = M[i] + M[nz_b]
        ok = np.all((s >= -(n // 2)) & (s < n // 2), axis=1)
        idx = tuple((s[ok] % n).T)
        np.add.at(out, idx, a[i] * b[nz_b[ok]])
    return out / grid.L ** 1.5


def test_product_matches_convolution(grid8, rng):
    mask = grid8.dealias_mask
    A = np.where(mask, spectral.forward_transform(rng.normal(size=grid8.shape), grid8), 0)
    B = np.where(mask, spectral.forward_transform(rng.normal(size=grid8.shape), grid8), 0)
    got = dealiased_product(A, B, grid8)
    want = np.where(mask, direct_convolution(A, B, grid8), 0)
    assert np.max(np.abs(got - want)) <= 1e-12 * np.max(np.abs(want))


def test_nonlinearity_of_known_fields(p):
    g = GridSpec(3, 16, 2 * np.pi)
    x = np.broadcast_to(g.coordinates[0], g.shape)
    U = StateVector.from_fields(g, np.cos(x), np.sin(x), np.cos(x))
    N = spectral.inverse_transform(nonlinearity_hat(U, p), g)
    want = p.B_over_A * np.sin(x) * np.cos(x) - 2 * np.sin(x) * np.cos(x)
    assert np.allclose(N, want, atol=1e-12)
    lam2 = nonlinear_term_k(U, p, 2)
    assert np.allclose(lam2, 4 * want, atol=1e-11)
    with pytest.raises(DomainError):
        nonlinear_term_k(U, p, -1)


@given(st.floats(0.1, 10.0), st.integers(0, 1000))
def test_linear_rhs_matches_generator(L, seed):
    p = Params()
    g = GridSpec(3, 8, L)
    rng = np.random.default_rng(seed)
    U = StateVector.from_fields(g, *rng.normal(size=(3,) + g.shape))
    dU = rhs(U, p, nonlinear=False).hat
    A = linear_generator(g.xi, p)
    assert np.allclose(dU, np.einsum("...ij,j...->i...", A, U.hat), atol=1e-10)


def test_v_norm_matches_fields(p, grid8):
    # band-limited data: the Nyquist mode has no real derivative
    U = random_state(grid8, 5, kmax=3)
    comps = compute_V(U, p)
    assert len(comps) == 7
    total = sum(np.sum(c ** 2) for c in comps) * grid8.cell_volume
    assert v_norm(U, p) ** 2 == pytest.approx(total, rel=1e-12)


def test_state_algebra(grid8, rng):
    U = StateVector.from_fields(grid8, *rng.normal(size=(3,) + grid8.shape))
    assert np.allclose((U + U).hat, U.scaled(2).hat)
    assert StateVector.zeros(grid8).l2_norm() == 0
    with pytest.raises(ConfigurationError):
        StateVector(grid8, np.zeros((2,) + grid8.shape))


def test_params_validation():
    with pytest.raises(DomainError):
        Params(tau=0.0)
    with pytest.raises(ConfigurationError):
        Params(tau=1.0, beta=0.5)
    with pytest.raises(ConfigurationError):
        Params(tau=-1.0)
    assert Params(tau=1.0, beta=0.5, allow_unstable=True).gap == -0.5
