import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from jmgt.dynamics import Params, StateVector
from jmgt.exceptions import BlowUpError, ConfigurationError
from jmgt.experiments import random_state
from jmgt.spectral import GridSpec
from jmgt.stepping import (Stepper, StepperConfig, evolve, expm, lattice_abscissa,
                           linear_generator, linear_propagator, phi_functions, step)


@given(st.integers(0, 10 ** 6), st.floats(1e-3, 1e2), st.sampled_from([2, 3, 5, 9]))
def test_expm_matches_scipy(seed, scale, n):
    A = np.random.default_rng(seed).normal(size=(n, n)) * scale / n
    want = scipy.linalg.expm(A)
    got = expm(A)
    assert np.linalg.norm(got - want) <= 1e-10 * np.linalg.norm(want)


def test_expm_against_high_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    rng = np.random.default_rng(305)
    for scale in (1e-3, 1.0, 57.0):
        A = rng.normal(size=(3, 3)) * scale
        want = np.array(mpmath.expm(mpmath.matrix(A.tolist())).tolist(), dtype=float)
        assert np.linalg.norm(expm(A) - want) <= 1e-13 * np.linalg.norm(want)


def test_expm_batches():
    A = np.random.default_rng(0).normal(size=(4, 5, 3, 3)) * np.logspace(-3, 2, 5)[:, None, None]
    got = expm(A)
    for i in range(4):
        for j in range(5):
            assert np.allclose(got[i, j], scipy.linalg.expm(A[i, j]), rtol=1e-10, atol=1e-13)


def test_phi_functions_against_closed_forms():
    M = linear_generator(np.array([0.3, 1.0, 7.0]), Params()) * 0.1
    E, phi1, phi2 = phi_functions(M)
    eye = np.eye(3)
    for i in range(3):
        Mi = np.linalg.inv(M[i])
        assert np.allclose(E[i], scipy.linalg.expm(M[i]), atol=1e-13)
        assert np.allclose(phi1[i], Mi @ (E[i] - eye), atol=1e-10)
        assert np.allclose(phi2[i], Mi @ Mi @ (E[i] - eye - M[i]), atol=1e-9)


@given(st.floats(1e-2, 1e2), st.floats(0.0, 5.0))
def test_propagator_by_eigendecomposition(xi, t):
    p = Params()
    A = linear_generator(xi, p)
    lam, V = np.linalg.eig(A)
    want = (V @ np.diag(np.exp(lam * t)) @ np.linalg.inv(V)).real
    assert np.allclose(linear_propagator(xi, p, t), want, atol=1e-9 * max(1, np.abs(want).max()))


def test_exact_linear_semigroup(p):
    g = GridSpec(3, 8, 2 * np.pi)
    U0 = random_state(g, 3)
    one = evolve(U0, p, StepperConfig("exact-linear", 0.5, 2.0)).final
    two = evolve(U0, p, StepperConfig("exact-linear", 0.1, 2.0)).final
    assert np.allclose(one.hat, two.hat, atol=1e-12 * U0.l2_norm())


def _order(scheme, p):
    g = GridSpec(3, 16, 2 * np.pi)
    U0 = random_state(g, 0, kmax=2, amplitude=0.05)
    ref = evolve(U0, p, StepperConfig(scheme, 0.00125, 1.0), nonlinear=True).final
    errs = []
    for dt in (0.02, 0.01, 0.005):
        U = evolve(U0, p, StepperConfig(scheme, dt, 1.0), nonlinear=True).final
        errs.append(np.linalg.norm((U.hat - ref.hat).ravel()))
    return np.polyfit(np.log([0.02, 0.01, 0.005]), np.log(errs), 1)[0]


@pytest.mark.parametrize("scheme", ["imex2", "etd-rk"])
def test_second_order_convergence(scheme, p):
    assert _order(scheme, p) >= 1.9


def test_observer_schedule(p):
    g = GridSpec(3, 8, 2 * np.pi)
    seen = []
    traj = evolve(random_state(g, 1), p, StepperConfig("exact-linear", 0.1, 1.0, stride=3),
                  observers=[lambda t, U: seen.append(t)])
    assert traj.steps == 10
    assert np.allclose(seen, [0.0, 0.3, 0.6, 0.9, 1.0])


def test_single_step_helper(p):
    g = GridSpec(3, 8, 2 * np.pi)
    U = random_state(g, 2)
    cfg = StepperConfig("etd-rk", 0.01, 0.01)
    assert np.allclose(step(U, p, cfg, nonlinear=True).hat,
                       Stepper(g, p, cfg, True).step(U.hat))


def test_blowup_is_reported():
    p = Params(tau=1.0, beta=0.5, allow_unstable=True)
    g = GridSpec(3, 8, 2 * np.pi)
    assert lattice_abscissa(g, p) > 0
    with pytest.raises(BlowUpError) as info:
        evolve(random_state(g, 0), p, StepperConfig("exact-linear", 1.0, 200.0))
    assert info.value.record["step"] > 0


def test_config_errors(p):
    for kw in (dict(scheme="rk4"), dict(dt=0.0), dict(T=-1.0), dict(stride=0)):
        with pytest.raises(ConfigurationError):
            StepperConfig(**kw)
    with pytest.raises(ConfigurationError):
        StepperConfig(dt=0.3, T=1.0).n_steps
    with pytest.raises(ConfigurationError):
        Stepper(GridSpec(3, 8, 1.0), p, StepperConfig(), nonlinear=True)
