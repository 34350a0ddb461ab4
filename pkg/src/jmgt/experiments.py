"""End-to-end experiments: decay rates, small-data boundedness, bootstrap ratios,
and the regularity threshold table.

All fits are least squares on ``log ||V||``: against ``log(1 + t)`` for the
algebraic model ``(1 + t)**(-a)`` and against ``t`` for the exponential model
``||V||**2 ~ exp(-b t)`` (so ``b`` is twice the slope).  A fit whose RMS
residual in log space exceeds 0.02 is flagged inconclusive.
"""
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import modes
from .dynamics import Params, StateVector
from .energy import EnergyTracker
from .exceptions import BlowUpError, ConfigurationError, DomainError
from .spectral import GridSpec
from .stepping import StepperConfig, evolve

__all__ = ["DecayFit", "ExperimentConfig", "fit_algebraic", "fit_exponential",
           "decay_experiment", "decay_times", "random_state", "band_state",
           "boundedness_experiment", "amplitude_sweep", "bootstrap_monitor",
           "unit_energy_state", "iterm_slope", "companion_state",
           "threshold_s0", "exponent_table", "threshold_calculator",
           "RESIDUAL_THRESHOLD"]

RESIDUAL_THRESHOLD = 0.02


@dataclass
class DecayFit:
    band: str
    model: str
    exponent: float
    residual: float
    window: tuple
    flagged: bool
    comparisons: dict = field(default_factory=dict)


def _window(t, y, window):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    k = (t >= window[0]) & (t <= window[1]) & (y > 0)
    if k.sum() < 3:
        raise DomainError(f"fewer than 3 positive samples in window {window}")
    return t[k], np.log(y[k])


def _lstsq(x, ly):
    A = np.vstack([x, np.ones_like(x)]).T
    coef = np.linalg.lstsq(A, ly, rcond=None)[0]
    res = ly - A @ coef
    return coef[0], float(np.sqrt(np.mean(res ** 2)))


def fit_algebraic(t, y, window, band="total", threshold=RESIDUAL_THRESHOLD):
    """``y ~ (1 + t)**(-a)``: least squares of ``log y`` on ``log(1 + t)``."""
    tw, ly = _window(t, y, window)
    slope, res = _lstsq(np.log1p(tw), ly)
    return DecayFit(band, "algebraic", float(-slope), res, tuple(window), res > threshold)


def fit_exponential(t, y, window, band="high", threshold=RESIDUAL_THRESHOLD):
    """``y**2 ~ exp(-b t)``: ``b`` is minus twice the slope of ``log y`` on ``t``."""
    tw, ly = _window(t, y, window)
    slope, res = _lstsq(tw, ly)
    return DecayFit(band, "exponential", float(-2 * slope), res, tuple(window), res > threshold)


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by the experiments.

    ``profile``/``profile_params`` name a radial family for decay runs or a
    torus data family (``random``, ``band``) for boundedness runs.
    """
    scenario: str = "default"
    profile: str = "powerlaw-lowfreq"
    profile_params: tuple = ()
    params: Params = Params()
    dim: int = 3
    n: int = 32
    L: float = 2 * math.pi
    gamma: float = 1.0
    R: float = 1.0
    T: float = 1.0
    dt: float = 0.01
    stride: int = 10
    scheme: str = "etd-rk"
    amplitude: float = 1e-3
    seed: int = 0
    s: int = 3
    t_window: tuple = (1e2, 1e4)
    high_window: tuple = (1e2, 2e2)
    n_times: int = 81

    def profile_kwargs(self):
        return dict(self.profile_params)

    @property
    def grid(self):
        return GridSpec(self.dim, self.n, self.L)

    @property
    def stepper(self):
        return StepperConfig(self.scheme, self.dt, self.T, self.stride)


def decay_times(window, n_times, high=False):
    t0, t1 = window
    if high:
        return np.linspace(0.0, t1, n_times)
    return np.concatenate([[0.0], np.logspace(0, math.log10(t1), n_times)])


def decay_experiment(cfg):
    """Radial-quadrature linear decay run.

    Returns ``(fits, series)``.  The default profile for ``powerlaw-lowfreq``
    uses ``a = gamma - dim/2 + 0.01`` so the data sit just inside the negative
    Sobolev space of order ``gamma``.  Algebraic fits on the low band and the
    total carry comparisons against ``gamma``, ``gamma/2`` and (flat profile)
    ``dim/4``; a profile supported at or above ``2R`` gets an exponential fit
    compared with twice the smallest abscissa magnitude over its support.
    """
    kw = cfg.profile_kwargs()
    if cfg.profile == "powerlaw-lowfreq":
        kw.setdefault("a", cfg.gamma - cfg.dim / 2 + 0.01)
        kw.setdefault("R", cfg.R)
    elif cfg.profile == "flat-lowfreq":
        kw.setdefault("R", cfg.R)
    prof = modes.make_profile(cfg.profile, **kw)
    p = cfg.params
    fits = []
    lower = min(prof.breakpoints) if prof.breakpoints else 0.0
    high_only = cfg.profile == "band" and lower >= 2 * cfg.R
    if high_only:
        t = decay_times(cfg.high_window, 2 * cfg.n_times, high=True)
        series = modes.radial_norm_evolution(prof, p, t, dim=cfg.dim, R=cfg.R)
        fit = fit_exponential(t, series.total, cfg.high_window, band="high")
        xs = np.linspace(lower, prof.support, 2001)
        target = 2 * float(np.min(np.abs(modes.abscissa(xs, p))))
        fit.comparisons = {"two_min_abscissa": target,
                           "relative_gap": (fit.exponent - target) / target}
        fits.append(fit)
        return fits, series
    t = decay_times(cfg.t_window, cfg.n_times)
    series = modes.radial_norm_evolution(prof, p, t, dim=cfg.dim, R=cfg.R)
    for band_name, y in (("low", series.low), ("total", series.total)):
        fit = fit_algebraic(t, y, cfg.t_window, band=band_name)
        comp = {"gamma": cfg.gamma, "gamma_half": cfg.gamma / 2,
                "distance_gamma": fit.exponent - cfg.gamma,
                "distance_gamma_half": fit.exponent - cfg.gamma / 2}
        if cfg.profile == "flat-lowfreq":
            comp["dim_quarter"] = cfg.dim / 4
            comp["distance_dim_quarter"] = fit.exponent - cfg.dim / 4
        fit.comparisons = comp
        fits.append(fit)
    return fits, series


# ---------------------------------------------------------------- torus data

def random_state(grid, seed, kmax=3, amplitude=1.0):
    """Random smooth zero-mean state: independent Gaussian coefficients on
    ``0 < |m|_inf <= kmax`` for each of ``u, v, w``, Hermitian symmetrized."""
    rng = np.random.default_rng(seed)
    keep = (np.max(np.abs(np.stack(np.broadcast_arrays(*grid.mode_numbers))), axis=0) <= kmax)
    keep &= grid.mode_sq > 0
    fields = []
    for _ in range(3):
        F = (rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)) * keep
        f = np.fft.ifftn(F).real
        fields.append(f / np.sqrt(np.mean(f ** 2)))
    return StateVector.from_fields(grid, *(amplitude * f for f in fields))


def band_state(grid, m, amplitude=1.0, phase=0.0):
    """Single-mode state ``u = v = w = amplitude cos(k_m . x + phase)``."""
    f = grid.single_mode(m, amplitude, phase)
    return StateVector.from_fields(grid, f, f, f)


def boundedness_experiment(cfg, U0=None, m=None, nonlinear=True, linear_gamma=None):
    """Run a torus trajectory and report the energy ladder against its start.

    Reports ``C = max_t (E_s0**2(t) + D_s0**2(t)) / E_s0**2(0)``, the maximum of
    ``E_s0(t) / E_s0(0)`` (unsquared), the order-``m`` energy series and, if
    ``linear_gamma`` is given, the negative-order constant.  A blow-up is
    returned as a finding, not raised.
    """
    grid = cfg.grid
    p = cfg.params
    s0 = threshold_s0(cfg.s) if cfg.s >= 3 else 0
    top = max(s0, m or 0)
    if U0 is None:
        U0 = random_state(grid, cfg.seed, amplitude=cfg.amplitude)
    tracker = EnergyTracker(p, s=top, gamma=linear_gamma, m0=nonlinear)
    stepper_cfg = cfg.stepper if nonlinear else replace(cfg.stepper, scheme="exact-linear")
    report = {"scenario": cfg.scenario, "s": cfg.s, "s0": s0, "m": m,
              "amplitude": cfg.amplitude, "blowup": None}
    try:
        evolve(U0, p, stepper_cfg, observers=[tracker], nonlinear=nonlinear)
    except BlowUpError as exc:
        report["blowup"] = exc.record
    t = tracker.column("t")
    Es0 = tracker.energy_s(s0)
    Ds0 = np.sum([tracker.column(f"D{k}") for k in range(s0 + 1)], axis=0)
    report.update(t=t, E_s0_sq=Es0, D_s0_sq=Ds0,
                  C=float(np.max((Es0 + Ds0) / Es0[0])),
                  E_ratio_max=float(np.sqrt(np.max(Es0) / Es0[0])))
    if m is not None:
        report["E_m_sq"] = tracker.energy_s(m)
    e0 = tracker.column("e0")
    report["C0"] = float(np.max((e0 + tracker.column("D0")) / e0[0]))
    if linear_gamma is not None:
        en = tracker.column("e_neg")
        report["C_neg"] = float(np.max((tracker.column("E_neg") + tracker.column("D_neg")) / en[0]))
    report["tracker"] = tracker
    return report


def amplitude_sweep(cfg, amplitudes, U_shape=None):
    """Boundedness constant ``C`` for each amplitude on the same data shape."""
    out = []
    for a in amplitudes:
        U0 = (U_shape or random_state(cfg.grid, cfg.seed)).scaled(a)
        rep = boundedness_experiment(replace(cfg, amplitude=a), U0=U0)
        out.append((a, rep["C"], rep["blowup"]))
    return out


def bootstrap_monitor(cfg, k, U0=None, nonlinear=True):
    """Per-snapshot ratios ``I_i / (diss_{k-1} + diss_k)`` and their ratio to ``E_s0(t)``.

    Snapshots with vanishing dissipation are skipped.  Returns a dict with the
    ratio arrays, ``E_s0`` (unsquared) per snapshot, the summed ratio and the
    fitted constant ``max_t sum_i ratio_i / E_s0``.
    """
    if k < 1:
        raise DomainError("bootstrap ratios need k >= 1")
    s0 = threshold_s0(cfg.s)
    p = cfg.params
    if U0 is None:
        U0 = random_state(cfg.grid, cfg.seed, amplitude=cfg.amplitude)
    tracker = EnergyTracker(p, s=max(s0, k), i_orders=(k,))
    evolve(U0, p, cfg.stepper, observers=[tracker], nonlinear=nonlinear)
    den = tracker.column(f"diss{k - 1}") + tracker.column(f"diss{k}")
    ok = den > 0
    ratios = np.array([tracker.column(f"I{i}_k{k}")[ok] / den[ok] for i in range(1, 6)])
    Es0 = np.sqrt(tracker.energy_s(s0))[ok]
    total = ratios.sum(axis=0)
    return {"t": tracker.column("t")[ok], "ratios": ratios, "E_s0": Es0,
            "ratio_sum": total,
            "C": float(np.max(total / Es0)) if Es0.size else float("nan"),
            "skipped": int((~ok).sum()), "tracker": tracker}


def unit_energy_state(grid, p, order, seed=0, kmax=3):
    """:func:`random_state` rescaled so that ``sum_{k <= order} e_k = 1``."""
    U = random_state(grid, seed, kmax=kmax)
    return U.scaled(1.0 / math.sqrt(EnergyTracker.energy_sum(U, p, order)))


def iterm_slope(cfg, k, amplitudes, seed=None):
    """Log-log slope of the largest summed I-term ratio against ``E_s0(0)``.

    One data shape with unit ``E_s0`` is scaled by each amplitude, so
    ``E_s0(0)`` equals the amplitude.  A slope of one is the linear-in-``E_s0``
    behaviour of the bootstrap bound.
    """
    s0 = threshold_s0(cfg.s)
    shape = unit_energy_state(cfg.grid, cfg.params, s0, cfg.seed if seed is None else seed)
    E, top, each = [], [], []
    for a in amplitudes:
        rep = bootstrap_monitor(cfg, k, U0=shape.scaled(a))
        E.append(rep["E_s0"][0])
        top.append(np.max(rep["ratio_sum"]))
        each.append(np.max(rep["ratios"], axis=1))
    logE = np.log(E)
    each = np.array(each)
    slopes = [float(np.polyfit(logE, np.log(each[:, i]), 1)[0]) for i in range(5)]
    return {"amplitude": np.asarray(amplitudes, dtype=float), "E_s0": np.array(E),
            "ratio_max": np.array(top), "term_max": each,
            "slope": float(np.polyfit(logE, np.log(top), 1)[0]), "term_slopes": slopes}


def companion_state(U, high, p, order, m, factor=100.0):
    """``a U + b high`` with the same order-``order`` energy as ``U`` and an
    order-``m`` norm ``factor`` times larger.

    ``U`` and ``high`` must occupy disjoint sets of modes, so the energies add.
    """
    live = lambda V: np.abs(V.hat) > 1e-12 * np.abs(V.hat).max()
    if np.any(live(U) & live(high)):
        raise DomainError("companion parts must occupy disjoint modes")
    e = lambda V, o: EnergyTracker.energy_sum(V, p, o)
    A = np.array([[e(U, order), e(high, order)], [e(U, m), e(high, m)]])
    x = np.linalg.solve(A, [e(U, order), factor ** 2 * e(U, m)])
    if np.any(x < 0):
        raise DomainError(f"no companion with these parts: weights {x}")
    return U.scaled(math.sqrt(x[0])) + high.scaled(math.sqrt(x[1]))


# ---------------------------------------------------------------- thresholds

def threshold_s0(s):
    """``max(floor(2s/3) + 1, floor(s/2) + 2)`` for integer ``s >= 3``."""
    if int(s) != s or s < 3:
        raise DomainError(f"s must be an integer >= 3, got {s}")
    s = int(s)
    return max(2 * s // 3 + 1, s // 2 + 2)


_EXPONENTS = {
    # name: (formula, l range as (lo(k), hi(k)), ceiling(s))
    "m0": (lambda k, l: Fraction(k, 2 * (1 + l)), lambda k: (0, k - 1), lambda s: Fraction(s - 1, 2)),
    "m1": (lambda k, l: Fraction(k + 1, 2 * (2 + l)), lambda k: (0, k - 1), lambda s: Fraction(s, 4)),
    "m2": (lambda k, l: Fraction(1 + k, 2 * (1 + l)), lambda k: (0, k), lambda s: Fraction(1 + s, 2)),
    "m3": (lambda k, l: Fraction(1, 2) + Fraction(1 + 2 * k, 1 + 2 * l), lambda k: (1, k),
           lambda s: Fraction(2 * s, 3) + Fraction(5, 6)),
    "m4": (lambda k, l: Fraction(k + 1, 2 * (1 + l)), lambda k: (0, k), lambda s: Fraction(s + 1, 2)),
    "m5": (lambda k, l: Fraction(3 * (1 + k), 2 * (2 + l)), lambda k: (1, k - 1),
           lambda s: Fraction(s + 1, 2)),
}


def exponent_table(s):
    """Rows ``(name, k, l, value, ceiling, within)`` for ``1 <= k <= s`` over each
    exponent's admissible ``l`` range, in exact rational arithmetic."""
    threshold_s0(s)
    rows = []
    for name, (f, lr, ceil) in _EXPONENTS.items():
        c = ceil(s)
        for k in range(1, s + 1):
            lo, hi = lr(k)
            for l in range(lo, hi + 1):
                v = f(k, l)
                rows.append((name, k, l, v, c, v <= c))
    return rows


def exponent_value(name, k, l):
    if name not in _EXPONENTS:
        raise ConfigurationError(f"unknown exponent {name!r}")
    return _EXPONENTS[name][0](k, l)


def threshold_calculator(s):
    """``(s0, table)`` with ``table`` from :func:`exponent_table`."""
    return threshold_s0(s), exponent_table(s)
