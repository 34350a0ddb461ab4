"""Acceptance checks, one per criterion, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py -v -s`` (or ``python3 tests/test_acceptance.py``);
every criterion prints one ``PASS``/``FAIL`` line.
"""
import math
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from jmgt import experiments as ex
from jmgt import inequalities as iq
from jmgt import modes, spectral
from jmgt.cli import main as cli_main
from jmgt.dynamics import Params, dealiased_product
from jmgt.energy import EnergyTracker
from jmgt.spectral import GridSpec
from jmgt.stepping import StepperConfig, evolve

P = Params()


def _line(n, ok, detail, elapsed, budget):
    within = budget is None or elapsed <= budget
    status = "PASS" if ok and within else "FAIL"
    lim = f" (budget {budget:g} s)" if budget else ""
    return status == "PASS", f"{status} criterion {n:>2}: {detail} [{elapsed:.1f} s{lim}]"


def stability_region():
    g = np.linspace(0.04, 2.0, 50)
    smap = modes.stability_region(g, g, [0.1, 1.0, 10.0, 100.0])
    T, B = np.meshgrid(g, g, indexing="ij")
    exact = np.array_equal(smap.stable, B > T)
    edge = float(np.max(np.abs(np.diag(smap.abscissa))))
    return exact and edge <= 1e-8, f"stability map equals beta > tau: {exact}; max |abscissa| on beta = tau {edge:.1e}"


def lyapunov_envelope():
    env = modes.abscissa_envelope(P, np.logspace(-3, 3, 200))
    rep = modes.verify_lyapunov(P, np.logspace(-3, 3, 10), kappa_max=0.5)
    ok = env.ok and env.c > 0 and rep.ok and rep.kappa <= 0.5
    return ok, (f"envelope c = {env.c:.4g}; certified delta = {rep.delta:.3g}, c = {rep.c:.3g}, "
                f"kappa = {rep.kappa:.3g}")


def low_frequency_decay():
    t0 = time.perf_counter()
    fits, _ = ex.decay_experiment(ex.ExperimentConfig(profile="powerlaw-lowfreq", gamma=1.0))
    low = [f for f in fits if f.band == "low"][0]
    t_pow = time.perf_counter() - t0
    t0 = time.perf_counter()
    fits, _ = ex.decay_experiment(ex.ExperimentConfig(profile="flat-lowfreq"))
    flat = [f for f in fits if f.band == "low"][0]
    t_flat = time.perf_counter() - t0
    ok = (0.45 <= low.exponent <= 0.55 and 0.70 <= flat.exponent <= 0.80
          and not low.flagged and not flat.flagged and t_pow < 120 and t_flat < 120)
    return ok, (f"gamma = 1 exponent {low.exponent:.4f} (distance to gamma "
                f"{low.comparisons['distance_gamma']:+.3f}); flat exponent {flat.exponent:.4f}")


def high_frequency_decay():
    cfg = ex.ExperimentConfig(profile="band", profile_params=(("xi1", 2.0), ("xi2", 6.0)), R=1.0)
    (fit,), _ = ex.decay_experiment(cfg)
    gap = fit.comparisons["relative_gap"]
    return abs(gap) <= 0.05, (f"rate {fit.exponent:.4f} against 2 min|abscissa| = "
                              f"{fit.comparisons['two_min_abscissa']:.4f} (gap {gap:+.2%})")


def linear_boundedness():
    cfg = ex.ExperimentConfig(n=32, T=20.0, dt=0.05, stride=10, amplitude=1e-3)
    C0, Cn = [], []
    for seed in range(10):
        rep = ex.boundedness_experiment(cfg, U0=ex.random_state(cfg.grid, seed, amplitude=1e-3),
                                        nonlinear=False, linear_gamma=1.0)
        C0.append(rep["C0"])
        Cn.append(rep["C_neg"])
    return max(C0) <= 10 and max(Cn) <= 10, f"C = {max(C0):.3f}, C' = {max(Cn):.3f} over 10 runs"


def nonlinear_boundedness():
    cfg = ex.ExperimentConfig(n=32, L=math.pi, T=50.0, dt=0.05, stride=10, s=7, amplitude=1e-3)
    g, s0, m = cfg.grid, ex.threshold_s0(7), 7
    base = (ex.band_state(g, (1, 0, 0)) + ex.band_state(g, (0, 1, 0), 0.5, 1.0)
            + ex.band_state(g, (0, 0, 1), 0.7, 2.0))
    base = base.scaled(1e-3 / math.sqrt(EnergyTracker.energy_sum(base, P, s0)))
    comp = ex.companion_state(base, ex.band_state(g, (10, 10, 10)), P, s0, m, 100.0)
    reps = [ex.boundedness_experiment(cfg, U0=U, m=m) for U in (base, comp)]
    Em = [math.sqrt(r["E_m_sq"][0]) for r in reps]
    Es = [math.sqrt(r["tracker"].energy_s(s0)[0]) for r in reps]
    ok = (all(r["blowup"] is None and r["E_ratio_max"] <= 2 for r in reps)
          and math.isclose(Es[0], Es[1], rel_tol=1e-9) and Em[1] / Em[0] >= 99.9)
    return ok, (f"max E_s0(t)/E_s0(0) = {reps[0]['E_ratio_max']:.4f}; companion "
                f"(E_{m} x{Em[1] / Em[0]:.0f}, equal E_s0) {reps[1]['E_ratio_max']:.4f}")


def _convolution(A, B, grid):
    n = grid.n
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    M = np.stack(np.meshgrid(k, k, k, indexing="ij"), -1).reshape(-1, 3)
    a, b = A.ravel(), B.ravel()
    out = np.zeros(grid.shape, dtype=complex)
    for i in np.flatnonzero(a):
        j = np.flatnonzero(b)
        s = M[i] + M[j]
        ok = np.all((s >= -(n // 2)) & (s < n // 2), axis=1)
        np.add.at(out, tuple((s[ok] % n).T), a[i] * b[j[ok]])
    return out / grid.L ** 1.5


def nonlinearity_oracle():
    g = GridSpec(3, 8, 2 * np.pi)
    rng = np.random.default_rng(7)
    mask = g.dealias_mask
    A, B = (np.where(mask, spectral.forward_transform(rng.normal(size=g.shape), g), 0) for _ in range(2))
    want = np.where(mask, _convolution(A, B, g), 0)
    err = np.max(np.abs(dealiased_product(A, B, g) - want)) / np.max(np.abs(want))
    g16 = GridSpec(3, 16, 2 * np.pi)
    U0 = ex.random_state(g16, 0, kmax=2, amplitude=0.05)
    ref = evolve(U0, P, StepperConfig("imex2", 0.00125, 1.0), nonlinear=True).final
    dts = (0.02, 0.01, 0.005)
    errs = [np.linalg.norm((evolve(U0, P, StepperConfig("imex2", dt, 1.0), nonlinear=True).final.hat
                            - ref.hat).ravel()) for dt in dts]
    order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    return err <= 1e-12 and order >= 1.9, f"convolution error {err:.1e}; IMEX order {order:.3f}"


def iterm_scaling():
    cfg = ex.ExperimentConfig(n=16, T=2.0, dt=0.02, stride=10, s=3)
    res = ex.iterm_slope(cfg, 1, (1e-4, 1e-3, 1e-2))
    sl = res["term_slopes"] + [res["slope"]]
    ok = all(abs(x - 1) <= 0.15 for x in sl)
    return ok, "slopes I1..I5, sum: " + ", ".join(f"{x:.4f}" for x in sl)


def inequality_lab():
    g = GridSpec(3, 16, math.pi)
    neg = 0.0
    for l, gam in ((0, 1), (1, 1), (0, Fraction(1, 2)), (2, Fraction(3, 2))):
        spec = iq.InequalitySpec.make("NEG", l=l, gamma=gam, theta=1 / (l + gam + 1))
        for member in iq.single_mode_family(g):
            neg = max(neg, abs(iq.check_inequality(spec, member.make(g, 1.0), g) - 1))
    drift, finite = 0.0, True
    for specs, family, dilate in iq.preregistered_suites().values():
        _, summary = iq.run_suite(specs, family, iq.DEFAULT_GRID, dilate)
        finite &= all(math.isfinite(c) for c, _, _ in summary.values())
        drift = max([drift] + [d for _, _, d in summary.values()])
    rejected = 0
    for kind, params in iq.adversarial_specs():
        try:
            iq.validate(kind, params)
        except iq.ConfigurationError:
            rejected += 1
    ok = neg <= 1e-14 and finite and drift <= 0.05 and rejected == 20
    return ok, (f"NEG single-mode |ratio - 1| = {neg:.1e}; C_hat finite: {finite}; "
                f"max drift {drift:.2%}; adversarial rejected {rejected}/20")


def thresholds():
    s0 = [ex.threshold_s0(s) for s in (3, 6, 10)]
    rows = {(r[0], r[1], r[2]): r for r in ex.exponent_table(4)}
    m0 = rows["m0", 4, 1][3]
    ceil = {r[4] for r in ex.exponent_table(6) if r[0] == "m3"}
    ok = s0 == [3, 5, 7] and m0 == 1 and ceil == {Fraction(2 * 6, 3) + Fraction(5, 6)}
    return ok, f"s0(3, 6, 10) = {s0}; m0(4,1) = {m0}; m3 ceiling at s = 6: {sorted(ceil)[0]}"


CLI_RUNS = [
    ("simulate", "--n", "16", "--T", "0.2", "--dt", "0.02"),
    ("modes", "--map_n", "10"),
    ("decay", "--profile", "flat-lowfreq", "--n_times", "41"),
    ("bounded", "--n", "16", "--T", "2", "--dt", "0.05", "--runs", "2"),
    ("bootstrap", "--T", "0.4"),
    ("inequalities", "--suite", "gn-gaussian"),
    ("thresholds", "--s", "6"),
    ("report",),
]


def cli_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a", Path(tmp) / "b"
        codes = []
        for args in CLI_RUNS:
            codes += [cli_main([*args, "--out", str(a)]), cli_main([*args, "--out", str(b)])]
        names = sorted(p.name for p in a.glob("*.csv"))
        same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    ok = same and all(c == 0 for c in codes) and len(names) >= 10
    return ok, f"{len(names)} CSVs from {len(CLI_RUNS)} subcommands byte-identical: {same}"


CRITERIA = [
    (1, stability_region, 10), (2, lyapunov_envelope, 30), (3, low_frequency_decay, 240),
    (4, high_frequency_decay, 60), (5, linear_boundedness, 120), (6, nonlinear_boundedness, 600),
    (7, nonlinearity_oracle, 60), (8, iterm_scaling, 300), (9, inequality_lab, 60),
    (10, thresholds, 1), (11, cli_determinism, None),
]


def evaluate(n, fn, budget):
    t0 = time.perf_counter()
    ok, detail = fn()
    return _line(n, ok, detail, time.perf_counter() - t0, budget)


@pytest.mark.slow
@pytest.mark.parametrize("n,fn,budget", CRITERIA, ids=[f"criterion{c[0]:02d}" for c in CRITERIA])
def test_acceptance(n, fn, budget, capsys):
    ok, line = evaluate(n, fn, budget)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
