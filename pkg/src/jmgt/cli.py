"""Command-line front end.

Every subcommand reads an optional ``--config`` file of ``key = value`` lines,
lets ``--key value`` flags override it, writes deterministic CSVs plus a JSON
manifest into ``--out`` and exits with 0 when all of its checks pass, 2 when
one is flagged and 1 on an error.
"""
import argparse
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, experiments, inequalities, modes
from . import io as jio
from .dynamics import Params
from .energy import EnergyTracker
from .exceptions import BlowUpError, ConfigurationError, DomainError
from .stepping import evolve

EXIT_PASS, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2

COMMANDS = ("simulate", "modes", "decay", "bounded", "bootstrap",
            "inequalities", "thresholds", "report")

_PHYS = dict(tau=0.5, beta=1.0, B_over_A=5.0, alpha=1.0, c=1.0)
_TORUS = dict(dim=3, n=32, L=2 * math.pi, scheme="etd-rk", seed=0, s=3,
              amplitude=1e-3, profile="random", profile_params=())

DEFAULTS = {
    "simulate": dict(_PHYS, **_TORUS, T=1.0, dt=0.01, stride=10, nonlinear=True,
                     growth_max=2.0),
    "modes": dict(_PHYS, xi_min=1e-3, xi_max=1e3, n_xi=200, map_n=0),
    "decay": dict(_PHYS, dim=3, profile="powerlaw-lowfreq", profile_params=(),
                  gamma=1.0, R=1.0, t_window=(1e2, 1e4), high_window=(1e2, 2e2),
                  n_times=81),
    "bounded": dict(_PHYS, **_TORUS, T=20.0, dt=0.05, stride=10, runs=1,
                    nonlinear=False, gamma=1.0, c_max=10.0, growth_max=2.0),
    "bootstrap": dict(_PHYS, **dict(_TORUS, n=16), T=2.0, dt=0.02, stride=10, k=1,
                      amplitudes=()),
    "inequalities": dict(suite="all"),
    "thresholds": dict(s=3),
    "report": dict(),
}


class Run:
    """Collects outputs and assertion outcomes for one subcommand."""

    def __init__(self, command, settings, out):
        self.command, self.settings, self.out = command, settings, Path(out)
        self.outputs, self.assertions = [], []
        self.timings = {}
        self.manifest_name = f"{command}_manifest.json"
        self.grid = {}

    def csv(self, name, header, rows):
        jio.write_csv(self.out / name, header, rows, self.manifest_name)
        self.outputs.append(name)
        return self.out / name

    def check(self, name, passed, detail=""):
        self.assertions.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def status(self):
        return "pass" if all(a["passed"] for a in self.assertions) else "flagged"


# ---------------------------------------------------------------- settings

def _add_key_flags(parser):
    for key in jio.CONFIG_KEYS:
        if key != "schema":
            parser.add_argument(f"--{key}", dest=f"set_{key}", metavar="VALUE", default=None)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--plot", action="store_true", help="also write SVG line plots")
    _add_key_flags(common)
    parser = argparse.ArgumentParser(prog="jmgt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jmgt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "evolve a torus state and write the energy ladder",
        "modes": "dispersion roots, stability and decay envelope",
        "decay": "radial-quadrature decay run with fitted rates",
        "bounded": "energy boundedness over random small data",
        "bootstrap": "I-term ratios along a trajectory or an amplitude sweep",
        "inequalities": "interpolation inequality suites and validator check",
        "thresholds": "regularity threshold and exponent table",
        "report": "aggregate the manifests found in --out",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_settings(command, args):
    """Defaults, then the config file, then explicit flags."""
    settings = dict(DEFAULTS[command])
    if args.config:
        settings.update(jio.read_config(args.config))
    for key, conv in jio.CONFIG_KEYS.items():
        raw = getattr(args, f"set_{key}", None)
        if raw is None:
            continue
        try:
            settings[key] = conv(raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for --{key}: {exc}", key=key)
    settings.pop("schema", None)
    return settings


def _params(st, allow_unstable=False):
    return Params(tau=st["tau"], beta=st["beta"], B_over_A=st["B_over_A"],
                  c=st["c"], alpha=st["alpha"], allow_unstable=allow_unstable)


def _experiment_config(st):
    keys = ("scenario", "profile", "profile_params", "dim", "n", "L", "gamma", "R", "T",
            "dt", "stride", "scheme", "amplitude", "seed", "s", "t_window", "high_window",
            "n_times")
    kw = {k: st[k] for k in keys if k in st}
    for w in ("t_window", "high_window"):
        if w in kw and len(kw[w]) != 2:
            raise ConfigurationError(f"{w} needs two numbers, got {kw[w]}", key=w)
    return experiments.ExperimentConfig(params=_params(st), **kw)


def _initial_state(st, cfg, seed):
    grid = cfg.grid
    extra = dict(st.get("profile_params", ()))
    if st["profile"] == "random":
        return experiments.random_state(grid, seed, kmax=int(extra.get("kmax", 3)),
                                        amplitude=cfg.amplitude)
    if st["profile"] == "mode":
        m = tuple(int(extra.get(f"m{i}", 1 if i == 1 else 0)) for i in range(1, grid.dim + 1))
        return experiments.band_state(grid, m, cfg.amplitude, extra.get("phase", 0.0))
    raise ConfigurationError(f"torus runs need profile random or mode, got {st['profile']!r}",
                             key="profile")


# ---------------------------------------------------------------- subcommands

def cmd_simulate(run, st):
    cfg = _experiment_config(st)
    p = cfg.params
    run.grid = {"dim": cfg.dim, "n": cfg.n, "L": cfg.L}
    U0 = _initial_state(st, cfg, cfg.seed)
    tracker = EnergyTracker(p, s=cfg.s)
    t0 = time.perf_counter()
    blowup = None
    try:
        traj = evolve(U0, p, cfg.stepper, observers=[tracker], nonlinear=st["nonlinear"])
        final = traj.final
    except BlowUpError as exc:
        blowup, final = exc.record, None
    run.timings["evolve_s"] = time.perf_counter() - t0
    cols = tracker.columns
    run.csv("simulate_energy.csv", cols, [[r[c] for c in cols] for r in tracker.rows])
    if final is not None:
        for name, f in zip("uvw", final.fields):
            jio.write_field(run.out / f"simulate_{name}.jmgt", f, cfg.L)
            run.outputs.append(f"simulate_{name}.jmgt")
    run.check("no_blowup", blowup is None, str(blowup or ""))
    E = tracker.column("E_s")
    growth = math.sqrt(E.max() / E[0]) if E[0] > 0 else float("nan")
    run.check("energy_growth", growth <= st["growth_max"],
              f"max sqrt(E_s(t)/E_s(0)) = {growth:.6g}")
    print(f"steps={cfg.stepper.n_steps} snapshots={len(tracker.rows)} growth={growth:.6g}")


def cmd_modes(run, st):
    p = _params(st, allow_unstable=True)
    if not 0 < st["xi_min"] < st["xi_max"]:
        raise ConfigurationError("need 0 < xi_min < xi_max", key="xi_min")
    xis = np.logspace(math.log10(st["xi_min"]), math.log10(st["xi_max"]), st["n_xi"])
    env = modes.abscissa_envelope(p, xis)
    header = ["xi", "re1", "re2", "re3", "im1", "im2", "im3", "envelope_bound", "abscissa"]
    run.csv("modes_dispersion.csv", header,
            [row + [a] for row, a in zip(env.rows(p), env.abscissa)])
    sample = np.array([0.1, 1.0, 10.0, 100.0])
    pairs = [(p.tau, p.beta)]
    if st["map_n"] > 0:
        g = np.linspace(2.0 / st["map_n"], 2.0, st["map_n"])
        pairs += [(t, b) for t in g for b in g]
    rows, agree = [], True
    for tau, beta in pairs:
        smap = modes.stability_region([tau], [beta], sample, p.alpha, p.c)
        hurwitz = modes.hurwitz_stable(tau, beta, p.alpha, p.c)
        stable = bool(smap.stable[0, 0])
        agree &= stable == hurwitz
        rows.append([tau, beta, stable, hurwitz, bool(smap.marginal[0, 0]),
                     float(smap.abscissa[0, 0])])
    run.csv("modes_stability.csv", ["tau", "beta", "stability", "hurwitz", "marginal", "abscissa"],
            rows)
    run.check("stability_matches_hurwitz", agree)
    if rows[0][3]:
        run.check("decay_envelope", env.ok, f"c = {env.c:.6g}")
    print(f"stability={'true' if rows[0][2] else 'false'} envelope_c={env.c:.6g}")


_FIT_EXTRAS = ("gamma", "gamma_half", "distance_gamma", "distance_gamma_half", "dim_quarter",
               "distance_dim_quarter", "two_min_abscissa", "relative_gap")


def cmd_decay(run, st):
    cfg = _experiment_config(st)
    run.grid = {"radial": True, "dim": cfg.dim, "R": cfg.R}
    t0 = time.perf_counter()
    fits, series = experiments.decay_experiment(cfg)
    run.timings["quadrature_s"] = time.perf_counter() - t0
    header = ["band", "model", "exponent", "residual", "t_lo", "t_hi", "flagged", *_FIT_EXTRAS]
    run.csv("decay_fits.csv", header,
            [[f.band, f.model, f.exponent, f.residual, f.window[0], f.window[1], f.flagged,
              *(f.comparisons.get(k) for k in _FIT_EXTRAS)] for f in fits])
    run.csv("decay_series.csv", ["t", "total", "low", "high", "cross", "error_estimate"],
            list(zip(series.times, series.total, series.low, series.high, series.cross,
                     np.broadcast_to(series.error_estimate, np.shape(series.times)))))
    for f in fits:
        run.check(f"fit_{f.band}_conclusive", not f.flagged, f"residual {f.residual:.3g}")
        print(f"{f.band}: {f.model} exponent {f.exponent:.6g} (residual {f.residual:.3g})")


def cmd_bounded(run, st):
    cfg = _experiment_config(st)
    run.grid = {"dim": cfg.dim, "n": cfg.n, "L": cfg.L}
    nonlinear = st["nonlinear"]
    rows, series = [], []
    t0 = time.perf_counter()
    for i in range(st["runs"]):
        seed = cfg.seed + i
        U0 = _initial_state(st, cfg, seed)
        rep = experiments.boundedness_experiment(
            cfg, U0=U0, nonlinear=nonlinear, linear_gamma=None if nonlinear else cfg.gamma)
        rows.append([seed, rep["C"], rep["C0"], rep.get("C_neg"), rep["E_ratio_max"],
                     rep["blowup"] is not None])
        series += [[seed, t, e, d] for t, e, d in zip(rep["t"], rep["E_s0_sq"], rep["D_s0_sq"])]
    run.timings["runs_s"] = time.perf_counter() - t0
    run.csv("bounded.csv", ["seed", "C", "C0", "C_neg", "E_ratio_max", "blowup"], rows)
    run.csv("bounded_series.csv", ["seed", "t", "E_s0_sq", "D_s0_sq"], series)
    run.check("no_blowup", not any(r[5] for r in rows))
    if nonlinear:
        worst = max(r[4] for r in rows)
        run.check("energy_growth", worst <= st["growth_max"], f"max E ratio {worst:.6g}")
    else:
        c0 = max(r[2] for r in rows)
        cn = max(r[3] for r in rows)
        run.check("C0_bounded", c0 <= st["c_max"], f"C0 = {c0:.6g}")
        run.check("C_neg_bounded", cn <= st["c_max"], f"C_neg = {cn:.6g}")
    print(f"runs={len(rows)} " + " ".join(f"seed{r[0]}:C={r[1]:.4g}" for r in rows))


def cmd_bootstrap(run, st):
    cfg = _experiment_config(st)
    run.grid = {"dim": cfg.dim, "n": cfg.n, "L": cfg.L}
    k = st["k"]
    t0 = time.perf_counter()
    if st["amplitudes"]:
        res = experiments.iterm_slope(cfg, k, st["amplitudes"])
        run.csv("bootstrap_sweep.csv", ["amplitude", "E_s0", "ratio_max"],
                list(zip(res["amplitude"], res["E_s0"], res["ratio_max"])))
        run.check("slope_near_one", abs(res["slope"] - 1) <= 0.15, f"slope {res['slope']:.6g}")
        print(f"slope={res['slope']:.6g}")
    else:
        rep = experiments.bootstrap_monitor(cfg, k, U0=_initial_state(st, cfg, cfg.seed))
        header = ["t", "I1", "I2", "I3", "I4", "I5", "ratio_sum", "E_s0"]
        run.csv("bootstrap.csv", header,
                list(zip(rep["t"], *rep["ratios"], rep["ratio_sum"], rep["E_s0"])))
        run.check("ratios_finite", bool(np.all(np.isfinite(rep["ratio_sum"]))))
        print(f"C={rep['C']:.6g} skipped={rep['skipped']}")
    run.timings["run_s"] = time.perf_counter() - t0


def cmd_inequalities(run, st):
    grid = inequalities.DEFAULT_GRID
    run.grid = {"dim": grid.dim, "n": grid.n, "L": grid.L}
    suites = inequalities.preregistered_suites()
    if st["suite"] != "all":
        if st["suite"] not in suites:
            raise ConfigurationError(f"unknown suite {st['suite']!r}; choose from "
                                     f"{sorted(suites)} or all", key="suite")
        suites = {st["suite"]: suites[st["suite"]]}
    rows, summary = [], []
    for name, (specs, family, dilate) in suites.items():
        t0 = time.perf_counter()
        r, s = inequalities.run_suite(specs, family, grid, dilate)
        run.timings[f"{name}_s"] = time.perf_counter() - t0
        rows += [[name, spec.name, spec.kind, member, lam, ratio, fl]
                 for spec, member, lam, ratio, fl in r]
        summary += [[name, spec, c, who, drift] for spec, (c, who, drift) in s.items()]
    run.csv("inequalities.csv", ["suite", "spec", "kind", "member", "lam", "ratio", "flagged"],
            rows)
    run.csv("inequalities_summary.csv", ["suite", "spec", "C_hat", "argmax", "drift"], summary)
    run.check("C_hat_finite", all(math.isfinite(r[2]) for r in summary))
    worst = max(r[4] for r in summary)
    run.check("dilation_drift", worst <= 0.05, f"max drift {worst:.3g}")
    rejected = 0
    for kind, params in inequalities.adversarial_specs():
        try:
            inequalities.validate(kind, params)
        except ConfigurationError:
            rejected += 1
    run.check("adversarial_rejected", rejected == len(inequalities.adversarial_specs()),
              f"{rejected} rejected")
    print(f"specs={len(summary)} max_drift={worst:.3g} adversarial_rejected={rejected}")


def cmd_thresholds(run, st):
    s0, table = experiments.threshold_calculator(st["s"])
    rows = [["s0", None, None, s0, None, None]] + [list(r) for r in table]
    run.csv("thresholds.csv", ["quantity", "k", "l", "value", "ceiling", "within"], rows)
    print(f"s0 = {s0}")


def cmd_report(run, st):
    found = sorted(p for p in run.out.glob("*_manifest.json") if p.name != run.manifest_name)
    if not found:
        raise FileNotFoundError(f"no manifests found in {run.out}")
    rows = []
    for path in found:
        m = jio.read_manifest(path)
        missing = [o for o in m.outputs if not (run.out / o).exists()]
        if missing:
            raise FileNotFoundError(f"{path.name} lists missing outputs {missing}")
        failed = [a["name"] for a in m.assertions if not a["passed"]]
        rows.append([m.command, m.status, len(m.assertions), ";".join(failed), len(m.outputs)])
        run.check(f"{m.command}_passed", m.status == "pass", ";".join(failed))
    run.csv("report.csv", ["command", "status", "assertions", "failed", "outputs"], rows)
    for r in rows:
        print(f"{r[0]:<14}{r[1]}")


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}

_PLOTS = {
    "simulate_energy.csv": ("t", ["E_s", "D_s"], True),
    "decay_series.csv": ("t", ["total", "low", "high"], True),
    "modes_dispersion.csv": ("xi", ["abscissa", "envelope_bound"], False),
    "bounded_series.csv": ("t", ["E_s0_sq", "D_s0_sq"], True),
    "bootstrap.csv": ("t", ["ratio_sum"], True),
}


def write_plots(run):
    """SVG line plots for the CSVs that have a natural x axis."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        warnings.warn("matplotlib not available; skipping plots")
        return
    plt.rcParams["svg.hashsalt"] = "jmgt"
    for name in list(run.outputs):
        if name not in _PLOTS:
            continue
        x, ys, logy = _PLOTS[name]
        _, header, rows = jio.read_csv(run.out / name)
        data = np.array([[float(v) if v else np.nan for v in r] for r in rows])
        fig, ax = plt.subplots(figsize=(6, 4))
        for y in ys:
            vals = data[:, header.index(y)]
            ax.plot(data[:, header.index(x)], np.abs(vals) if logy else vals, label=y)
        if logy:
            ax.set_yscale("log")
        if name.startswith("modes"):
            ax.set_xscale("log")
        ax.set_xlabel(x)
        ax.legend()
        out = name.replace(".csv", ".svg")
        fig.savefig(run.out / out, metadata={"Date": None})
        plt.close(fig)
        run.outputs.append(out)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    t_start = time.perf_counter()
    try:
        settings = resolve_settings(args.command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, settings, out)
        HANDLERS[args.command](run, settings)
        if args.plot:
            write_plots(run)
    except (ConfigurationError, DomainError, FileNotFoundError, ValueError, OSError) as exc:
        key = getattr(exc, "key", None)
        print(f"error: {exc}" + (f" [key: {key}]" if key else ""), file=sys.stderr)
        return EXIT_ERROR
    run.timings["total_s"] = time.perf_counter() - t_start
    manifest = jio.RunManifest(
        tool_version=__version__, command=args.command,
        config={k: list(v) if isinstance(v, tuple) else v for k, v in settings.items()},
        grid=run.grid, seed=int(settings.get("seed", 0)), status=run.status,
        outputs=run.outputs, assertions=run.assertions, timings=run.timings)
    jio.write_manifest(out / run.manifest_name, manifest)
    for a in run.assertions:
        if not a["passed"]:
            print(f"flagged: {a['name']} {a['detail']}".rstrip(), file=sys.stderr)
    return EXIT_PASS if run.status == "pass" else EXIT_FLAGGED


if __name__ == "__main__":
    sys.exit(main())
