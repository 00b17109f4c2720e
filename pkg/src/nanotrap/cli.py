"""Command-line front end.

    nanotrap report   [--config C] [--format json|csv] [--out DIR]
    nanotrap cool     [--method gaussian|fock|closed_form] [--sweep-gamma lo:hi:n]
    nanotrap entangle [--psi 1] [--chi 0] [--noise-mhz R]
    nanotrap secular  [--drive-scale s | --q-target q]
    nanotrap validate

The primary output goes to stdout in the requested format. With ``--out DIR``
the JSON summary, any CSV table and PNG figures are also written there.
Exit codes: 0 ok, 2 config or usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .coupling import EffectiveModel, GeometryError, build_effective_model, thermal_occupation
from .eq4 import build_eq4_model
from .gaussian import gaussian_evolve, thermal_covariance
from .lindblad import SolverError, evolve
from .params import ConfigError, RunOptions, bundled_config, load_config, validate
from .protocols.cooling import cooling_closed_form, cooling_simulate, optimize_cooling
from .protocols.entangle import ProtocolNoise, parse_state_spec, run_entangle_protocol
from .protocols.secular import classical_secular_check, drive_scale_for_q
from .quantum import SpaceLayout, Thermal, make_state, product_state
from .report import SCHEMA, device_report, dumps, quantity, rows_to_csv, to_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


# ---------------------------------------------------------------- parsing


def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="JSON config (default: bundled cnt_1ghz.json)")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))
    p.add_argument("--jobs", type=int, default=d(None), help="worker processes for sweeps")
    p.add_argument("--out", default=d(None), help="directory for JSON, CSV and figure files")
    p.add_argument("--seed", type=int, default=d(None))
    p.add_argument("--no-figures", action="store_true", default=d(False), help="skip PNG output under --out")


def _grid(text: str):
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi:n") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nanotrap", description="Ion trapped between nanomechanical electrodes.")
    parser.add_argument("--version", action="version", version=f"nanotrap {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    add("report", "derived frequencies, couplings and noise rates")
    add("validate", "check a config file")

    p = add("cool", "sympathetic cooling of the resonator")
    p.add_argument("--method", choices=("gaussian", "fock", "closed_form"))
    p.add_argument("--sweep-gamma", type=_grid, metavar="LO:HI:N", help="gamma_a grid in units of lambda (log spaced)")
    p.add_argument("--t-final", type=float, help="trajectory length in seconds")
    p.add_argument("--n-times", type=int)
    p.add_argument("--cutoffs", type=int, nargs=2, metavar=("ION", "RES"))

    p = add("entangle", "resonator-resonator entanglement protocol")
    p.add_argument("--psi")
    p.add_argument("--chi")
    p.add_argument("--noise-mhz", type=float, help="total energy relaxation rate, 2 pi x MHz, split over both resonators")
    p.add_argument("--cutoff", type=int, default=6)
    p.add_argument("--duration-ns", type=float, help="total swap time; overrides the config coupling")

    p = add("secular", "classical Mathieu check of the secular frequency")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--drive-scale", type=float)
    g.add_argument("--q-target", type=float)
    p.add_argument("--periods", type=int)
    return parser


def _options(args, run: RunOptions) -> RunOptions:
    over = {}
    for attr, key in (
        ("method", "method"),
        ("sweep_gamma", "sweep_gamma"),
        ("t_final", "t_final"),
        ("n_times", "n_times"),
        ("psi", "psi"),
        ("chi", "chi"),
        ("noise_mhz", "noise_mhz"),
        ("drive_scale", "drive_scale"),
        ("periods", "periods"),
        ("seed", "seed"),
        ("jobs", "jobs"),
    ):
        v = getattr(args, attr, None)
        if v is not None:
            over[key] = v
    if getattr(args, "cutoffs", None):
        over["ion_cutoff"], over["resonator_cutoff"] = args.cutoffs
    if "t_final" in over and not over["t_final"] > 0:
        raise UsageError("run duration must be positive")
    try:
        return replace(run, **over)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- output


class Output:
    def __init__(self, args, stem: str):
        self.fmt = args.format
        self.dir = Path(args.out) if args.out else None
        self.figures = self.dir is not None and not args.no_figures
        self.stem = stem
        self.written: list[Path] = []

    def path(self, suffix: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / f"{self.stem}{suffix}"
        self.written.append(p)
        return p

    def emit(self, summary: dict, table: tuple | None = None, csv_summary: dict | None = None):
        """Print the primary output and mirror everything into --out."""
        text_json = dumps(summary)
        text_table = rows_to_csv(*table) if table else None
        if self.fmt == "json":
            sys.stdout.write(text_json)
        else:
            sys.stdout.write(text_table if text_table is not None else to_csv(csv_summary or summary))
        if self.dir is not None:
            self.path(".json").write_text(text_json)
            if text_table is not None:
                self.path(".csv").write_text(text_table)

    def figure(self, fn, *a, suffix=".png"):
        if self.figures:
            fn(*a, self.path(suffix))


def _header(cmd: str, run: RunOptions, config) -> dict:
    return {"schema": SCHEMA, "command": cmd, "config": str(config), "seed": quantity(run.seed, "1")}


# ---------------------------------------------------------------- commands


def cmd_report(args, device, ion, run, config):
    rep = device_report(device, ion)
    rep = {**_header("report", run, config), **{k: v for k, v in rep.items() if k != "schema"}}
    out = Output(args, "report")
    out.emit(rep)
    from .plotting import plot_modes

    out.figure(lambda p: plot_modes(device, p))
    return EXIT_OK


def cmd_validate(args, device, ion, run, config):
    rep = validate(device, ion)
    summary = {
        **_header("validate", run, config),
        "ok": rep.ok,
        "errors": [str(e) for e in rep.errors],
        "warnings": [str(w) for w in rep.warnings],
    }
    Output(args, "validate").emit(summary)
    return EXIT_OK if rep.ok else EXIT_USAGE


def _sweep_point(job):
    eff, method, gamma = job
    num = cooling_simulate(eff, method, gamma).steady_bdagb
    ref = cooling_closed_form(eff, gamma).steady_bdagb
    return num, ref


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _cool_sweep(args, eff: EffectiveModel, run: RunOptions, config):
    lo, hi, n = run.sweep_gamma
    ratios = np.logspace(math.log10(lo), math.log10(hi), n)
    jobs = [(eff, run.method, float(r * eff.lambda_rate)) for r in ratios]
    res = _map(_sweep_point, jobs, run.jobs)
    num = np.array([r[0] for r in res])
    ref = np.array([r[1] for r in res])
    k = int(np.argmin(num))
    rows = [(float(r), float(r * eff.lambda_rate), float(v), float(c), i == k) for i, (r, v, c) in enumerate(zip(ratios, num, ref))]
    table = (["gamma_over_lambda", "gamma_a_rad_s", "bdagb", "closed_form", "is_min"], rows)
    summary = {
        **_header("cool", run, config),
        "method": run.method,
        "lambda": quantity(eff.lambda_rate, "rad/s"),
        "grid_min": {
            "gamma_over_lambda": quantity(float(ratios[k]), "1"),
            "gamma_a": quantity(float(ratios[k] * eff.lambda_rate), "rad/s"),
            "bdagb": quantity(float(num[k]), "1"),
        },
        "points": [
            {"gamma_over_lambda": quantity(r[0], "1"), "bdagb": quantity(r[2], "1"), "closed_form": quantity(r[3], "1")}
            for r in rows
        ],
    }
    try:
        g_star, v_star = optimize_cooling(eff, (lo * eff.lambda_rate, hi * eff.lambda_rate))
        summary["optimum"] = {
            "gamma_over_lambda": quantity(g_star / eff.lambda_rate, "1"),
            "bdagb": quantity(v_star, "1"),
        }
    except ValueError as exc:
        summary["optimum"] = {"note": str(exc)}
    out = Output(args, "cool_sweep")
    out.emit(summary, table)
    from .plotting import plot_sweep

    out.figure(lambda p: plot_sweep(ratios, num, ref, ratios[k], p))
    return EXIT_OK


def _cool_trajectory(eff: EffectiveModel, run: RunOptions, device):
    g = build_eq4_model(eff, "gaussian")
    rates = -np.linalg.eigvals(g.drift).real
    if not np.all(rates > 0):
        raise NumericalFailure("cooling dynamics are unstable")
    t_final = run.t_final if run.t_final is not None else 10.0 / rates.min()
    times = np.linspace(0.0, t_final, run.n_times)
    n_ion0 = thermal_occupation(device.temperature, eff.omega_nu)
    if run.method == "fock":
        cut = (run.ion_cutoff, run.resonator_cutoff)
        model = build_eq4_model(eff, "fock", cutoffs=cut)
        layout = SpaceLayout(cut)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rho0 = product_state([make_state((cut[0],), Thermal(n_ion0)), make_state((cut[1],), Thermal(eff.n_B))], layout)
        traj = evolve(model, rho0, t_final, n_times=run.n_times)
        a, b = (d.op for d in (model.dissipators[0], model.dissipators[-1]))
        return traj.times, traj.expect(a.dag() @ a).real, traj.expect(b.dag() @ b).real
    traj = gaussian_evolve(g, thermal_covariance([n_ion0, eff.n_B]), times)
    occ = traj.occupations()
    return traj.times, occ[:, 0], occ[:, 1]


def cmd_cool(args, device, ion, run, config):
    eff = build_effective_model(device, ion)
    if run.sweep_gamma is not None:
        return _cool_sweep(args, eff, run, config)
    res = cooling_simulate(eff, run.method, cutoffs=(run.ion_cutoff, run.resonator_cutoff))
    summary = {
        **_header("cool", run, config),
        "method": run.method,
        "steady_bdagb": quantity(res.steady_bdagb, "1"),
        "closed_form_bdagb": quantity(res.closed_form_bdagb, "1"),
        "relative_gap": quantity(res.relative_gap, "1"),
        "min_formula_bdagb": quantity(res.min_formula_bdagb, "1"),
        "gamma_eff": quantity(res.gamma_eff, "rad/s"),
        "n_B": quantity(eff.n_B, "1"),
        "lambda": quantity(eff.lambda_rate, "rad/s"),
    }
    table = None
    if run.method != "closed_form":
        t, na, nb = _cool_trajectory(eff, run, device)
        table = (["t_s", "n_ion", "n_res"], [(float(a), float(b), float(c)) for a, b, c in zip(t, na, nb)])
        summary["t_final"] = quantity(float(t[-1]), "s")
    out = Output(args, "cool")
    out.emit(summary, table, csv_summary=summary)
    if table is not None:
        from .plotting import plot_cooling

        out.figure(lambda p: plot_cooling(t, na, nb, res.steady_bdagb, p))
    return EXIT_OK


def _pairs(m: np.ndarray) -> list:
    flat = np.asarray(m).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def cmd_entangle(args, device, ion, run, config):
    cutoff = args.cutoff
    if cutoff < 2:
        raise UsageError("cutoff must be >= 2")
    try:
        psi = parse_state_spec(run.psi, cutoff)
        chi = parse_state_spec(run.chi, cutoff)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.duration_ns is not None:
        if not args.duration_ns > 0:
            raise UsageError("run duration must be positive")
        lam = math.pi / (args.duration_ns * 1e-9)
    else:
        lam = build_effective_model(device, ion).lambda_rate
    if run.noise_mhz < 0:
        raise UsageError("noise rate must be non-negative")
    noise = ProtocolNoise.total_rate(2 * math.pi * run.noise_mhz * 1e6) if run.noise_mhz else None
    res = run_entangle_protocol(lam, lam, psi, chi, noise, cutoff=cutoff)

    outcomes = []
    for o in res.outcomes:
        item = {
            "label": o.label,
            "probability": quantity(o.probability, "1"),
            "fidelity": quantity(o.fidelity, "1"),
        }
        if o.state is not None:
            item["dims"] = quantity([cutoff, cutoff], "1")
            item["density_matrix"] = quantity(_pairs(o.state.matrix), "1")
        outcomes.append(item)
    summary = {
        **_header("entangle", run, config),
        "psi": run.psi,
        "chi": run.chi,
        "lambda": quantity(lam, "rad/s"),
        "noise_rate": quantity(2 * math.pi * run.noise_mhz * 1e6, "rad/s"),
        "total_time": quantity(res.total_time, "s"),
        "outcomes": outcomes,
    }
    brief = {k: v for k, v in summary.items() if k != "outcomes"}
    brief["outcomes"] = [{k: v for k, v in o.items() if k not in ("dims", "density_matrix")} for o in outcomes]
    out = Output(args, "entangle")
    out.emit(summary, csv_summary=brief)
    from .plotting import plot_entangle

    out.figure(lambda p: plot_entangle(res.outcomes, p))
    return EXIT_OK


def cmd_secular(args, device, ion, run, config):
    scale = run.drive_scale
    if args.q_target is not None:
        if not args.q_target >= 0:
            raise UsageError("q target must be non-negative")
        scale = drive_scale_for_q(device, ion, args.q_target)
    if scale < 0:
        raise UsageError("drive scale must be non-negative")
    try:
        res = classical_secular_check(device, ion, scale, periods=run.periods)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if res.stability_flag == "none":
        raise NumericalFailure("no secular motion (drive amplitude is zero)")
    if res.omega_measured is None:
        raise NumericalFailure(f"no secular peak found (stability: {res.stability_flag})")
    summary = {
        **_header("secular", run, config),
        "drive_scale": quantity(scale, "1"),
        "q_M": quantity(res.q_M, "1"),
        "predicted": quantity(res.omega_predicted, "rad/s"),
        "measured": quantity(res.omega_measured, "rad/s"),
        "rel_error": quantity(res.rel_error, "1"),
        "stability_flag": res.stability_flag,
        "floquet_stable": res.floquet_stable,
        "diverged": res.diverged,
    }
    n_keep = min(len(res.times), 20 * 64)
    table = (["t_s", "x_rel"], [(float(a), float(b)) for a, b in zip(res.times[:n_keep], res.x[:n_keep])])
    out = Output(args, "secular")
    out.emit(summary, table, csv_summary=summary)
    from .plotting import plot_secular

    out.figure(lambda p: plot_secular(res, p))
    return EXIT_OK


COMMANDS = {
    "report": cmd_report,
    "validate": cmd_validate,
    "cool": cmd_cool,
    "entangle": cmd_entangle,
    "secular": cmd_secular,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = Path(args.config) if args.config else bundled_config()
    try:
        device, ion, run = load_config(config, check=args.command != "validate")
    except OSError as exc:
        print(f"error: cannot read config {config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = _options(args, run)
        return COMMANDS[args.command](args, device, ion, run, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, SolverError, ArithmeticError, GeometryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
