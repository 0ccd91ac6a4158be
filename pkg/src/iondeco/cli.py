"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import csvio, svg
from .analysis import SweepConfig, compare_models, sweep_hopping, tau_grid, within_factor
from .config import ConfigError, RunConfig, load, loads
from .core import CoefficientSet, NoiseParams, Trajectory, initial_superposition
from .dynamics import (IntegrationError, SpinBosonMode, classical_noise_rhs, integrate,
                       spin_boson_rhs)
from .spectral import QuadratureError, QuadratureSpec, closed_coefficients, coeff_numeric
from .stochastic import EnsembleSpec, ensemble_average

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
PRESETS = ("fig3", "fig4", "fig5", "tau")


class NumericalFailure(Exception):
    """Raised after partial output has been written."""


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("iondeco.presets").joinpath(f"{name}.cfg").read_text()


def _load_config(args) -> RunConfig:
    if args.preset and args.config:
        raise ConfigError("give --config or --preset, not both")
    if args.preset:
        cfg = loads(preset_text(args.preset))
    elif args.config:
        cfg = load(args.config)
    else:
        raise ConfigError("a --config file (or --preset) is required")
    return _apply_flags(cfg, args)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.mode:
        changes["mode"] = SpinBosonMode(args.mode)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.seed is not None and cfg.ensemble is not None:
        changes["ensemble"] = dataclasses.replace(cfg.ensemble, master_seed=args.seed)
    if args.derive_coeffs:
        changes["sweep"] = dataclasses.replace(cfg.sweep, derive_coeffs=True)
    out = {k: getattr(args, k) for k in ("out", "svg", "figure")}
    if any(v is not None for v in out.values()):
        changes["output"] = dataclasses.replace(
            cfg.output,
            csv=out["out"] or cfg.output.csv,
            svg=out["svg"] or cfg.output.svg,
            figure=out["figure"] or cfg.output.figure,
        )
    try:
        return dataclasses.replace(cfg, **changes) if changes else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _figure(kind: str, path: str | None, *args) -> None:
    if not path:
        return
    from . import plotting
    getattr(plotting, f"{kind}_figure")(*args, path=path)


def _coefficients(cfg: RunConfig, delta0: float, numeric: bool = False) -> CoefficientSet:
    if cfg.coefficients is not None:
        return cfg.coefficients
    if cfg.environment is None:
        raise ConfigError("Spin-Boson runs need an environment or a coefficients block")
    if numeric:
        return coeff_numeric(cfg.environment, delta0, cfg.quadrature)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return closed_coefficients(cfg.environment, delta0)


def _integrate(rhs, cfg: RunConfig) -> tuple[Trajectory | None, str | None]:
    try:
        return integrate(rhs, initial_superposition(), cfg.integrator), None
    except IntegrationError as exc:
        return exc.partial, f"integration aborted at t={exc.last_time!r}: {exc}"


# --- subcommands -------------------------------------------------------------


def cmd_coeffs(cfg: RunConfig, args) -> int:
    cfg.require("environment", "system")
    env, delta0 = cfg.environment, cfg.system.delta0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        closed = closed_coefficients(env, delta0)
    lines = []
    for w in caught:
        lines.append(f"# warning: {w.message}")
    names = ("D", "f", "gamma", "re_zeta", "im_zeta")

    def values(co):
        return (co.D, co.f, co.gamma, co.zeta.real, co.zeta.imag)

    if args.numeric:
        quad = cfg.quadrature or QuadratureSpec.default(env, delta0)
        numeric = coeff_numeric(env, delta0, quad)
        lines.insert(0, "quantity,closed,numeric,rel_diff,error_estimate")
        errs = numeric.errors or {}
        err_cols = (errs.get("D"), errs.get("f"), errs.get("gamma"), errs.get("f"), errs.get("gamma"))
        for name, c, n, e in zip(names, values(closed), values(numeric), err_cols):
            rel = abs(n - c) / abs(c) if c else float("nan")
            lines.append(f"{name},{csvio.fmt(c)},{csvio.fmt(n)},{csvio.fmt(rel)},"
                         f"{csvio.fmt(e if e is not None else float('nan'))}")
    else:
        lines.insert(0, "quantity,closed")
        for name, c in zip(names, values(closed)):
            lines.append(f"{name},{csvio.fmt(c)}")
    _emit("\n".join(lines) + "\n", cfg.output.csv)
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, args) -> int:
    cfg.require("system", "integrator")
    if cfg.model == "spin-boson":
        rhs = spin_boson_rhs(cfg.system, _coefficients(cfg, cfg.system.delta0, args.numeric), cfg.mode)
    elif cfg.model == "noise":
        cfg.require("noise")
        rhs = classical_noise_rhs(cfg.system, cfg.noise)
    else:
        raise ConfigError("evolve runs a single model; set model = spin-boson or noise")
    traj, abort = _integrate(rhs, cfg)
    if traj is not None:
        table = csvio.trajectory_table(traj, [abort] if abort else [])
    else:
        table = csvio.Table(csvio.TRAJECTORY_COLUMNS, np.empty((0, 12)), [abort])
    _emit(table.render(), cfg.output.csv)
    if abort:
        raise NumericalFailure(abort)
    _figure("trajectory", cfg.output.figure, traj)
    if cfg.output.svg:
        svg.write(cfg.output.svg, svg.line_chart(
            [svg.Series("Re rho01", traj.times, traj.rho01.real),
             svg.Series("Im rho01", traj.times, traj.rho01.imag)],
            title=f"{cfg.model} model", xlabel="t (s)", ylabel="rho01"))
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig, args) -> int:
    cfg.require("system", "ensemble")
    noise = cfg.noise or NoiseParams(0.0)
    result = ensemble_average(cfg.system, noise, cfg.ensemble, workers=cfg.workers)
    _emit(csvio.ensemble_table(result).render(), cfg.output.csv)
    traj = result.mean_trajectory
    _figure("trajectory", cfg.output.figure, traj, f"ensemble mean, N={result.n_realizations}")
    if cfg.output.svg:
        svg.write(cfg.output.svg, svg.line_chart(
            [svg.Series("Re rho01", traj.times, traj.rho01.real),
             svg.Series("Im rho01", traj.times, traj.rho01.imag)],
            title=f"ensemble mean, N={result.n_realizations}", xlabel="t (s)", ylabel="rho01"))
    return EXIT_OK


def _compare(cfg: RunConfig, args):
    cfg.require("system", "noise", "integrator")
    if cfg.model != "both":
        raise ConfigError("compare needs model = both")
    co = _coefficients(cfg, cfg.system.delta0, args.numeric)
    return compare_models(cfg.system, co, cfg.noise, cfg.integrator, cfg.mode, cfg.sweep.window)


def cmd_compare(cfg: RunConfig, args) -> int:
    try:
        run = _compare(cfg, args)
    except IntegrationError as exc:
        raise NumericalFailure(f"integration aborted at t={exc.last_time!r}: {exc}") from exc
    _emit(csvio.compare_table(run).render(), cfg.output.csv)
    print(f"# rate={csvio.fmt(run.rate)} max_abs_delta_r={csvio.fmt(run.max_abs)} "
          f"time_mean_abs_delta_r={csvio.fmt(run.time_mean_abs)}", file=sys.stderr)
    if cfg.output.svg:
        t = run.spin_boson.times
        svg.write(cfg.output.svg, svg.line_chart(
            [svg.Series("Re rho01 Spin-Boson", t, run.spin_boson.rho01.real),
             svg.Series("Re rho01 noise", t, run.noise.rho01.real),
             svg.Series("Delta R", t, run.delta_r.values)],
            title=f"hopping rate {run.rate:.3g} 1/s", xlabel="t (s)", ylabel="Re rho01"))
    _figure("compare", cfg.output.figure, run)
    return EXIT_OK


def sweep_config(cfg: RunConfig) -> SweepConfig:
    cfg.require("system", "noise", "integrator")
    if cfg.sweep.derive_coeffs and cfg.environment is None:
        raise ConfigError("--derive-coeffs needs an environment block")
    if not cfg.sweep.derive_coeffs and cfg.coefficients is None and cfg.environment is None:
        raise ConfigError("sweep needs a coefficients or environment block")
    coefficients = cfg.coefficients
    if coefficients is None and not cfg.sweep.derive_coeffs:
        # an environment without --derive-coeffs: hold the set fixed at the configured delta0
        coefficients = _coefficients(cfg, cfg.system.delta0)
    return SweepConfig(cfg.system.omega0, cfg.noise, cfg.integrator, coefficients,
                       cfg.environment, cfg.sweep.derive_coeffs, cfg.mode, cfg.sweep.window)


def cmd_sweep(cfg: RunConfig, args) -> int:
    scfg = sweep_config(cfg)
    try:
        runs = sweep_hopping(cfg.sweep.rates, scfg, workers=cfg.workers)
    except IntegrationError as exc:
        raise NumericalFailure(f"integration aborted at t={exc.last_time!r}: {exc}") from exc
    _emit(csvio.sweep_table(runs).render(), cfg.output.csv)
    if cfg.output.svg:
        svg.write(cfg.output.svg, svg.line_chart(
            [svg.Series(f"rate {r.rate:.0e}", r.delta_r.times, r.delta_r.values) for r in runs],
            title="Delta R per hopping rate", xlabel="t (s)", ylabel="Delta R"))
    _figure("sweep", cfg.output.figure, runs)
    return EXIT_OK


def cmd_tau(cfg: RunConfig, args) -> int:
    cfg.require("tau")
    rows = tau_grid(cfg.tau)
    rates = cfg.tau.row_rates()
    _emit(csvio.tau_table(rows, rates).render(), cfg.output.csv)
    best = min(rows, key=lambda e: e.tau_D)
    verdict = "within" if within_factor(best.tau_D, 1e-7, 10.0) else "outside"
    print(f"# min tau_D = {csvio.fmt(best.tau_D)} s at rate {best.gamma_rate:.3g} 1/s, "
          f"frequency {best.omega:.3g} 1/s; {verdict} a factor 10 of 1e-7 s", file=sys.stderr)
    if cfg.output.svg:
        series = []
        for rate in cfg.tau.rates:
            pts = [(e.omega, e.tau_D) for r, e in zip(rates, rows) if r == rate]
            xs, ys = zip(*pts)
            series.append(svg.Series(f"rate {rate:.0e}", np.log10(xs), np.log10(ys)))
        svg.write(cfg.output.svg, svg.line_chart(series, title="decoherence time",
                                                 xlabel="log10 frequency (1/s)",
                                                 ylabel="log10 tau_D (s)"))
    _figure("tau", cfg.output.figure, rows, rates)
    return EXIT_OK


def cmd_demo_figures(_cfg, args) -> int:
    """Run the bundled presets and write CSV, SVG and PNG for each."""
    out = Path(args.out or "demo-figures")
    out.mkdir(parents=True, exist_ok=True)
    jobs = (("fig3", cmd_compare), ("fig4", cmd_compare), ("fig5", cmd_sweep), ("tau", cmd_tau))
    summary = []
    for name, fn in jobs:
        cfg = loads(preset_text(name))
        cfg = dataclasses.replace(cfg, workers=args.workers or cfg.workers, output=dataclasses.replace(
            cfg.output, csv=str(out / f"{name}.csv"), svg=str(out / f"{name}.svg"),
            figure=str(out / f"{name}.png")))
        fn(cfg, args)
        summary.append(str(out / f"{name}.csv"))
    print("\n".join(f"wrote {p}" for p in summary), file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "coeffs": cmd_coeffs,
    "evolve": cmd_evolve,
    "ensemble": cmd_ensemble,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "tau": cmd_tau,
    "demo-figures": cmd_demo_figures,
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iondeco", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--preset", help=f"bundled configuration: {', '.join(PRESETS)}")
    p.add_argument("--out", help="CSV output path (directory for demo-figures); stdout if omitted")
    p.add_argument("--svg", help="write a hand-rendered SVG chart here")
    p.add_argument("--figure", help="write a matplotlib figure here (png, pdf, ...)")
    p.add_argument("--numeric", action="store_true", help="derive coefficients by quadrature")
    p.add_argument("--derive-coeffs", action="store_true",
                   help="recompute coefficients at every hopping rate of a sweep")
    p.add_argument("--mode", choices=[m.value for m in SpinBosonMode])
    p.add_argument("--seed", type=_u64, help="ensemble master seed")
    p.add_argument("--workers", type=_positive)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = None if args.command == "demo-figures" else _load_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, NumericalFailure, IntegrationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
