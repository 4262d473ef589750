"""Command-line front end.

Subcommands: simulate, sweep, ensemble, coherence, resonance, validate,
convert-units. Exit codes: 0 success, 1 usage/config error, 2 numerical
failure. Output is plain text (nothing to disable for NO_COLOR); result
files and their manifest land in the --out directory.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._rk import IntegratorError
from .dynamics import SingleExcitation, integrate
from .experiments import (
    Beta0Grid,
    coherence_experiment,
    disorder_ensemble,
    sweep_beta0,
    unit_bridge,
)
from .fullmodel import adiabatic_check
from .io import (
    ConfigError,
    LoadedConfig,
    adiabatic_rows,
    coherence_rows,
    parse_config,
    resolve_config,
    resonance_rows,
    sweep_rows,
    trajectory_rows,
    write_csv,
    write_manifest,
)
from .plots import render_line_svg, save_svg
from .resonance import analyze, render_report

QUICK_REALIZATIONS = 100
DEFAULT_RMS_TOL = 0.05


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse's own exit through code 1
        raise UsageError(message)


def _parse_grid(text: str) -> Beta0Grid:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--beta0 expects MIN:MAX:STEPS, got {text!r}")
    try:
        return Beta0Grid(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise UsageError(f"bad --beta0 grid {text!r}: {exc}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="vibrochain",
                     description="Driven-chain excitation transport simulator")
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_Parser)

    def common(p, out_required: bool):
        p.add_argument("--config", required=True,
                       help="config file path or bundled name (fig1, fig2, ...)")
        p.add_argument("--out", default=None, required=out_required,
                       help="output directory for CSV/SVG/manifest")
        p.add_argument("--horizon", type=float, default=None,
                       help="integration horizon (defaults to the config's)")
        p.add_argument("--rel-tol", type=float, default=1e-8)
        p.add_argument("--abs-tol", type=float, default=1e-10)
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")
        p.add_argument("--workers", type=int, default=1,
                       help="worker threads; has no effect on the results")

    p = sub.add_parser("simulate", help="single trajectory from site 1")
    common(p, out_required=True)

    p = sub.add_parser("sweep", help="efficiency versus drive amplitude")
    common(p, out_required=True)
    p.add_argument("--beta0", default="0:3:121", help="grid as MIN:MAX:STEPS")

    p = sub.add_parser("ensemble", help="disorder-averaged efficiency curve")
    common(p, out_required=True)
    p.add_argument("--beta0", default="0:3:121", help="grid as MIN:MAX:STEPS")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--quick", action="store_true",
                   help=f"shortcut for --realizations {QUICK_REALIZATIONS}")

    p = sub.add_parser("coherence", help="donor coherence with/without the mode")
    common(p, out_required=True)

    p = sub.add_parser("resonance", help="sideband suppression analysis")
    common(p, out_required=False)
    p.add_argument("--max-order", type=int, default=6)
    p.add_argument("--zeros", type=int, default=5)

    p = sub.add_parser("validate", help="joint model versus reduced dynamics")
    common(p, out_required=False)
    p.add_argument("--rms-tol", type=float, default=DEFAULT_RMS_TOL)

    p = sub.add_parser("convert-units", help="device parameters to model units")
    common(p, out_required=False)
    return parser


def _load(args, kind: str) -> LoadedConfig:
    loaded = parse_config(resolve_config(args.config))
    if loaded.kind != kind:
        raise ConfigError(
            f"subcommand {args.subcommand!r} needs a {kind!r} config, "
            f"got {loaded.kind!r} from {loaded.path}")
    return loaded


def _flags(args, **extra) -> dict:
    flags = {
        "config": args.config,
        "horizon": getattr(args, "horizon", None),
        "rel_tol": args.rel_tol,
        "abs_tol": args.abs_tol,
        "svg": args.svg,
        "workers": args.workers,
    }
    flags.update(extra)
    return flags


def _finish(args, loaded, outputs: list[Path], t_start: float, **extra_flags) -> None:
    out = Path(args.out)
    manifest = write_manifest(
        out / f"{args.subcommand.replace('-', '_')}_manifest.json",
        args.subcommand,
        loaded.raw if loaded else None,
        _flags(args, **extra_flags),
        [p.name for p in outputs],
        time.monotonic() - t_start,
    )
    for p in outputs + [manifest]:
        print(f"wrote {p}")


def _cmd_simulate(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "chain")
    horizon = loaded.horizon if args.horizon is None else args.horizon
    traj = integrate(SingleExcitation(1), loaded.chain, horizon,
                     rtol=args.rel_tol, atol=args.abs_tol)
    header, rows = trajectory_rows(traj)
    out = Path(args.out)
    outputs = [write_csv(out / "trajectory.csv", header, rows)]
    if args.svg:
        svg = render_line_svg(
            traj.times,
            [("efficiency", traj.efficiency), ("trace", traj.trace)],
            title="conditional evolution", xlabel="t", ylabel="weight")
        outputs.append(save_svg(out / "trajectory.svg", svg))
    print(f"efficiency at t={horizon:g}: {traj.efficiency[-1]:.6f}")
    _finish(args, loaded, outputs, t0)
    return 0


def _cmd_sweep(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "chain")
    grid = _parse_grid(args.beta0)
    horizon = loaded.horizon if args.horizon is None else args.horizon
    result = sweep_beta0(loaded.chain, grid, horizon=horizon,
                         rtol=args.rel_tol, atol=args.abs_tol, workers=args.workers)
    header, rows = sweep_rows(result)
    out = Path(args.out)
    outputs = [write_csv(out / "sweep.csv", header, rows)]
    if args.svg:
        svg = render_line_svg(
            result.beta0,
            [("efficiency", result.efficiency),
             ("no-oscillator baseline", np.full_like(result.beta0, result.baseline))],
            title="transfer efficiency", xlabel="beta0", ylabel="efficiency")
        outputs.append(save_svg(out / "sweep.svg", svg))
    peak = result.beta0[int(np.argmax(result.efficiency))]
    print(f"baseline {result.baseline:.6f}; peak {result.efficiency.max():.6f} "
          f"at beta0={peak:g}")
    _finish(args, loaded, outputs, t0, beta0=args.beta0)
    return 0


def _cmd_ensemble(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "chain")
    if loaded.disorder is None:
        raise ConfigError("ensemble needs a config with a 'disorder' block")
    spec = loaded.disorder
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    if args.realizations is not None:
        spec = replace(spec, n_realizations=args.realizations)
    elif args.quick:
        spec = replace(spec, n_realizations=QUICK_REALIZATIONS)
    grid = _parse_grid(args.beta0)
    horizon = loaded.horizon if args.horizon is None else args.horizon
    result = disorder_ensemble(loaded.chain, spec, grid, horizon=horizon,
                               rtol=args.rel_tol, atol=args.abs_tol,
                               workers=args.workers)
    header, rows = sweep_rows(result)
    out = Path(args.out)
    outputs = [write_csv(out / "ensemble.csv", header, rows)]
    if args.svg:
        svg = render_line_svg(
            result.beta0,
            [("ensemble mean", result.efficiency),
             ("no-oscillator baseline", np.full_like(result.beta0, result.baseline))],
            title=f"disorder ensemble ({spec.n_realizations} realizations)",
            xlabel="beta0", ylabel="efficiency")
        outputs.append(save_svg(out / "ensemble.svg", svg))
    print(f"mean peak {result.efficiency.max():.6f}; baseline {result.baseline:.6f}")
    _finish(args, loaded, outputs, t0, beta0=args.beta0,
            seed=spec.master_seed, realizations=spec.n_realizations)
    return 0


def _cmd_coherence(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "chain")
    horizon = loaded.horizon if args.horizon is None else args.horizon
    times, with_vib, without_vib = coherence_experiment(
        loaded.chain, horizon=horizon, rtol=args.rel_tol, atol=args.abs_tol)
    header, rows = coherence_rows(times, with_vib, without_vib)
    out = Path(args.out)
    outputs = [write_csv(out / "coherence.csv", header, rows)]
    if args.svg:
        svg = render_line_svg(
            times, [("with vibration", with_vib), ("without vibration", without_vib)],
            title="donor coherence transfer", xlabel="t", ylabel="|sigma_0N|")
        outputs.append(save_svg(out / "coherence.svg", svg))
    print(f"max |sigma_0N|: with vibration {with_vib.max():.6f}, "
          f"without {without_vib.max():.6f}")
    _finish(args, loaded, outputs, t0)
    return 0


def _cmd_resonance(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "chain")
    report = analyze(loaded.chain, max_order=args.max_order, n_zeros=args.zeros)
    text = render_report(report)
    print(text)
    if args.out:
        out = Path(args.out)
        header, rows = resonance_rows(report)
        outputs = [write_csv(out / "resonance.csv", header, rows)]
        out.mkdir(parents=True, exist_ok=True)
        txt_path = out / "resonance.txt"
        txt_path.write_text(text + "\n")
        outputs.append(txt_path)
        _finish(args, loaded, outputs, t0)
    return 0


def _cmd_validate(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "full")
    horizon = loaded.horizon if args.horizon is None else args.horizon
    report = adiabatic_check(loaded.full, horizon=horizon,
                             rtol=args.rel_tol, atol=args.abs_tol)
    print(f"rms population deviation: {report.rms_population_deviation:.3e}")
    print(f"max coherence deviation:  {report.max_coherence_deviation:.3e}")
    print(f"damping {report.damping:g} vs adiabatic threshold "
          f"{report.damping_threshold:g} "
          f"({'in regime' if report.regime_ok else 'OUT OF REGIME'})")
    if args.out:
        out = Path(args.out)
        header, rows = adiabatic_rows(report)
        outputs = [write_csv(out / "adiabatic.csv", header, rows)]
        _finish(args, loaded, outputs, t0)
    ok = report.within(args.rms_tol)
    print(f"within rms tolerance {args.rms_tol:g}: {'yes' if ok else 'NO'}")
    return 0 if ok else 2


def _cmd_convert_units(args) -> int:
    t0 = time.monotonic()
    loaded = _load(args, "physical")
    result = unit_bridge(loaded.physical)
    print(f"zero-point length q0 = {result.q0_m:.4g} m")
    print(f"coupling rate        = {result.coupling_rate:.4g} s^-1 "
          f"(model units: g = {result.g_model:.4g})")
    print(f"damping rate         = {result.gamma_si:.4g} s^-1 "
          f"(model units: gamma = {result.gamma_model:.4g})")
    print(f"adiabaticity (coupling/damping) = {result.adiabaticity:.3g} "
          f"-> {'weak-coupling regime' if result.weak_coupling else 'beyond weak coupling'}")
    if args.out:
        out = Path(args.out)
        header = ["q0_m", "coupling_rate_si", "g_model", "gamma_si", "gamma_model",
                  "nu_si", "adiabaticity", "weak_coupling"]
        row = (result.q0_m, result.coupling_rate, result.g_model, result.gamma_si,
               result.gamma_model, result.nu, result.adiabaticity, result.weak_coupling)
        outputs = [write_csv(out / "units.csv", header, [row])]
        _finish(args, loaded, outputs, t0)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "ensemble": _cmd_ensemble,
    "coherence": _cmd_coherence,
    "resonance": _cmd_resonance,
    "validate": _cmd_validate,
    "convert-units": _cmd_convert_units,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.subcommand](args)
    except IntegratorError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
