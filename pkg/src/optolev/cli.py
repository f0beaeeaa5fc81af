"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 instability (including trap
loss), 4 numerical failure (singular response or no convergence).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config, langevin, qlt, sweep, thermometry
from .derivation import AXES, hessian_check, linearize
from .errors import ConfigError, ConvergenceError, InstabilityError, SingularityError
from .spectra import FrequencyGrid

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_NUMERICAL = 0, 2, 3, 4

logger = logging.getLogger("optolev")


def _values(text: str):
    """``a,b,c`` or ``start:stop:num``."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return tuple(np.linspace(float(start), float(stop), int(num)))
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI configuration file")
    common.add_argument("--out-dir", default=".", help="directory for CSV and manifest files")
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides run.seed)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--engine", choices=("closed-form", "lam"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="optolev", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("derive", parents=[common], help="print the linearized model")

    sp = sub.add_parser("spectra", parents=[common], help="write displacement and output PSDs")
    sp.add_argument("--observables", default="x,y,z,Y_out,P_out")
    sp.add_argument("--points", type=int, default=None, help="uniform grid size (default adaptive)")
    sp.add_argument("--homodyne-angle", type=float, default=0.0, help="rad, for X_out")
    sp.add_argument("--one-d", action="store_true", help="drop hybridisation")
    sp.add_argument("--unsymmetrized", action="store_true")

    sm = sub.add_parser("simulate", parents=[common], help="stochastic simulation and its PSD")
    sm.add_argument("--trajectories", type=int, default=None)
    sm.add_argument("--duration", type=float, default=None, help="seconds per trajectory")

    sub.add_parser("occupancy", parents=[common], help="occupancies, spring and damping")

    sw = sub.add_parser("sweep", parents=[common], help="sweep one config key")
    sw.add_argument("--parameter", required=True, help="section.key, e.g. cavity.detuning_kHz")
    sw.add_argument("--values", required=True, help="a,b,c or start:stop:num")
    sw.add_argument("--task", choices=sweep.TASKS, default="occupancy")
    return p


def _load(args):
    sections = config.read_sections(args.config)
    setup = config.setup_from_sections(sections)
    options = config.run_options(sections)
    if args.engine:
        options["engine"] = args.engine
    seed = args.seed if args.seed is not None else options.get("seed", 0)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return sections, setup, options, seed, out


def _manifest(command, sections, setup, options, seed, **extra):
    return sweep.RunManifest(config=config.emit_sections(sections), seed=seed, command=command,
                             options={**options, **extra}, notes=sweep.manifest_notes(setup))


def cmd_derive(args) -> int:
    sections, setup, options, seed, out = _load(args)
    gouy = options.get("include_gouy", False)
    model = linearize(setup, gouy=gouy)
    print(config.emit_model(model), end="")
    block = {"model": {k: (list(map(str, v)) if isinstance(v, tuple) else str(v))
                       for k, v in model.__dict__.items()},
             "hessian_check": hessian_check(setup, gouy=gouy, model=model),
             "stable": model.is_stable()}
    print("# machine-readable")
    print(json.dumps(block, sort_keys=True))
    return EXIT_OK


def cmd_spectra(args) -> int:
    sections, setup, options, seed, out = _load(args)
    t0 = time.perf_counter()
    model = linearize(setup, gouy=options.get("include_gouy", False))
    obs = tuple(o.strip() for o in args.observables.split(",") if o.strip())
    n = args.points or options.get("points")
    grid = FrequencyGrid.default(model, n) if n else FrequencyGrid.for_model(model)
    spec = qlt.psd(model, grid, obs, engine=options.get("engine", "closed-form"),
                   homodyne_angle=args.homodyne_angle, one_d=args.one_d)
    manifest = _manifest("spectra", sections, setup, options, seed, observables=list(obs),
                         one_d=args.one_d, symmetrized=not args.unsymmetrized,
                         homodyne_angle=args.homodyne_angle, points=len(grid))
    path = sweep.write_csv(out / "spectra.csv", manifest, sweep.spectra_columns(obs),
                           sweep.spectra_rows(spec, obs, not args.unsymmetrized))
    manifest.timing = {"seconds": time.perf_counter() - t0}
    manifest.write(out)
    print(path)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sections, setup, options, seed, out = _load(args)
    if args.trajectories:
        options["trajectories"] = args.trajectories
    if args.duration:
        options["duration_s"] = args.duration
    t0 = time.perf_counter()
    row, est = sweep.simulate_point(setup, options, seed)
    manifest = _manifest("simulate", sections, setup, options, seed)
    path = sweep.write_csv(out / "simulated_psd.csv", manifest, sweep.spectra_columns(AXES),
                           sweep.spectra_rows(est, AXES))
    sweep.write_csv(out / "simulated_summary.csv", manifest, list(row), [row])
    manifest.timing = {"seconds": time.perf_counter() - t0}
    manifest.write(out)
    for k, v in row.items():
        print(f"{k} = {v}")
    print(path)
    return EXIT_OK


def cmd_occupancy(args) -> int:
    sections, setup, options, seed, out = _load(args)
    t0 = time.perf_counter()
    row = sweep.occupancy_point(setup, options)
    manifest = _manifest("occupancy", sections, setup, options, seed)
    sweep.write_csv(out / "occupancy.csv", manifest, list(row), [row])
    manifest.timing = {"seconds": time.perf_counter() - t0}
    manifest.write(out)
    for k, v in row.items():
        print(f"{k} = {v!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sections, setup, options, seed, out = _load(args)
    spec = sweep.SweepSpec(args.parameter, _values(args.values), args.task)
    result = sweep.run_sweep(spec, sections, out, seed=seed, threads=args.threads, engine=args.engine)
    bad = sum(r["status"] != "OK" for r in result["rows"])
    print(result["table"])
    if bad:
        logger.warning("%d of %d sweep points failed", bad, len(result["rows"]))
    return EXIT_OK


COMMANDS = {"derive": cmd_derive, "spectra": cmd_spectra, "simulate": cmd_simulate,
            "occupancy": cmd_occupancy, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (SingularityError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
