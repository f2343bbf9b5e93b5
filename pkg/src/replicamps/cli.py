"""Command line entry point: run, plot, validate, oracle.

Exit codes: 0 success, 1 run/oracle failure (details in the manifest or
oracle report), 2 invalid input (config or records schema). The output
directory can be overridden with --out or REPLICAMPS_OUTDIR, and worker
count with --workers or REPLICAMPS_WORKERS.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, SimulationConfig, load_config
from .runner import SchemaError, oracle_check, run
from .tensors import ShapeError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["main"]

PLOT_SPEC_KEYS = ("observables", "out_dir", "window")


def _load(path: str, out_override: str | None) -> SimulationConfig:
    cfg = load_config(path)
    out = out_override or os.environ.get("REPLICAMPS_OUTDIR")
    if out:
        cfg = dataclasses.replace(
            cfg, output=dataclasses.replace(cfg.output, directory=Path(out))
        )
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args.config, args.out)
    status = run(cfg, workers=args.workers)
    manifest = cfg.output.directory / "manifest.json"
    print(f"{'done' if status == 0 else 'FAILED'}: {manifest}")
    return status


def _cmd_validate(args) -> int:
    cfg = _load(args.config, None)
    snapshots = cfg.schedule.n_steps // cfg.schedule.measure_every + 1
    print(
        f"ok: L={cfg.model.length} Jz={cfg.model.anisotropy:g} h={cfg.disorder:g} "
        f"x{cfg.realizations} realization(s), {cfg.schedule.n_steps} steps "
        f"({snapshots} snapshots), chi={cfg.truncation.max_rank}, "
        f"{len(cfg.pe_plan)} PE + {len(cfg.sre_plan)} SRE entries -> {cfg.output.directory}"
    )
    return 0


def _cmd_oracle(args) -> int:
    cfg = _load(args.config, args.out)
    status = oracle_check(cfg, workers=args.workers)
    report = json.loads((cfg.output.directory / "oracle.json").read_text())
    for curve in report["curves"]:
        print(
            f"{curve['observable']} index {curve['index']:g}: "
            f"max |dev| = {curve['max_abs_deviation']:.3e} "
            f"(tol {curve['tolerance']:.1e}, {curve['n_times']} times)"
        )
    print(f"oracle: {'pass' if report['pass'] else 'FAIL'} ({report['n_comparisons']} comparisons)")
    return status


def _read_plot_spec(path: str) -> dict:
    try:
        raw = tomllib.loads(Path(path).read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for key in raw:
        if key not in PLOT_SPEC_KEYS:
            raise ConfigError(f"{path}: unknown plot spec key '{key}' (allowed: {PLOT_SPEC_KEYS})")
    window = raw.get("window")
    if window is not None:
        if len(window) != 2 or not window[0] < window[1]:
            raise ConfigError(f"{path}: window must be [t_min, t_max] with t_min < t_max")
        raw["window"] = (float(window[0]), float(window[1]))
    return raw


def _cmd_plot(args) -> int:
    from .plotting import plot_records  # keeps matplotlib out of run/validate startup

    spec = _read_plot_spec(args.spec) if args.spec else {}
    paths = plot_records(
        args.records,
        out_dir=args.out or spec.get("out_dir"),
        observables=spec.get("observables"),
        window=spec.get("window"),
    )
    for p in paths:
        print(p)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="replicamps",
        description="Domain-wall quenches on XXZ chains with replica-MPS entropy measurements.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a run description")
    p_run.add_argument("config", help="TOML run description")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument("--workers", type=int, default=None, help="processes across realizations")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="parse and validate a config, print a summary")
    p_val.add_argument("config")
    p_val.set_defaults(fn=_cmd_validate)

    p_or = sub.add_parser("oracle", help="run with forced dense cross-checks (L <= 14)")
    p_or.add_argument("config")
    p_or.add_argument("--out", help="override the output directory")
    p_or.add_argument("--workers", type=int, default=None)
    p_or.set_defaults(fn=_cmd_oracle)

    p_plot = sub.add_parser("plot", help="render SVG plots from a records.csv")
    p_plot.add_argument("records")
    p_plot.add_argument("spec", nargs="?", help="optional TOML plot spec")
    p_plot.add_argument("--out", help="directory for the SVG files")
    p_plot.set_defaults(fn=_cmd_plot)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, SchemaError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
