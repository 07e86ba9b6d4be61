"""Command-line front end: ``gcdsim run|validate|list-experiments``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import (DESCRIPTIONS, ConfigError, decision_hash, DECISIONS, run_config,
                          validate_config)
from .gkp import ConvergenceError
from .noise import SubstepLimitError
from .oscillator import CutoffError
from .records import GridRecord

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
OUT_ENV = "GCDSIM_OUT"


def _read_config(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return validate_config(text)


def _payload(record) -> dict:
    if isinstance(record, GridRecord):
        return {"grid": {"q": record.q.tolist(), "p": record.p.tolist(),
                         "values": record.values.tolist()}}
    return {"columns": record.columns, "rows": record.rows}


def sidecar(cfg, record, extras, wall_clock: float, seed) -> dict:
    return {
        "gcdsim_version": __version__,
        "config": cfg.echo(),
        "decisions": DECISIONS,
        "decision_hash": decision_hash(),
        "seed": seed,
        "wall_clock_s": wall_clock,
        **_payload(record),
        "extra_files": sorted(f"{name}.csv" for name in extras),
    }


def execute(cfg, out_dir: Path, threads: int = 1, seed=None) -> list[Path]:
    """Run ``cfg`` and write its files; on failure nothing it wrote is left behind."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        t0 = time.perf_counter()
        record, extras = run_config(cfg, threads=threads, seed=seed)
        wall = time.perf_counter() - t0
        stem = cfg.experiment
        written.append(record.write_csv(out_dir / f"{stem}.csv"))
        for name, rec in sorted(extras.items()):
            written.append(rec.write_csv(out_dir / f"{stem}_{name}.csv"))
        meta = sidecar(cfg, record, extras, wall, seed if seed is not None else cfg.parameters.get("seed"))
        path = out_dir / f"{stem}.json"
        path.write_text(json.dumps(meta, indent=2, default=str), encoding="utf-8")
        written.append(path)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcdsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", default=None,
                     help=f"output directory (default: ${OUT_ENV} or ./gcdsim-out)")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--seed", type=int, default=None)
    val = sub.add_parser("validate", help="check a config and print the resolved parameters")
    val.add_argument("config")
    sub.add_parser("list-experiments", help="list experiment names")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-experiments":
        for name, text in DESCRIPTIONS.items():
            print(f"{name:18s} {text}")
        return EXIT_OK
    try:
        cfg = _read_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps(cfg.echo(), indent=2))
        return EXIT_OK
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or os.environ.get(OUT_ENV) or "gcdsim-out")
    try:
        files = execute(cfg, out, threads=args.threads, seed=args.seed)
    except (CutoffError, ConvergenceError, SubstepLimitError, ValueError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
