"""Command-line runner.

    bslab run <experiment> --config cfg.json [--out DIR] [--threads N] [--seed S] [--figures]
    bslab validate --config cfg.json [--experiment NAME]

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, config, experiments
from .errors import NumericalError, ValidationError

log = logging.getLogger("bslab")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _fmt(v):
    # repr of a float round-trips exactly and is stable across runs
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, outcome):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(outcome.header)
        for row in outcome.rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def manifest(name, cfg, args, outcome, wall, files):
    return {
        "experiment": name,
        "config_hash": config.config_hash(cfg),
        "seed": args.seed,
        "threads": args.threads,
        "wall_time_s": round(wall, 3),
        "versions": {
            "bslab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "columns": outcome.header,
        "files": files,
        "summary": _jsonable(outcome.summary),
    }


def cmd_run(args):
    cfg = config.load(args.config)
    for w in config.require(cfg, args.experiment).warnings:
        print(f"warning: {w}", file=sys.stderr)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    args.seed = seed
    out = Path(args.out or cfg.get("output", "out"))
    t0 = time.perf_counter()
    outcome = experiments.run(args.experiment, cfg, workers=args.threads, seed=seed,
                              cache_dir=args.cache_dir)
    wall = time.perf_counter() - t0

    fresh = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".bslab-", dir=out))
    done = False
    try:
        files = [f"{args.experiment}.csv"]
        write_csv(stage / files[0], outcome)
        if args.figures:
            from . import plotting
            png = f"{args.experiment}.png"
            if plotting.render(args.experiment, outcome, stage / png):
                files.append(png)
        meta = manifest(args.experiment, cfg, args, outcome, wall, files)
        (stage / f"{args.experiment}.manifest.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        for f in files + [f"{args.experiment}.manifest.json"]:
            (stage / f).replace(out / f)
        done = True
    finally:
        shutil.rmtree(stage, ignore_errors=True)
        if fresh and not done:
            shutil.rmtree(out, ignore_errors=True)
    for f in files:
        print(out / f)
    return EXIT_OK


def cmd_validate(args):
    cfg = config.load(args.config)
    rep = config.validate(cfg, [args.experiment] if args.experiment else None)
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.ok else EXIT_INPUT


def build_parser():
    ap = argparse.ArgumentParser(prog="bslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", choices=config.EXPERIMENTS)
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--out", help="output directory (default: config 'output' or ./out)")
    run.add_argument("--threads", type=int, default=1, help="worker threads for scans")
    run.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
    run.add_argument("--figures", action="store_true", help="also render a PNG (needs matplotlib)")
    run.add_argument("--cache-dir", default=None, help="directory for cached basis sets")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config without computing")
    val.add_argument("--config", required=True)
    val.add_argument("--experiment", choices=config.EXPERIMENTS, default=None)
    val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
