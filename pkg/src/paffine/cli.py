"""Command-line experiment runner.

Usage::

    paffine list
    paffine run CONFIG.json [CONFIG.json ...] [--out DIR] [--assert]
                [--threads N] [--seed S]

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure,
4 acceptance threshold breached (only with ``--assert``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import jsonschema

from .errors import InvalidInput, NumericalFailure
from .experiments import CSV_COLUMNS, DESCRIPTIONS, ExperimentResult, run_experiment

log = logging.getLogger("paffine")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_ASSERT = 0, 2, 3, 4

_NUM = {"type": "number"}
_POS_GRID = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 4}

BODY_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["ball", "ellipsoid", "fourier2d"]},
        "dim": {"type": "integer", "minimum": 2, "maximum": 8},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "matrix": {"type": "array", "items": {"type": "array", "items": _NUM}},
        "center": {"type": "array", "items": _NUM},
        "coeffs": {
            "type": "object",
            "required": ["a"],
            "properties": {"a": {"type": "array", "items": _NUM, "minItems": 1},
                           "b": {"type": "array", "items": _NUM}},
        },
        "id": {"type": "string"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "ellipsoid"}}}, "then": {"required": ["matrix"]}},
        {"if": {"properties": {"kind": {"const": "fourier2d"}}}, "then": {"required": ["coeffs"]}},
    ],
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": sorted(DESCRIPTIONS)},
        "body": BODY_SCHEMA,
        "body_file": {"type": "string"},
        "body_id": {"type": "string"},
        "beta": {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]},
        "gamma": _NUM,
        "t_grid": _POS_GRID,
        "alpha_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                                  "exclusiveMaximum": 1}, "minItems": 2},
        "delta_grid": _POS_GRID,
        "t_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "t_factors": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}},
        "t_factor": {"type": "number", "exclusiveMinimum": 1},
        "directions": {"type": "integer", "minimum": 4},
        "maps": {"oneOf": [
            {"type": "integer", "minimum": 1},
            {"type": "array", "items": {"type": "object", "required": ["L"],
                                        "properties": {"L": {"type": "array"},
                                                       "a": {"type": "array"}}}}]},
        "tolerance": {"type": "number", "minimum": 0},
        "recenter": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
        "exponent": {"enum": ["stated", "corrected"]},
        "constant": {"enum": ["stated", "corrected"]},
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"experiment": {"enum": ["theorem6", "prop4", "covariance"]}}},
         "then": {"required": ["beta"]}},
        {"if": {"properties": {"experiment": {"const": "lemma5"}}},
         "then": {"required": ["gamma", "beta"]}},
        {"if": {"properties": {"experiment": {"not": {"const": "lemma5"}}}},
         "then": {"anyOf": [{"required": ["body"]}, {"required": ["body_file"]}]}},
    ],
}


class ConfigError(InvalidInput):
    pass


def load_config(path: str | os.PathLike) -> dict:
    """Read, parse and validate a configuration file; body files are inlined."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from exc
    if "body_file" in cfg and "body" not in cfg:
        bpath = (path.parent / cfg.pop("body_file")).resolve()
        try:
            body = json.loads(bpath.read_text())
        except OSError as exc:
            raise ConfigError(f"{bpath}: cannot read ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{bpath}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        try:
            jsonschema.validate(body, BODY_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"{bpath}: {exc.message}") from exc
        cfg["body"] = body
    return cfg


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_outputs(result: ExperimentResult, cfg: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rows = result.rows + [result.summary_row()]
    with open(out / "samples.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
    with open(out / "plot.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["curve", "x", "y"])
        for row in result.rows:
            writer.writerow([f"{row['experiment']}:{row['beta_or_p']}",
                             _fmt(row["t_or_delta"]), _fmt(row["lhs"])])
            if row["rhs"] is not None:
                writer.writerow([f"reference:{row['beta_or_p']}", _fmt(row["t_or_delta"]),
                                 _fmt(row["rhs"])])
    report = {
        "experiment": result.experiment,
        "body_id": result.body_id,
        "n": result.n,
        "grid": [r["t_or_delta"] for r in result.rows],
        "rows": [{k: _finite(v) for k, v in r.items()} for r in result.rows],
        "limit": _finite(result.limit),
        "exponent": _finite(result.exponent),
        "residual": _finite(result.residual),
        "rhs": _finite(result.rhs),
        "rel_err": _finite(result.rel_err),
        "tolerance": result.tolerance,
        "passed": result.passed,
        "details": result.details,
        "wall_time": result.wall_time,
        "config": cfg,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, default=_json_default)


def _json_default(o):
    import numpy as np

    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def list_experiments() -> str:
    lines = []
    for name in sorted(DESCRIPTIONS):
        desc, params = DESCRIPTIONS[name]
        lines.append(f"{name:<11} {desc}\n{'':<11} parameters: {params}")
    return "\n".join(lines)


def _resolve_threads(arg: int | None) -> int:
    if arg:
        return arg
    env = os.environ.get("PAFFINE_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def cmd_run(args) -> int:
    threads = _resolve_threads(args.threads)
    configs = []
    for path in args.configs:
        try:
            configs.append((path, load_config(path)))
        except InvalidInput as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    base = Path(args.out)
    status = EXIT_OK
    for path, cfg in configs:
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = base if len(configs) == 1 else base / Path(path).stem
        try:
            result = run_experiment(cfg, threads=threads, seed=cfg.get("seed"))
        except InvalidInput as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except NumericalFailure as exc:
            print(f"numerical failure: {path}: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        write_outputs(result, cfg, out)
        log.info("%s finished in %.1f s", path, result.wall_time)
        verdict = "PASS" if result.passed else "FAIL"
        rel = "" if result.rel_err is None else f" rel_err={result.rel_err:.3e}"
        print(f"{result.experiment} [{result.body_id}] {verdict}{rel} -> {out}")
        if args.assert_ and not result.passed:
            status = EXIT_ASSERT
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paffine", description="Affine surface area experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list available experiments")
    r = sub.add_parser("run", help="run experiment configurations")
    r.add_argument("configs", nargs="+", help="experiment JSON files")
    r.add_argument("--out", default="out", help="output directory (default: ./out)")
    r.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit with status 4 when an acceptance threshold is missed")
    r.add_argument("--threads", type=int, default=None,
                   help="worker threads (falls back to PAFFINE_THREADS)")
    r.add_argument("--seed", type=int, default=None, help="override the configuration seed")
    r.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "list":
        print(list_experiments())
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
