"""Experiment command line: `hamlin <command> [--config FILE] [flags]`.

Exit status is 0 when every check passes, 2 when a check fails and 1 on a
usage error.  Parameters resolve as defaults, then the JSON config file, then
flags.
"""

import argparse
import csv
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import HamlinError
from .experiments import COMMANDS

CONFIG_KEYS = {"command", "seed", "params", "out_dir"}
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    out_dir: str = "out"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        schema = COMMANDS[self.command][1]
        unknown = set(self.params) - set(schema)
        if unknown:
            raise UsageError(f"unknown parameter(s) for {self.command}: {', '.join(sorted(unknown))}")
        self.params = {k: _coerce(k, schema[k][0], v) for k, v in self.params.items()}
        self.seed = int(self.seed)

    def resolved_params(self):
        schema = COMMANDS[self.command][1]
        out = {k: d for k, (_, d) in schema.items()}
        out.update(self.params)
        return out


def _parse_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _coerce(name, typ, value):
    try:
        if typ is bool:
            return _parse_bool(value)
        if typ is str and isinstance(value, (list, tuple)):
            return ",".join(str(x) for x in value)
        if typ is int and isinstance(value, float) and not value.is_integer():
            raise ValueError("expected an integer")
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"parameter {name}: {exc}") from None


def load_config_file(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return data


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="hamlin", description="Block-encoding arithmetic experiments.")
    parser.add_argument("--version", action="version", version=f"hamlin {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (_, schema) in COMMANDS.items():
        p = sub.add_parser(name, help=f"run {name}")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--out", dest="out_dir", default=argparse.SUPPRESS, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker threads (default: logical cores)")
        for key, (typ, default) in schema.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=f"param_{key}", type=str, default=argparse.SUPPRESS,
                           help=f"{typ.__name__}, default {default}")
    return parser


def config_from_args(ns, environ=os.environ):
    data = load_config_file(ns.config) if getattr(ns, "config", None) else {}
    command = ns.command
    if data.get("command", command) != command:
        raise UsageError(f"config is for {data['command']!r}, not {command!r}")
    params = dict(data.get("params", {}))
    if not isinstance(params, dict):
        raise UsageError("params must be a JSON object")
    for k, v in vars(ns).items():
        if k.startswith("param_"):
            params[k[len("param_"):]] = v
    if hasattr(ns, "seed"):
        seed = ns.seed
    elif "seed" in data:
        seed = data["seed"]
    elif "HAMLIN_SEED" in environ:
        try:
            seed = int(environ["HAMLIN_SEED"])
        except ValueError:
            raise UsageError("HAMLIN_SEED must be an integer") from None
    else:
        seed = 0
    out_dir = getattr(ns, "out_dir", data.get("out_dir", "out"))
    return ExperimentConfig(command=command, seed=seed, params=params, out_dir=out_dir)


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def run(config, jobs=None):
    """Run one experiment; returns (exit status, manifest)."""
    fn, _ = COMMANDS[config.command]
    params = config.resolved_params()
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from None
    workers = jobs or os.cpu_count() or 1
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so output is independent of scheduling
        outcome = fn(params, config.seed, lambda f, xs: list(pool.map(f, xs)))
    wall = time.perf_counter() - start
    artifacts = []
    for name, (header, rows) in outcome.tables.items():
        write_csv(out / f"{name}.csv", header, rows)
        artifacts.append(f"{name}.csv")
    for name, doc in outcome.documents.items():
        write_json(out / f"{name}.json", doc)
        artifacts.append(f"{name}.json")
    passed = all(outcome.checks.values())
    manifest = {
        "config": {**asdict(config), "params": params},
        "seed": config.seed,
        "versions": {
            "hamlin": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": wall,
        "checks": {k: bool(v) for k, v in outcome.checks.items()},
        "status": "pass" if passed else "fail",
        "artifacts": sorted(artifacts),
    }
    write_json(out / "manifest.json", manifest)
    return (EXIT_OK if passed else EXIT_FAIL), manifest


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        config = config_from_args(ns)
        status, manifest = run(config, ns.jobs)
    except UsageError as exc:
        print(f"hamlin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HamlinError, ValueError) as exc:
        print(f"hamlin: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for name, ok in manifest["checks"].items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"{manifest['status']}: {config.command} -> {config.out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
