"""Command line driver: ``spikelab <kind> [--config f.json] [--set k=v ...] [--threads N] [--out dir]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .artifacts import write_all
from .errors import BudgetExceeded, ConfigError
from .experiments import KINDS
from .parallel import resolve_threads

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2
DEFAULT_SEED = 20240601
TOP_KEYS = {"kind", "seed", "threads", "out", "params"}
SEED_MAX = 2 ** 64 - 1


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(kind: str, path: str | None, sets: list[str], seed: int | None) -> dict:
    """Merge the JSON file, ``--set`` overrides and ``--seed`` into a checked config."""
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON in {path}: {e}") from None
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(doc) - TOP_KEYS)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        if doc.get("kind", kind) != kind:
            raise ConfigError(f"config kind {doc['kind']!r} does not match {kind!r}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be a JSON object")
    params = dict(params)
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        params[key] = _parse_value(value)
    resolved = {"kind": kind, "params": KINDS[kind].resolve(params)}
    s = seed if seed is not None else doc.get("seed", DEFAULT_SEED)
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s <= SEED_MAX:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    resolved["seed"] = s
    for key in ("threads", "out"):
        if key in doc:
            resolved[key] = doc[key]
    return resolved


def run(kind: str, params: dict, seed: int = DEFAULT_SEED, threads: int | None = None,
        out: str | Path = ".") -> int:
    """Run one experiment and write its artifacts; returns the exit code."""
    try:
        p = KINDS[kind].resolve(params)
        files = KINDS[kind].run(p, seed, resolve_threads(threads))
    except BudgetExceeded as e:
        print(f"spikelab: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ValueError) as e:
        print(f"spikelab: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for path in write_all(Path(out), files):
            print(path)
    except OSError as e:
        print(f"spikelab: cannot write artifacts: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spikelab", description="Reproducible spike and bad-grid experiments.")
    ap.add_argument("kind", choices=sorted(KINDS))
    ap.add_argument("--config", help="JSON file with kind, seed, threads, out and params")
    ap.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                    help="override one parameter; VALUE is parsed as JSON when possible")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int, help="worker threads (default: $SPIKELAB_THREADS or 1)")
    ap.add_argument("--out", help="output directory (default: current directory)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.kind, args.config, args.sets, args.seed)
    except ConfigError as e:
        print(f"spikelab: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    threads = args.threads if args.threads is not None else cfg.get("threads")
    if threads is not None and (isinstance(threads, bool) or not isinstance(threads, int) or threads < 1):
        print("spikelab: config error: threads must be a positive integer", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.get("out") or "."
    return run(args.kind, cfg["params"], cfg["seed"], threads, out)


if __name__ == "__main__":
    sys.exit(main())
