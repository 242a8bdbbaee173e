"""Command line runner: ``cqed <subcommand> --config cfg.json [--out DIR] [--seed N] [--threads N]``.

Subcommands spectrum, evolve, readout, gate, code and phasespace run one
scenario from the catalog (``cqed list``). Outputs are CSV tables, PNG plots
of them, a JSON summary and a manifest listing every file written. Failures
print a one-line JSON error on stderr, write ``error.json`` into the output
directory when possible and exit nonzero (2 for configuration errors, 3 for
physics-module errors, 1 otherwise).

Numerical libraries are imported after the thread count is fixed, so this
module only imports the standard library at top level.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
import traceback
import warnings
from pathlib import Path

COMMANDS = ("spectrum", "evolve", "readout", "gate", "code", "phasespace")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
EXIT_CONFIG, EXIT_PHYSICS, EXIT_OTHER = 2, 3, 1


def _jsonable(o):
    import numpy as np
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating, float)):
        x = float(o)
        return x if math.isfinite(x) else str(x)
    if isinstance(o, complex) or isinstance(o, np.complexfloating):
        return {"re": float(o.real), "im": float(o.imag)}
    return o


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    try:
        iv = int(v)
        if type(v).__name__.startswith("int"):
            return str(iv)
    except (TypeError, ValueError):
        pass
    return repr(float(v))


def write_csv(path: Path, columns, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def config_hash(cfg_dict: dict) -> str:
    blob = json.dumps(_jsonable(cfg_dict), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _set_threads(n):
    if n is None:
        n = os.environ.get("CQED_THREADS")
    if n is None:
        return None
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be positive")
    for v in THREAD_VARS:
        os.environ[v] = str(n)
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cqed", description="Circuit QED scenario runner")
    sub = ap.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        p = sub.add_parser(c, help=f"run a {c} scenario")
        p.add_argument("--config", required=True, help="JSON scenario config (Hz and seconds)")
        p.add_argument("--out", default="cqed_out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (unsigned 64-bit), overrides config")
        p.add_argument("--threads", type=int, default=None, help="BLAS threads (env CQED_THREADS)")
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
    p = sub.add_parser("list", help="list built-in scenarios")
    p.add_argument("--command", dest="only", choices=COMMANDS, default=None, help="only scenarios of this subcommand")
    p.add_argument("--show", default=None, metavar="NAME", help="print the default config of one scenario")
    p.add_argument("--json", action="store_true", help="machine-readable catalog")
    return ap


def _module_of(exc: BaseException) -> str:
    mod = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        stem = Path(frame.filename).stem
        if "cqed" in Path(frame.filename).parts:
            mod = stem
    return mod


def _fail(code: int, exc: BaseException, out: Path | None, command: str | None) -> int:
    err = {"status": "error", "command": command, "error_type": type(exc).__name__, "module": _module_of(exc),
           "message": str(exc)}
    sys.stderr.write(json.dumps(err) + "\n")
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", err)
        except OSError:
            pass
    return code


def cmd_list(args) -> int:
    from . import presets
    if args.show:
        if args.show not in presets.SCENARIOS:
            return _fail(EXIT_CONFIG, presets.ConfigError(f"unknown scenario {args.show!r}"), None, "list")
        print(json.dumps(_jsonable(presets.SCENARIOS[args.show].default_config()), indent=2, sort_keys=True))
        return 0
    items = presets.list_scenarios(args.only)
    if args.json:
        print(json.dumps(_jsonable([{"name": s.name, "command": s.command, "description": s.description,
                                     "defaults": s.default_config()} for s in items]), indent=2))
    else:
        for s in items:
            print(f"{s.name:16s} {s.command:11s} {s.description}")
    return 0


def run(command: str, config_path: str, out: str = "cqed_out", seed: int | None = None, plot: bool = True) -> dict:
    """Run one scenario and return its manifest. Raises on failure."""
    from . import __version__, presets
    from .errors import ConfigError

    try:
        raw = json.loads(Path(config_path).read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {config_path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    cfg = presets.resolve_config(raw, command, seed)
    scenario = presets.SCENARIOS[cfg.scenario]
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = scenario.runner(cfg)
    wall = time.perf_counter() - t0

    files = []
    for table in result.tables:
        path = outdir / f"{cfg.scenario}_{table.name}.csv"
        write_csv(path, table.columns, table.rows)
        files.append(path.name)
    if plot:
        from .plotting import render_table
        for table in result.tables:
            if table.plot is not None and table.rows:
                path = outdir / f"{cfg.scenario}_{table.name}.png"
                render_table(table, path, f"{cfg.scenario}: {table.name}")
                files.append(path.name)
    for name, doc in result.documents.items():
        path = outdir / f"{cfg.scenario}_{name}.json"
        write_json(path, doc)
        files.append(path.name)
    path = outdir / f"{cfg.scenario}_summary.json"
    write_json(path, result.summary)
    files.append(path.name)

    seen, warns = set(), []
    for w in caught:
        key = (w.category.__name__, str(w.message))
        if key not in seen:
            seen.add(key)
            warns.append({"category": key[0], "message": key[1], "module": Path(w.filename).stem})
    manifest = {"scenario": cfg.scenario, "command": command, "config": cfg.as_dict(),
                "config_hash": config_hash(cfg.as_dict()), "version": __version__, "seed": cfg.seed,
                "wall_time_s": wall, "warnings": warns, "files": files}
    write_json(outdir / f"{cfg.scenario}_manifest.json", manifest)
    return manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list(args)
    out = Path(args.out)
    try:
        _set_threads(args.threads)
    except ValueError as e:
        from .errors import ConfigError
        return _fail(EXIT_CONFIG, ConfigError(str(e)), out, args.command)
    from .errors import ConfigError, CQEDError
    try:
        manifest = run(args.command, args.config, args.out, args.seed, not args.no_plot)
    except ConfigError as e:
        return _fail(EXIT_CONFIG, e, out, args.command)
    except CQEDError as e:
        return _fail(EXIT_PHYSICS, e, out, args.command)
    except Exception as e:  # noqa: BLE001 - reported as machine-readable error
        return _fail(EXIT_OTHER, e, out, args.command)
    print(json.dumps({"status": "ok", "scenario": manifest["scenario"], "files": manifest["files"],
                      "wall_time_s": round(manifest["wall_time_s"], 3), "warnings": len(manifest["warnings"])}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
