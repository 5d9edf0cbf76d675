"""Command-line front end: run verification suites and write JSON/CSV reports.

Examples::

    maglab verify tensors --system kahler-t4
    maglab pinching --n 7
    maglab tomo --max-m 40 --max-n 40
    maglab run config.toml

Exit codes: 0 when every check is within tolerance, 1 when a check fails,
2 when the command line or configuration cannot be parsed.
"""
from __future__ import annotations

import argparse
import csv
import inspect
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import suites
from .circlebundle import AliasingError
from .systems import BUILTINS, system_from_config

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("maglab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# suites that take a magnetic system as first argument
SYSTEM_SUITES = {"tensors", "brackets", "jacobi", "pestov", "localized"}
DEFAULT_SYSTEMS = {"tensors": "kahler-t4", "brackets": "nonclosed-t3", "jacobi": "constant-field",
                   "pestov": "conformal-t2", "localized": "conformal-t2"}
RUN_KEYS = {"suites", "seed", "output"}


class ConfigError(ValueError):
    pass


def _suite_options(name: str) -> set[str]:
    params = inspect.signature(getattr(suites, name)).parameters
    return {k for k in params if k != "system"}


def _check_options(name: str, options: dict) -> None:
    unknown = set(options) - _suite_options(name)
    if unknown:
        raise ConfigError(f"unknown options for suite {name!r}: {sorted(unknown)}")


def run_suite(name: str, options: dict, system_cfg: Optional[dict] = None) -> suites.SuiteResult:
    if name not in suites.SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {list(suites.SUITES)}")
    _check_options(name, options)
    fn = getattr(suites, name)
    if name in SYSTEM_SUITES:
        cfg = system_cfg or {"name": DEFAULT_SYSTEMS[name]}
        try:
            system = system_from_config(cfg)
        except (KeyError, ValueError, TypeError) as err:
            raise ConfigError(str(err)) from err
        try:
            return fn(system, **options)
        except AliasingError as err:
            raise ConfigError(f"{err}; raise grid or lower degree") from err
    return fn(**options)


def write_reports(result: suites.SuiteResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{result.suite}.json").write_text(json.dumps(result.summary(), indent=2, default=str) + "\n")
    rows = result.rows or [{"name": c.name, "residual": c.residual, "tolerance": c.tolerance,
                            "passed": int(c.passed)} for c in result.checks]
    fields = list(dict.fromkeys(k for r in rows for k in r))
    with open(out_dir / f"{result.suite}.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def _report(results: list[suites.SuiteResult], out_dir: Optional[Path], show_rows: bool = False) -> int:
    for r in results:
        if out_dir is not None:
            write_reports(r, out_dir)
        print(json.dumps({k: v for k, v in r.summary().items() if k != "checks"}, default=str))
        if show_rows:
            for row in r.rows:
                print(json.dumps(row, default=str))
        for c in r.checks:
            log.info("%s %s residual=%.3e tol=%.1e", "PASS" if c.passed else "FAIL", c.name,
                     c.residual, c.tolerance)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def load_config(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    unknown = set(cfg) - {"system", "run", "suites"}
    if unknown:
        raise ConfigError(f"unknown top-level tables: {sorted(unknown)}")
    run = cfg.get("run", {})
    if set(run) - RUN_KEYS:
        raise ConfigError(f"unknown keys in [run]: {sorted(set(run) - RUN_KEYS)}")
    options = cfg.get("suites", {})
    selected = run.get("suites", list(options))
    if not selected:
        raise ConfigError("no suites selected")
    for name in set(selected) | set(options):
        if name not in suites.SUITES:
            raise ConfigError(f"unknown suite {name!r}")
        _check_options(name, options.get(name, {}))
    return cfg


def run_config(cfg: dict, out_override: Optional[Path] = None) -> int:
    run = cfg.get("run", {})
    options = cfg.get("suites", {})
    seed = run.get("seed")
    results = []
    for name in run.get("suites", list(options)):
        opts = dict(options.get(name, {}))
        if seed is not None and "seed" in _suite_options(name):
            opts.setdefault("seed", seed)
        results.append(run_suite(name, opts, cfg.get("system")))
    out = out_override or Path(run.get("output", "maglab-out"))
    return _report(results, out)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maglab", description="Magnetic frame-bundle verification suites.")
    p.add_argument("-v", "--verbose", action="store_true", help="log every check")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run one suite on one system")
    v.add_argument("suite", choices=suites.SUITES)
    v.add_argument("--system", choices=sorted(BUILTINS))
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int)
    v.add_argument("--tol", type=float)
    v.add_argument("--out", type=Path)

    pin = sub.add_parser("pinching", help="pinching threshold table")
    pin.add_argument("--n", type=int, action="append", required=True)
    pin.add_argument("--delta", type=float)
    pin.add_argument("--out", type=Path)

    t = sub.add_parser("tomo", help="exact sweep of the tomography constant")
    t.add_argument("--max-m", type=int, default=40)
    t.add_argument("--max-n", type=int, default=40)
    t.add_argument("--doubled-field-term", action="store_true",
                   help="use twice the projection weight of the field term")
    t.add_argument("--out", type=Path)

    pc = sub.add_parser("poincare", help="Poincaré ratio under Haar quadrature")
    pc.add_argument("--n", type=int, default=3, choices=(3, 4))
    pc.add_argument("--functions", type=int, default=50)
    pc.add_argument("--resolution", type=int)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", type=Path)

    r = sub.add_parser("run", help="run the suites listed in a TOML config")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path)
    return p


def _verify_options(args) -> dict:
    opts = {}
    accepted = _suite_options(args.suite)
    for key, name in (("seed", "seed"), ("tol", "tol"), ("samples", "samples")):
        value = getattr(args, key)
        if value is None:
            continue
        if name == "samples" and "samples" not in accepted:
            name = "fields" if "fields" in accepted else "functions" if "functions" in accepted else None
        if name is None or name not in accepted:
            raise ConfigError(f"--{key} does not apply to suite {args.suite!r}")
        opts[name] = value
    return opts


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "verify":
            system = {"name": args.system} if args.system else None
            if system is not None and args.suite not in SYSTEM_SUITES:
                raise ConfigError(f"suite {args.suite!r} does not take a system")
            return _report([run_suite(args.suite, _verify_options(args), system)], args.out)
        if args.command == "pinching":
            return _report([suites.pinching(tuple(args.n), args.delta)], args.out, show_rows=True)
        if args.command == "tomo":
            return _report([suites.tomo(args.max_m, args.max_n, args.doubled_field_term)], args.out)
        if args.command == "poincare":
            return _report([suites.poincare(args.n, args.seed, args.functions, args.resolution)], args.out)
        return run_config(load_config(args.config), args.out)
    except ConfigError as err:
        print(f"maglab: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
