"""Command-line front end.

    simulate <config-path> [--output PATH] [--reproducible] [--verify] [--tol X]
    simulate --verify [--tol X]

Exit codes: 0 success, 1 config error, 2 solver guard, 3 I/O error,
4 oracle verification failed.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .entanglement import closed_form_negativity
from .errors import ConfigError, SolverGuardError
from .presets import KEYS, Resolved, parse_value, resolve
from .sweep import ResultTable, max_negativity_scan, run_grid_sweep, run_time_sweep

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    overrides: dict
    output_path: str | None
    format: str
    resolved: Resolved = field(repr=False)


def parse_config(text) -> RunConfig:
    """Parse ``key = value`` lines into a validated RunConfig.

    ``#`` starts a comment, blank lines are skipped and ``[section]`` header
    lines are accepted as visual grouping only (the namespace stays flat).
    Unknown or repeated keys, type mismatches and incomplete presets raise
    ConfigError carrying the line number where one applies.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not UTF-8: {exc}") from None
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        try:
            values[key] = parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
        lines[key] = lineno
    if "experiment" not in values:
        raise ConfigError("experiment missing")
    experiment = values.pop("experiment")
    output = values.pop("output", None)
    fmt = values.pop("format", "csv")
    resolved = resolve(experiment, values, lines)
    return RunConfig(experiment, values, output, fmt, resolved)


def execute(config: RunConfig) -> ResultTable:
    r = config.resolved
    if r.kind == "time":
        return run_time_sweep(r.spec)
    if r.kind == "grid":
        return run_grid_sweep(r.spec)
    return max_negativity_scan(r.spec, r.window)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def render_csv(table: ResultTable, config: RunConfig, *, reproducible: bool) -> str:
    prov = table.provenance
    out = [f"# wgmsim {__version__}", f"# experiment: {config.experiment}"]
    if not reproducible:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        out.append(f"# generated: {stamp}")
    out.append(f"# spec_sha256: {prov['spec_sha256']}")
    out.append(f"# solver: {prov['solver']}")
    settings = {k: v for k, v in sorted(config.resolved.settings.items()) if k != "output"}
    out.append("# settings: " + json.dumps(settings, sort_keys=True, default=list))
    out.append("# params: " + json.dumps(prov["spec"]["base"], sort_keys=True))
    for key in ("window", "window_samples", "note"):
        if key in prov and prov[key] is not None:
            out.append(f"# {key}: {json.dumps(prov[key], sort_keys=True)}")
    out.append(",".join(table.columns))
    for row in table.rows:
        out.append(",".join(_fmt(x) for x in row))
    return "\n".join(out) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def verify_output(table: ResultTable, config: RunConfig, tol: float) -> tuple[bool, str]:
    """Compare a closed two-atom Bell-state run against the closed-form negativity."""
    spec = config.resolved.spec
    base = spec.base
    symmetric = all(c == base.couplings[0] and c[0] == c[1] for c in base.couplings)
    applicable = (
        config.resolved.kind == "time"
        and base.atom_count == 2
        and base.closed
        and base.delta == 0
        and symmetric
        and base.couplings[0][0] > 0
        and spec.initial_state == "superposition"
        and math.isclose(spec.theta, math.pi / 4, abs_tol=1e-15)
    )
    if not applicable:
        return True, "oracle check skipped: needs a closed two-atom symmetric run with theta = pi/4"
    if base.scatter_j != 0:
        return True, "oracle check skipped: the closed form describes J = 0 only"
    g = base.couplings[0][0]
    omega = base.ddi[0][1] / g
    tau = table.column("tau")
    ref = np.array([closed_form_negativity(omega, 0.0, g * t) for t in tau])
    err = float(np.max(np.abs(table.column("negativity") - ref)))
    ok = err <= tol
    return ok, f"negativity vs closed form: max error {err:.3e} (tol {tol:.1e}) {'PASS' if ok else 'FAIL'}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simulate", description=__doc__.split("\n\n")[0])
    parser.add_argument("config", nargs="?", help="path to a key = value config file")
    parser.add_argument("--output", help="CSV destination (overrides the config's output)")
    parser.add_argument("--reproducible", action="store_true",
                        help="omit the timestamp so reruns are byte-identical")
    parser.add_argument("--verify", action="store_true",
                        help="check against the built-in oracles")
    parser.add_argument("--tol", type=float, default=None,
                        help="replace every verification tolerance with this value")
    args = parser.parse_args(argv)

    if args.config is None:
        if not args.verify:
            parser.print_usage(sys.stderr)
            print("simulate: a config path is required unless --verify is given", file=sys.stderr)
            return EXIT_CONFIG
        from .verification import format_checks, run_oracle_suite

        checks = run_oracle_suite(args.tol)
        print(format_checks(checks))
        return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY

    try:
        config = parse_config(Path(args.config).read_bytes())
    except OSError as exc:
        print(f"simulate: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    output = args.output or config.output_path
    if not output:
        print("simulate: config error: no output path (set 'output' or pass --output)",
              file=sys.stderr)
        return EXIT_CONFIG

    try:
        table = execute(config)
    except SolverGuardError as exc:
        print(f"simulate: solver guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        write_atomic(Path(output), render_csv(table, config, reproducible=args.reproducible))
    except OSError as exc:
        print(f"simulate: cannot write {output}: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.verify:
        ok, message = verify_output(table, config, args.tol if args.tol is not None else 1e-8)
        print(message)
        if not ok:
            return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
