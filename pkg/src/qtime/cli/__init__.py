"""``qtime`` command-line driver.

Exit codes: 0 success, 2 spec validation failure, 3 contradictory selection,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from ..qcore import ContradictorySelectionError
from .experiments import EXPERIMENTS
from .records import ResultRecord, digest
from .spec import ModelSpec, SpecError, parse_spec

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONTRADICTORY = 3
EXIT_INVARIANT = 4


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator seeded from the spec; every random draw flows from here."""
    return np.random.Generator(np.random.PCG64(seed))


def run_spec(spec: ModelSpec, experiment: str) -> ResultRecord:
    if spec.experiment != experiment:
        raise SpecError(
            "experiment.name", f"spec is for {spec.experiment!r} but subcommand {experiment!r} was requested"
        )
    rec = ResultRecord(
        experiment=experiment,
        inputs_digest=digest({"spec": spec.raw, "seed": spec.seed, "tolerances": spec.tolerances}),
    )
    start = time.perf_counter()
    EXPERIMENTS[experiment](spec, make_rng(spec.seed), rec)
    rec.wall_time = time.perf_counter() - start
    return rec


def _write(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def emit(rec: ResultRecord, out: Path | None, fmt: str) -> None:
    if fmt == "json":
        _write(rec.to_json(), out)
        return
    tables = rec.tables
    if out is None:
        if len(tables) == 1:
            sys.stdout.write(next(iter(tables.values())).to_csv())
        else:
            for name, t in tables.items():
                sys.stdout.write(f"# table: {name}\n{t.to_csv()}")
        return
    if len(tables) == 1:
        out.write_text(next(iter(tables.values())).to_csv())
    else:
        for name, t in tables.items():
            out.with_name(f"{out.stem}_{name}.csv").write_text(t.to_csv())
    out.with_suffix(".json").write_text(rec.to_json())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtime", description="Run a quantum-time experiment from a JSON spec.")
    sub = p.add_subparsers(dest="experiment", required=True, metavar="SUBCOMMAND")
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--spec", required=True, type=Path, help="path to the JSON model spec")
        s.add_argument("--out", type=Path, help="output path (stdout if omitted)")
        s.add_argument("--format", choices=("json", "csv"), default="json")
        s.add_argument("--tol", type=float, help="override tolerances.check")
        s.add_argument("--seed", type=int, help="override the spec seed (unsigned 64-bit)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.spec.read_text()
    except OSError as exc:
        print(f"error: cannot read spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        spec = parse_spec(text, seed=args.seed, tol=args.tol)
        rec = run_spec(spec, args.experiment)
    except SpecError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ContradictorySelectionError as exc:
        print(f"contradictory selection: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTORY
    except AssertionError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    emit(rec, args.out, args.format)
    if not rec.passed:
        failed = sorted(k for k, v in rec.checks.items() if not v)
        print(f"invariant breach: failed checks {failed}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK
