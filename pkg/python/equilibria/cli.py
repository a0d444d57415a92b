"""Command-line entry point: ``equilibria solve|oracle|verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import duckdb

from .solver import _sql as q
from .solver._config import ProblemConfig
from .solver._exceptions import ConfigError, EquilibriumError
from .solver.api import full_report, run_oracle, verify_solution

logger = logging.getLogger("equilibria")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equilibria",
        description="Weighted equilibrium measures on the unit circle.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name, summary in (
        ("solve", "solve for the support and density, then verify"),
        ("oracle", "run only the discrete energy minimizer"),
        ("verify", "recompute every residual of a stored solution"),
    ):
        sub = commands.add_parser(name, help=summary)
        sub.add_argument("--config", required=True, help="problem config (JSON)")
        sub.add_argument("--out", default=".", help="output directory")
        sub.add_argument("--grid", type=int, default=None, help="grid size N")
        sub.add_argument(
            "--tol", type=float, default=None, help="endpoint solve tolerance"
        )
        sub.add_argument(
            "--arcs", default=None, help='initial arcs as "a1,b1;a2,b2"'
        )
        sub.add_argument("-v", "--verbose", action="store_true")
        sub.add_argument("-q", "--quiet", action="store_true")
        if name == "verify":
            sub.add_argument(
                "--solution", required=True, help="solution.json written by solve"
            )
    return parser


def _dump(path: Path, document: Dict[str, Any]) -> None:
    text = json.dumps(document, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def _load_config(args: argparse.Namespace) -> ProblemConfig:
    config = ProblemConfig.load(args.config)
    return config.with_overrides(grid=args.grid, tol=args.tol, arcs=args.arcs)


def cmd_solve(args: argparse.Namespace, con: duckdb.DuckDBPyConnection) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    solution = full_report(
        config.field, options=config.solver, tolerances=config.tolerances, con=con
    )
    try:
        if "json" in config.formats:
            _dump(out / "solution.json", solution.to_json())
            if solution.support_report is not None:
                _dump(out / "support.json", solution.support_report.to_json())
        if "csv" in config.formats:
            q.copy_to_csv(con, solution.density(), out / "density.csv")
            potential = solution.potential(config.solver.verify_grid)
            q.copy_to_csv(con, potential, out / "potential.csv")
        logger.info("%r", solution)
        return EXIT_PASS if solution.passed else EXIT_FAIL
    finally:
        solution.close()


def cmd_oracle(args: argparse.Namespace, con: duckdb.DuckDBPyConnection) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_oracle(config.field, options=config.solver, con=con)
    if "csv" in config.formats:
        q.copy_to_csv(con, result.measure.to_relation(con), out / "measure.csv")
    if "json" in config.formats:
        _dump(out / "oracle.json", result.to_json())
    return EXIT_PASS


def cmd_verify(args: argparse.Namespace, con: duckdb.DuckDBPyConnection) -> int:
    config = _load_config(args)
    path = Path(args.solution)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(
            f"Cannot read solution `{path}`: {exc}", stage="config"
        ) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"Solution `{path}` is not valid JSON: {exc}", stage="config"
        ) from exc
    solution = verify_solution(
        document, options=config.solver, tolerances=config.tolerances, con=con
    )
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        assert solution.report is not None
        _dump(out / "report.json", solution.report.to_dict())
        for name in solution.report.failures():
            print(f"residual {name} failed", file=sys.stderr)
        return EXIT_PASS if solution.passed else EXIT_FAIL
    finally:
        solution.close()


COMMANDS = {"solve": cmd_solve, "oracle": cmd_oracle, "verify": cmd_verify}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    con = duckdb.connect()
    try:
        return COMMANDS[args.command](args, con)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EquilibriumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        con.close()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
