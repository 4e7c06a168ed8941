"""Command line driver.

    stargraph-ssf --config run.toml [--output DIR] [--tolerance-scale F]
                  [--threads N] [--verbose]

Every task of the configuration writes `<task>.csv` and `<task>.json` into the
output directory; `summary.json` lists every check with its residual, tolerance
and provenance. The exit code is 0 if every check passed, 2 if some residual
exceeded its tolerance and 1 if a task failed or the configuration is invalid.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from stargraph_ssf.config import RunConfig, parse_config
from stargraph_ssf.logging_config import get_logger, set_level
from stargraph_ssf.tasks import TASKS, TaskResult
from stargraph_ssf.tolerances import Tolerances

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RESIDUAL = 2


def format_cell(value: Any) -> str:
    """Format a CSV cell; floats get 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return f"{format(value.real, '.17g')}{format(value.imag, '+.17g')}j"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, result: TaskResult) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([format_cell(cell) for cell in row])


def write_json(path: Path, document: Any) -> None:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_task(name: str, config: RunConfig, tol: Tolerances) -> TaskResult:
    """Run one task; any exception is recorded on the result instead of raised."""
    logger.debug(f"starting task {name}")
    try:
        result = TASKS[name](config, tol)
    except Exception as exc:
        logger.warning(f"task {name} failed: {exc}")
        return TaskResult(task=name, error=f"{type(exc).__name__}: {exc}")
    for check in result.checks:
        if not check.passed:
            logger.warning(
                f"{name}: {check.name} residual {check.residual:.3g} exceeds "
                f"{check.tolerance:.3g}"
            )
    return result


def exit_code(results: Sequence[TaskResult]) -> int:
    if any(r.error is not None for r in results):
        return EXIT_ERROR
    if not all(r.passed for r in results):
        return EXIT_RESIDUAL
    return EXIT_OK


def run(
    config: RunConfig,
    threads: Optional[int] = None,
    tolerance_scale: float = 1.0,
    output_dir: Optional[Path] = None,
) -> int:
    """
    Run every task of `config` on a bounded thread pool and write the artifacts.

    Args:
        config: A validated run configuration.
        threads: The pool size, the number of cores by default.
        tolerance_scale: The factor applied to every residual tolerance.
        output_dir: Overrides `config.output_dir`.

    Returns:
        The exit code.
    """
    tol = config.tolerances.scaled(tolerance_scale)
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_task, name, config, tol) for name in config.tasks]
        results: List[TaskResult] = [f.result() for f in futures]

    for result in results:
        if result.error is None:
            write_csv(out / f"{result.task}.csv", result)
        write_json(out / f"{result.task}.json", result.model_dump(mode="json"))
    code = exit_code(results)
    summary = {
        "exit_code": code,
        "tolerance_scale": tolerance_scale,
        "tasks": {
            r.task: {
                "passed": r.passed,
                "error": r.error,
                "checks": [c.model_dump(mode="json") for c in r.checks],
            }
            for r in results
        },
    }
    write_json(out / "summary.json", summary)
    logger.info(f"wrote {len(results)} task results to {out}, exit code {code}")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stargraph-ssf",
        description="Spectral shift function and Levinson checks for star graphs.",
    )
    parser.add_argument("--config", type=Path, required=True, help="TOML run configuration")
    parser.add_argument("--output", type=Path, default=None, help="output directory")
    parser.add_argument(
        "--tolerance-scale",
        type=float,
        default=1.0,
        help="multiply every residual tolerance (default: %(default)s)",
    )
    parser.add_argument(
        "--threads", type=int, default=None, help="worker threads (default: cores)"
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_level("DEBUG")
    try:
        config = parse_config(args.config)
    except (OSError, ValidationError) as exc:
        logger.error(f"invalid configuration {args.config}: {exc}")
        return EXIT_ERROR
    return run(config, args.threads, args.tolerance_scale, args.output)


if __name__ == "__main__":
    raise SystemExit(main())
