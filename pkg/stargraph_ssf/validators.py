"""Custom validators for the potential, star graph and run configuration models.

The functions in this module check the hypotheses the spectral formulas rely on
(compactly supported grids, at least two edges, a consistent edge count) and are
used as before, after, or wrap validators. Problems are collected as
`error_details` of the exceptions in `stargraph_ssf.errors` and raised together
in a single `pydantic.ValidationError`.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError, ValidationInfo, ValidatorFunctionWrapHandler

from stargraph_ssf.errors import (
    EdgeCountMismatch,
    InvalidPotentialGrid,
    NoTasks,
    SpectralError,
    StarGraphTooSmall,
)

UNIFORM_GRID_RTOL = 1e-9


def _raise(errors: List[Any], title: str) -> None:
    raise ValidationError.from_exception_data(title=title, line_errors=errors)


def validate_breakpoints(
    breakpoints: List[Tuple[float, float]],
) -> List[Tuple[float, float]]:
    """
    Confirm that the breakpoints of a `PiecewiseLinear` potential start at a
    non-negative position and are strictly increasing.

    Args:

        breakpoints: A list of `(x, v)` pairs.

    Returns:

        The validated list of breakpoints.
    """
    xs = np.array([x for x, _ in breakpoints], dtype=float)
    errors = []
    if xs[0] < 0:
        error = InvalidPotentialGrid(
            {"loc": "breakpoints", "input": float(xs[0]), "reason": "x must be >= 0"}
        )
        errors.append(error.error_details)
    if np.any(np.diff(xs) <= 0):
        error = InvalidPotentialGrid(
            {
                "loc": "breakpoints",
                "input": xs.tolist(),
                "reason": "x must be strictly increasing",
            }
        )
        errors.append(error.error_details)
    if errors:
        _raise(errors, breakpoints.__class__.__name__)
    return breakpoints


def read_potential_csv(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read a two-column `x, V(x)` CSV file. A single non-numeric header row is
    skipped.

    Args:

        path: The file to read.

    Returns:

        A tuple of the x column and the V column.
    """
    try:
        table = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except ValueError:
        table = np.loadtxt(path, delimiter=",", ndmin=2, comments="#", skiprows=1)
    return table[:, 0], table[:, 1]


def check_sampled_grid(xs: Sequence[float]) -> Optional[SpectralError]:
    """Return an `InvalidPotentialGrid` error if `xs` is not uniform from 0."""
    grid = np.asarray(xs, dtype=float)
    if grid.size < 2:
        return InvalidPotentialGrid(
            {"loc": "csv", "input": grid.tolist(), "reason": "need at least 2 rows"}
        )
    if grid[0] != 0:
        return InvalidPotentialGrid(
            {"loc": "csv", "input": float(grid[0]), "reason": "x must start at 0"}
        )
    steps = np.diff(grid)
    if np.any(steps <= 0):
        return InvalidPotentialGrid(
            {
                "loc": "csv",
                "input": float(steps.min()),
                "reason": "x must be strictly increasing",
            }
        )
    if np.ptp(steps) > UNIFORM_GRID_RTOL * steps.mean() * grid.size:
        return InvalidPotentialGrid(
            {"loc": "csv", "input": float(np.ptp(steps)), "reason": "x must be uniform"}
        )
    return None


def load_sampled_csv(data: Any, info: ValidationInfo) -> Any:
    """
    Replace a `csv` entry of a `Sampled` potential by its `spacing` and `values`.
    Relative paths are resolved against `base_dir` from the validation context,
    which `parse_config` sets to the directory of the configuration file. This
    function is a model `BeforeValidator`.

    Args:

        data: The raw input passed to the `SampledPotential` model.
        info: A `ValidationInfo` object.

    Returns:

        The input with `spacing` and `values` filled in.
    """
    if not isinstance(data, dict) or data.get("csv") is None:
        return data
    path = Path(data["csv"])
    if not path.is_absolute() and info.context and info.context.get("base_dir"):
        path = Path(info.context["base_dir"]) / path
    xs, values = read_potential_csv(path)
    error = check_sampled_grid(xs)
    if error is not None:
        _raise([error.error_details], "SampledPotential")
    data = {k: v for k, v in data.items() if k != "csv"}
    data["spacing"] = float(xs[1] - xs[0])
    data["values"] = values.tolist()
    return data


def validate_edges(
    edges: List[Any], handler: ValidatorFunctionWrapHandler, info: ValidationInfo
) -> List[Any]:
    """
    Confirm that the `edges` attribute of a `StarGraph` describes a star graph:
    at least two edges and, if the graph declares `n`, exactly `n` potentials.

    This is a `WrapValidator`, so errors raised while validating the individual
    potentials are collected and raised together with the graph-level errors.

    Args:

        edges: A list of objects passed to the `StarGraph.edges` attribute.
        handler: The inner validator for the list of potentials.
        info: A `ValidationInfo` object.

    Returns:

        A list of validated potentials.
    """
    errors: List[Any] = []
    declared = info.data.get("n")
    if declared is not None and declared != len(edges):
        mismatch = EdgeCountMismatch({"input": declared, "found": len(edges)})
        errors.append(mismatch.error_details)
    count = declared if declared is not None else len(edges)
    if count < 2:
        errors.append(StarGraphTooSmall({"input": count, "loc": ()}).error_details)

    validated = []
    try:
        validated = handler(edges)
    except ValidationError as exc:
        errors.extend(exc.errors())

    if errors:
        line_errors = []
        for e in errors:
            if isinstance(e, dict) and "type" in e and "msg" in e:
                context: Dict[str, Any] = dict(e.get("ctx") or {})
                context["loc"] = tuple(e.get("loc", ()))
                context.setdefault("input", e.get("input"))
                error = SpectralError(e["type"], e["msg"], context)
                line_errors.append(error.error_details)
            else:
                line_errors.append(e)
        _raise(line_errors, edges.__class__.__name__)
    return validated


def validate_tasks(tasks: List[str]) -> List[str]:
    """
    Confirm that at least one task was requested and drop duplicates while
    keeping the order given in the configuration.

    Args:

        tasks: The list passed to `RunConfig.tasks`.

    Returns:

        The de-duplicated list of tasks.
    """
    if not tasks:
        _raise([NoTasks({"input": tasks, "loc": ()}).error_details], "RunConfig")
    return list(dict.fromkeys(tasks))
