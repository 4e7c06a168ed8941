"""A model that defines a valid run configuration.

A run configuration is a TOML file:

    output_dir = "results"
    seed = 0
    tasks = ["levinson", "ssf_curve"]

    [graph]
    n = 3

    [[graph.edges]]
    kind = "square_well"
    depth = -4.0
    width = 1.0

    [[graph.edges]]
    kind = "zero"

    [[graph.edges]]
    kind = "sampled"
    csv = "well.csv"

    [tolerances]
    rtol = 1e-10

    [tolerances.residuals]
    levinson = 0.02

    [parameters]
    z_values = [-1.0, -4.0, [-4.0, 0.5]]

Relative `csv` paths are resolved against the directory of the configuration
file, which is passed to the validators as `context={"base_dir": ...}`.
"""

from __future__ import annotations

import tomllib
from pathlib import Path
from typing import Annotated, Any, List, Literal, Tuple, Union

from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    Field,
    PlainSerializer,
    ValidationError,
)

from stargraph_ssf.errors import ConfigSyntaxError
from stargraph_ssf.fields import complex_pair
from stargraph_ssf.models import StarGraph
from stargraph_ssf.tolerances import Tolerances
from stargraph_ssf.validators import validate_tasks

TaskName = Literal[
    "ssf_curve",
    "levinson",
    "eigencount",
    "resonance",
    "trace_formula_check",
    "dispersion_check",
    "decay_check",
    "oracle_compare",
]


def parse_z(value: Any) -> Any:
    """Accept a real number or an `[re, im]` pair for a complex spectral point."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return value


ZValue = Annotated[
    complex, BeforeValidator(parse_z), PlainSerializer(complex_pair, when_used="json")
]


class Parameters(BaseModel, frozen=True):
    """
    Task parameters of a run.

    Attributes:
        z_values: The spectral points of the trace formula and oracle checks.
        z_dispersion: The point of the dispersion identity.
        trace_c: The shift c of the test function (lambda + c)**-1.
        decay_t: The points t of the trace norm decay fit.
        decay_L: The truncation length of the dense decay discretization.
        decay_h: The coarse spacing of the decay fit; the fit is repeated at h / 2.
        oracle_L: The truncation length of the sparse oracle.
        oracle_h: The coarse and fine spacing of the sparse oracle.
        k_anchor: The anchor wave number of the phase curve.
        fit_window: The kappa window of the low-energy exponent fit.
        sweep_count: The number of seeded random graphs added to eigencount and
            levinson.
        phase_lambda: The energy of the determinant phase comparison.
        phase_epsilon: The imaginary offset of the phase comparison.
    """

    z_values: List[ZValue] = [-1.0, -4.0, -9.0]
    z_dispersion: ZValue = -4.0
    trace_c: Annotated[float, Field(gt=0)] = 4.0
    decay_t: Annotated[List[Annotated[float, Field(gt=0)]], Field(min_length=2)] = [
        16.0,
        64.0,
        256.0,
    ]
    decay_L: Annotated[float, Field(gt=0)] = 4.0
    decay_h: Annotated[float, Field(gt=0)] = 0.005
    oracle_L: Annotated[float, Field(gt=0)] = 30.0
    oracle_h: Tuple[float, float] = (0.02, 0.01)
    k_anchor: Annotated[float, Field(gt=0)] = 100.0
    fit_window: Tuple[float, float] = (1e-4, 1e-2)
    sweep_count: Annotated[int, Field(ge=0)] = 0
    phase_lambda: Annotated[float, Field(gt=0)] = 1.0
    phase_epsilon: Annotated[float, Field(gt=0)] = 0.5


class RunConfig(BaseModel, frozen=True):
    """
    A class that defines a run of the command line driver.

    Attributes:
        graph: The star graph.
        tasks: The tasks to run, in order, without duplicates.
        tolerances: The numerical settings, defaulted from `DEFAULT_TOLERANCES`.
        parameters: The task parameters.
        output_dir: The directory receiving the CSV and JSON artifacts.
        seed: The seed of randomized sweeps and stochastic estimators.
    """

    graph: StarGraph
    tasks: Annotated[List[TaskName], AfterValidator(validate_tasks)]
    tolerances: Tolerances = Tolerances()
    parameters: Parameters = Parameters()
    output_dir: Path = Path("results")
    seed: int = 0


def parse_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a TOML run configuration.

    Args:
        path: The configuration file.

    Returns:
        A validated `RunConfig`.

    Raises:
        ValidationError: for TOML syntax errors and schema violations.
    """
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        error = ConfigSyntaxError({"input": str(path), "detail": str(exc), "loc": "file"})
        raise ValidationError.from_exception_data(
            title="RunConfig", line_errors=[error.error_details]
        ) from exc
    return RunConfig.model_validate(data, context={"base_dir": path.parent})
