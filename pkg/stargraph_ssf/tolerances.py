"""Numerical defaults used by the `stargraph_ssf` package.

The `DEFAULT_TOLERANCES` dictionary holds every tolerance, grid size and residual
threshold the package uses. The `Tolerances` model exposes the same values as
validated attributes; a run configuration may override any of them in its
`[tolerances]` table. The entries are grouped as:
    integration:
        `rtol`, `atol` for the Jost/regular ODEs and `tau_tail` for truncating
        non-compact potentials.
    zeros:
        `jost_zero` (relative threshold for |w_j(zeta)|), `zero_tol` (zero-energy
        classification) and `eigenvalue_zero` (|P| below which z is an eigenvalue).
    grids:
        the kappa grid for bound states, the k grid for the phase curve and the
        refinement limits used by both.
    oracle:
        the unknown budget and the stochastic trace settings.
    residuals:
        the pass/fail thresholds reported by the command line driver. Only these
        are multiplied by `Tolerances.scaled`.
"""

from __future__ import annotations

import math
from typing import Annotated, Any, Dict, Tuple

from pydantic import BaseModel, Field

DEFAULT_TOLERANCES: Dict[str, Any] = {
    "rtol": 1e-10,
    "atol": 1e-12,
    "tau_tail": 1e-12,
    "jost_zero": 1e-8,
    "zero_tol": 1e-6,
    "eigenvalue_zero": 1e-12,
    "kappa_grid": 400,
    "kappa_min": 1e-3,
    "kappa_refine": 1e-12,
    "k_grid": 600,
    "lambda_min": 1e-6,
    "lambda_max": 1e4,
    "anchor_max_deviation": 0.3,
    "unwrap_limit": math.pi / 2,
    "refinement_rounds": 20,
    "oracle_max_unknowns": 2_000_000,
    "stochastic_threshold": 200_000,
    "stochastic_probes": 64,
    "residuals": {
        "levinson": 0.02,
        "dispersion": 1e-2,
        "trace_formula": 1e-3,
        "determinant": 1e-4,
        "trace_test_function": 1e-2,
        "decay_slope": -1.4,
        "free_identity": 1e-8,
        "eigenvalue": 1e-3,
        "low_energy_slope": 0.1,
        "phase": 0.02,
        "decay_stability": 0.1,
    },
}


def _default(key: str) -> Any:
    return DEFAULT_TOLERANCES[key]


class Residuals(BaseModel, frozen=True):
    """Pass/fail thresholds for the checks reported in `summary.json`."""

    levinson: float = _default("residuals")["levinson"]
    dispersion: float = _default("residuals")["dispersion"]
    trace_formula: float = _default("residuals")["trace_formula"]
    determinant: float = _default("residuals")["determinant"]
    trace_test_function: float = _default("residuals")["trace_test_function"]
    decay_slope: float = _default("residuals")["decay_slope"]
    free_identity: float = _default("residuals")["free_identity"]
    eigenvalue: float = _default("residuals")["eigenvalue"]
    low_energy_slope: float = _default("residuals")["low_energy_slope"]
    phase: float = _default("residuals")["phase"]
    decay_stability: float = _default("residuals")["decay_stability"]


class Tolerances(BaseModel, frozen=True):
    """
    A class that holds the numerical settings of a run. Every attribute defaults to
    the matching entry of `DEFAULT_TOLERANCES`.
    """

    rtol: Annotated[float, Field(gt=0)] = _default("rtol")
    atol: Annotated[float, Field(gt=0)] = _default("atol")
    tau_tail: Annotated[float, Field(gt=0)] = _default("tau_tail")
    jost_zero: Annotated[float, Field(gt=0)] = _default("jost_zero")
    zero_tol: Annotated[float, Field(gt=0)] = _default("zero_tol")
    eigenvalue_zero: Annotated[float, Field(gt=0)] = _default("eigenvalue_zero")
    kappa_grid: Annotated[int, Field(ge=10)] = _default("kappa_grid")
    kappa_min: Annotated[float, Field(gt=0)] = _default("kappa_min")
    kappa_refine: Annotated[float, Field(gt=0)] = _default("kappa_refine")
    k_grid: Annotated[int, Field(ge=10)] = _default("k_grid")
    lambda_min: Annotated[float, Field(gt=0)] = _default("lambda_min")
    lambda_max: Annotated[float, Field(gt=0)] = _default("lambda_max")
    anchor_max_deviation: Annotated[float, Field(gt=0, lt=1)] = _default(
        "anchor_max_deviation"
    )
    unwrap_limit: Annotated[float, Field(gt=0, lt=math.pi)] = _default("unwrap_limit")
    refinement_rounds: Annotated[int, Field(ge=1)] = _default("refinement_rounds")
    oracle_max_unknowns: Annotated[int, Field(ge=1)] = _default("oracle_max_unknowns")
    stochastic_threshold: Annotated[int, Field(ge=1)] = _default(
        "stochastic_threshold"
    )
    stochastic_probes: Annotated[int, Field(ge=64)] = _default("stochastic_probes")
    residuals: Residuals = Residuals()

    @property
    def k_window(self) -> Tuple[float, float]:
        """The (k_min, k_max) range matching `lambda_min` and `lambda_max`."""
        return math.sqrt(self.lambda_min), math.sqrt(self.lambda_max)

    def scaled(self, factor: float) -> Tolerances:
        """
        Return a copy whose residual thresholds are multiplied by `factor`.

        The decay slope threshold is an upper bound on a negative exponent, so it is
        divided instead of multiplied.
        """
        residuals = self.residuals.model_dump()
        for name, value in residuals.items():
            residuals[name] = value / factor if name == "decay_slope" else value * factor
        return self.model_copy(update={"residuals": Residuals(**residuals)})


DEFAULTS = Tolerances()
