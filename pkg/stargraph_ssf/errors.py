"""Exceptions raised while configuring or evaluating spectral quantities.

Every exception inherits from `SpectralError`, which inherits from
`PydanticCustomError`. Each subclass fixes an error `type` and a message template
and is built from a `context` dictionary. The `error_details` property turns the
exception into an `InitErrorDetails` object so that configuration problems can be
collected and wrapped into a single `pydantic.ValidationError`, exactly like the
numerical failures that are raised directly from the computational modules.
"""

from __future__ import annotations

from typing import Any, Dict

from pydantic_core import InitErrorDetails, PydanticCustomError


class SpectralError(PydanticCustomError):
    """Base Exception for star-graph spectral computations."""

    @property
    def error_details(self) -> InitErrorDetails:
        """Return the exception as an `InitErrorDetails` object."""
        context = {} if not self.context else self.context
        loc = context.get("loc", context.get("field", context.get("input")))
        input = context.get("input", {})
        if isinstance(loc, (str, int)):
            return InitErrorDetails(type=self, input=input, loc=(loc,))
        return InitErrorDetails(type=self, input=input, loc=loc)


class StarGraphTooSmall(SpectralError):
    """Exception raised if a star graph is declared with fewer than two edges."""

    def __new__(cls, context: Dict[str, Any]) -> StarGraphTooSmall:
        """
        Create a new `StarGraphTooSmall` object.

        Args:
            context: A dictionary containing:
                input: The number of edges that was supplied.
        """
        context.setdefault("loc", "edges")
        return super().__new__(
            cls,
            "star_graph_too_small",
            "edges: A star graph needs at least 2 edges, got {input}.",
            context,
        )


class EdgeCountMismatch(SpectralError):
    """Exception raised if the declared edge count differs from the potential list."""

    def __new__(cls, context: Dict[str, Any]) -> EdgeCountMismatch:
        """
        Create a new `EdgeCountMismatch` object.

        Args:
            context: A dictionary containing:
                input: The declared edge count `n`.
                found: The number of potentials listed under `edges`.
        """
        context.setdefault("loc", "n")
        return super().__new__(
            cls,
            "edge_count_mismatch",
            "n: Graph declares {input} edges but lists {found} potentials.",
            context,
        )


class InvalidPotentialGrid(SpectralError):
    """Exception raised if breakpoints or sampled grids are not usable."""

    def __new__(cls, context: Dict[str, Any]) -> InvalidPotentialGrid:
        """
        Create a new `InvalidPotentialGrid` object.

        Args:
            context: A dictionary containing:
                loc: The offending field.
                reason: A short description of the violated requirement.
        """
        return super().__new__(
            cls,
            "invalid_potential_grid",
            "{loc}: Invalid potential grid, {reason}.",
            context,
        )


class NoTasks(SpectralError):
    """Exception raised if a run configuration requests no task."""

    def __new__(cls, context: Dict[str, Any]) -> NoTasks:
        context.setdefault("loc", "tasks")
        return super().__new__(
            cls, "no_tasks", "tasks: At least one task must be requested.", context
        )


class ConfigSyntaxError(SpectralError):
    """Exception raised if the configuration file is not valid TOML."""

    def __new__(cls, context: Dict[str, Any]) -> ConfigSyntaxError:
        """
        Create a new `ConfigSyntaxError` object.

        Args:
            context: A dictionary containing:
                input: The path of the configuration file.
                detail: The parser message, including line and column.
        """
        return super().__new__(
            cls,
            "config_syntax_error",
            "{input}: Configuration is not valid TOML ({detail}).",
            context,
        )


class TailNotIntegrable(SpectralError):
    """Exception raised if no finite truncation point meets the tail tolerance."""

    def __new__(cls, context: Dict[str, Any]) -> TailNotIntegrable:
        """
        Create a new `TailNotIntegrable` object.

        Args:
            context: A dictionary containing:
                input: The potential kind.
                tau: The requested tail tolerance.
        """
        return super().__new__(
            cls,
            "tail_not_integrable",
            "{input}: No truncation point with tail bound below {tau}.",
            context,
        )


class StiffnessFailure(SpectralError):
    """Exception raised if the ODE integrator cannot meet its tolerance."""

    def __new__(cls, context: Dict[str, Any]) -> StiffnessFailure:
        """
        Create a new `StiffnessFailure` object.

        Args:
            context: A dictionary containing:
                input: The spectral parameter(s) being integrated.
                detail: The integrator's status message.
        """
        return super().__new__(
            cls,
            "stiffness_failure",
            "Integration failed at zeta={input}: {detail}",
            context,
        )


class MomentRequired(SpectralError):
    """Exception raised if an operation needs a moment the potential does not have."""

    def __new__(cls, context: Dict[str, Any]) -> MomentRequired:
        """
        Create a new `MomentRequired` object.

        Args:
            context: A dictionary containing:
                input: The potential kind.
                order: The moment order that must be finite.
        """
        return super().__new__(
            cls,
            "moment_required",
            "{input}: Moment of order {order} must be finite for this operation.",
            context,
        )


class JostZero(SpectralError):
    """Exception raised if a Jost function vanishes where it is used as a divisor."""

    def __new__(cls, context: Dict[str, Any]) -> JostZero:
        """
        Create a new `JostZero` object.

        Args:
            context: A dictionary containing:
                loc: The edge index.
                input: The value of the Jost function.
                zeta: The spectral parameter.
        """
        return super().__new__(
            cls,
            "jost_zero",
            "edge {loc}: Jost function {input} vanishes at zeta={zeta}; "
            "use the pole-free form.",
            context,
        )


class ZeroSpectralParam(SpectralError):
    """Exception raised if zeta = 0 reaches a formula that divides by zeta."""

    def __new__(cls, context: Dict[str, Any]) -> ZeroSpectralParam:
        return super().__new__(
            cls,
            "zero_spectral_param",
            "{input}: zeta=0 is not allowed here; use the low-energy operations.",
            context,
        )


class EigenvalueHit(SpectralError):
    """Exception raised if z is (numerically) an eigenvalue of the graph operator."""

    def __new__(cls, context: Dict[str, Any]) -> EigenvalueHit:
        return super().__new__(
            cls,
            "eigenvalue_hit",
            "z={input}: Pole-free combination P={value} vanishes, z is an eigenvalue.",
            context,
        )


class GridTooCoarse(SpectralError):
    """Exception raised if one grid cell hides more than one sign change."""

    def __new__(cls, context: Dict[str, Any]) -> GridTooCoarse:
        """
        Create a new `GridTooCoarse` object.

        Args:
            context: A dictionary containing:
                input: The (kappa_left, kappa_right) cell.
                changes: The number of sign changes found after refinement.
        """
        return super().__new__(
            cls,
            "grid_too_coarse",
            "kappa cell {input}: {changes} sign changes after refinement.",
            context,
        )


class IllConditioned(SpectralError):
    """Exception raised if a zero-energy quantity sits too close to its threshold."""

    def __new__(cls, context: Dict[str, Any]) -> IllConditioned:
        """
        Create a new `IllConditioned` object.

        Args:
            context: A dictionary containing:
                loc: The quantity (edge index or "K0").
                input: Its absolute value.
                threshold: The zero threshold it was compared against.
        """
        return super().__new__(
            cls,
            "ill_conditioned",
            "{loc}: |value|={input} is within a factor 10 of the zero threshold "
            "{threshold}; classification unreliable.",
            context,
        )


class AnchorTooSmall(SpectralError):
    """Exception raised if D(k_anchor^2) is not close enough to 1 to fix the branch."""

    def __new__(cls, context: Dict[str, Any]) -> AnchorTooSmall:
        return super().__new__(
            cls,
            "anchor_too_small",
            "k_anchor={input}: |D-1|={deviation} exceeds {limit}.",
            context,
        )


class RefinementLimit(SpectralError):
    """Exception raised if phase unwrapping cannot be tamed by refinement."""

    def __new__(cls, context: Dict[str, Any]) -> RefinementLimit:
        """
        Create a new `RefinementLimit` object.

        Args:
            context: A dictionary containing:
                input: The offending (k_left, k_right) interval.
                rounds: The number of refinement rounds performed.
        """
        return super().__new__(
            cls,
            "refinement_limit",
            "k interval {input}: phase jump persists after {rounds} refinement rounds.",
            context,
        )


class TailTooFat(SpectralError):
    """Exception raised if the truncated spectral tail exceeds the tolerance."""

    def __new__(cls, context: Dict[str, Any]) -> TailTooFat:
        return super().__new__(
            cls,
            "tail_too_fat",
            "lambda_max={input}: tail estimate {estimate} exceeds tolerance {tolerance}.",
            context,
        )


class WindowContainsZero(SpectralError):
    """Exception raised if a low-energy fit window contains a bound state."""

    def __new__(cls, context: Dict[str, Any]) -> WindowContainsZero:
        return super().__new__(
            cls,
            "window_contains_zero",
            "window {input}: D(-kappa^2) changes sign, a bound state lies inside.",
            context,
        )


class NotConverged(SpectralError):
    """Exception raised if two oracle refinement levels disagree."""

    def __new__(cls, context: Dict[str, Any]) -> NotConverged:
        """
        Create a new `NotConverged` object.

        Args:
            context: A dictionary containing:
                input: The values produced at each level.
                levels: The (L, h) pairs.
        """
        return super().__new__(
            cls,
            "not_converged",
            "Oracle levels {levels} disagree: {input}.",
            context,
        )


class SingularShift(SpectralError):
    """Exception raised if z lies on the discrete spectrum of the oracle matrix."""

    def __new__(cls, context: Dict[str, Any]) -> SingularShift:
        return super().__new__(
            cls,
            "singular_shift",
            "z={input}: shifted oracle matrix is singular.",
            context,
        )


class TrustRegionExceeded(SpectralError):
    """Exception raised if sqrt(t)*h is too large for the discretization."""

    def __new__(cls, context: Dict[str, Any]) -> TrustRegionExceeded:
        return super().__new__(
            cls,
            "trust_region_exceeded",
            "t={input}: sqrt(t)*h={value} exceeds {limit}.",
            context,
        )


class DimensionOverflow(SpectralError):
    """Exception raised if a discretization would exceed the unknown budget."""

    def __new__(cls, context: Dict[str, Any]) -> DimensionOverflow:
        return super().__new__(
            cls,
            "dimension_overflow",
            "Discretization needs {input} unknowns, limit is {limit}.",
            context,
        )
