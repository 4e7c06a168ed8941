"""Edge potentials of a star graph.

Each potential is a frozen pydantic model with a `kind` tag. The `EdgePotential`
annotated union picks the model from the tag, so a potential can be declared in a
run configuration as a plain table:

    [[graph.edges]]
    kind = "square_well"
    depth = -1.0
    width = 1.0

Potentials follow the sign convention of `-u'' + V u`: attractive wells are
negative. All kinds are real valued and integrable; `Zero`, `SquareWell`,
`PiecewiseLinear` and `Sampled` are compactly supported and `Exponential` is
truncated where its tail bound drops below a tolerance.
"""

from __future__ import annotations

import math
from typing import Annotated, Any, Callable, List, Literal, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import (
    AfterValidator,
    BaseModel,
    Discriminator,
    Field,
    Tag,
    ValidationInfo,
    model_validator,
)
from scipy.optimize import brentq

from stargraph_ssf.errors import TailNotIntegrable
from stargraph_ssf.validators import load_sampled_csv, validate_breakpoints

ArrayLike = Union[float, np.ndarray]

_GAUSS_3 = leggauss(3)
_GAUSS_8 = leggauss(8)
MAX_TRUNCATION = 1e6


def _check_order(order: int) -> None:
    if order not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1 or 2, got {order}")


def _piecewise_linear_integral(
    xs: np.ndarray,
    vs: np.ndarray,
    weight: Callable[[np.ndarray], np.ndarray],
    lower: float = 0.0,
) -> float:
    """
    Integrate `weight(x) * |V(x)|` over `[lower, xs[-1]]` for the linear interpolant
    of `(xs, vs)`. Segments are split where V changes sign, so with a weight of
    degree at most two the 3-point Gauss-Legendre rule is exact.
    """
    nodes, weights = _GAUSS_3
    total = 0.0
    for a, b, va, vb in zip(xs[:-1], xs[1:], vs[:-1], vs[1:]):
        if b <= lower:
            continue
        if a < lower:
            va = va + (vb - va) * (lower - a) / (b - a)
            a = lower
        pieces = [(a, b, va, vb)]
        if va * vb < 0:
            root = a + (b - a) * va / (va - vb)
            pieces = [(a, root, va, 0.0), (root, b, 0.0, vb)]
        for lo, hi, vlo, vhi in pieces:
            if hi <= lo:
                continue
            t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
            v = vlo + (vhi - vlo) * (t - lo) / (hi - lo)
            total += 0.5 * (hi - lo) * float(np.sum(weights * weight(t) * np.abs(v)))
    return total


def _clipped_cells(centers: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.maximum(centers - h / 2, 0.0)
    hi = centers + h / 2
    return lo, hi


class _Potential(BaseModel, frozen=True):
    """Shared queries of all potential kinds."""

    kind: str

    def _values(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval(self, x: ArrayLike) -> ArrayLike:
        """
        Evaluate the potential.

        Args:

            x: A position or an array of positions, all >= 0.

        Returns:

            V(x) with the shape of `x`; 0 beyond the support.
        """
        values = self._values(np.asarray(x, dtype=float))
        return float(values) if values.ndim == 0 else values

    def moment(self, order: int) -> float:
        """Return the integral of x**order * |V(x)| over [0, inf)."""
        raise NotImplementedError

    def tail_bound(self, x: float) -> float:
        """Return the integral of (1 + y) * |V(y)| over [x, inf)."""
        raise NotImplementedError

    def support_end(self) -> float:
        """Return the x beyond which V vanishes, or `inf` if there is none."""
        raise NotImplementedError

    def breakpoints(self) -> List[float]:
        """Positions in (0, support_end] where V or V' may jump."""
        return []

    def sup_negative(self) -> float:
        """Return max(0, -inf V)."""
        raise NotImplementedError

    @property
    def scale(self) -> float:
        """1 + the L1 norm of the potential."""
        return 1.0 + self.moment(0)

    @property
    def is_zero(self) -> bool:
        return self.moment(0) == 0.0

    def truncation_point(self, tau: float) -> float:
        """
        Return the point from which the Jost solutions are integrated backwards.

        Compactly supported potentials return the end of their support; other
        kinds return the smallest x with `tail_bound(x) <= tau`.

        Args:

            tau: The tail tolerance.

        Returns:

            The truncation point, >= 0.

        Raises:

            TailNotIntegrable: if no x below `MAX_TRUNCATION` meets `tau`.
        """
        end = self.support_end()
        if math.isfinite(end):
            return end
        if self.tail_bound(0.0) <= tau:
            return 0.0
        upper = 1.0
        while self.tail_bound(upper) > tau:
            upper *= 2
            if upper > MAX_TRUNCATION:
                raise TailNotIntegrable({"input": self.kind, "tau": tau})
        return float(
            brentq(
                lambda x: math.log(max(self.tail_bound(x), 1e-300)) - math.log(tau),
                upper / 2 if upper > 1 else 0.0,
                upper,
                xtol=1e-10,
            )
        )

    def cell_average(self, centers: ArrayLike, h: float) -> np.ndarray:
        """
        Average V over the cells [c - h/2, c + h/2] clipped to [0, inf).

        Args:

            centers: The cell centers.
            h: The cell width.

        Returns:

            An array of averages with the shape of `centers`.
        """
        lo, hi = _clipped_cells(np.atleast_1d(np.asarray(centers, dtype=float)), h)
        nodes, weights = _GAUSS_8
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        samples = self._values(mid[:, None] + half[:, None] * nodes[None, :])
        return 0.5 * samples @ weights


class ZeroPotential(_Potential, frozen=True):
    """The free edge, V = 0."""

    kind: Literal["zero"] = "zero"

    def _values(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(x)

    def moment(self, order: int) -> float:
        _check_order(order)
        return 0.0

    def tail_bound(self, x: float) -> float:
        return 0.0

    def support_end(self) -> float:
        return 0.0

    def sup_negative(self) -> float:
        return 0.0

    def cell_average(self, centers: ArrayLike, h: float) -> np.ndarray:
        return np.zeros_like(np.atleast_1d(np.asarray(centers, dtype=float)))


class SquareWell(_Potential, frozen=True):
    """
    A constant potential `depth` on [0, width) and 0 beyond.

    Attributes:
        depth: The value of V on the well; negative values attract.
        width: The length of the well.
    """

    kind: Literal["square_well"] = "square_well"
    depth: float
    width: Annotated[float, Field(gt=0)]

    def _values(self, x: np.ndarray) -> np.ndarray:
        return np.where((x >= 0) & (x < self.width), self.depth, 0.0)

    def moment(self, order: int) -> float:
        _check_order(order)
        return abs(self.depth) * self.width ** (order + 1) / (order + 1)

    def tail_bound(self, x: float) -> float:
        if x >= self.width:
            return 0.0
        x = max(x, 0.0)
        return abs(self.depth) * ((self.width - x) + (self.width**2 - x**2) / 2)

    def support_end(self) -> float:
        return 0.0 if self.depth == 0 else self.width

    def breakpoints(self) -> List[float]:
        return [self.width]

    def sup_negative(self) -> float:
        return max(0.0, -self.depth)

    def cell_average(self, centers: ArrayLike, h: float) -> np.ndarray:
        lo, hi = _clipped_cells(np.atleast_1d(np.asarray(centers, dtype=float)), h)
        overlap = np.clip(np.minimum(hi, self.width) - lo, 0.0, None)
        return self.depth * overlap / (hi - lo)


class Exponential(_Potential, frozen=True):
    """
    The potential `amplitude * exp(-rate * x)`.

    Attributes:
        amplitude: The value at the vertex.
        rate: The decay rate, > 0.
    """

    kind: Literal["exponential"] = "exponential"
    amplitude: float
    rate: Annotated[float, Field(gt=0)]

    def _values(self, x: np.ndarray) -> np.ndarray:
        return np.where(x >= 0, self.amplitude * np.exp(-self.rate * x), 0.0)

    def moment(self, order: int) -> float:
        _check_order(order)
        return abs(self.amplitude) * math.factorial(order) / self.rate ** (order + 1)

    def tail_bound(self, x: float) -> float:
        x = max(x, 0.0)
        r = self.rate
        return abs(self.amplitude) * math.exp(-r * x) * ((1 + x) / r + 1 / r**2)

    def support_end(self) -> float:
        return 0.0 if self.amplitude == 0 else math.inf

    def sup_negative(self) -> float:
        return max(0.0, -self.amplitude)

    def cell_average(self, centers: ArrayLike, h: float) -> np.ndarray:
        lo, hi = _clipped_cells(np.atleast_1d(np.asarray(centers, dtype=float)), h)
        r = self.rate
        integral = (np.exp(-r * lo) - np.exp(-r * hi)) / r
        return self.amplitude * integral / (hi - lo)


class _Interpolated(_Potential, frozen=True):
    """Linear interpolation between nodes, 0 outside the first and last node."""

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _values(self, x: np.ndarray) -> np.ndarray:
        xs, vs = self.nodes()
        inside = (x >= xs[0]) & (x <= xs[-1])
        return np.where(inside, np.interp(x, xs, vs), 0.0)

    def moment(self, order: int) -> float:
        _check_order(order)
        xs, vs = self.nodes()
        return _piecewise_linear_integral(xs, vs, lambda t: t**order)

    def tail_bound(self, x: float) -> float:
        xs, vs = self.nodes()
        return _piecewise_linear_integral(xs, vs, lambda t: 1 + t, lower=max(x, 0.0))

    def support_end(self) -> float:
        xs, vs = self.nodes()
        nonzero = np.flatnonzero(vs)
        if nonzero.size == 0:
            return 0.0
        last = nonzero[-1]
        return float(xs[min(last + 1, xs.size - 1)])

    def sup_negative(self) -> float:
        _, vs = self.nodes()
        return max(0.0, -float(vs.min()))


class PiecewiseLinear(_Interpolated, frozen=True):
    """
    Linear interpolation between `(x, v)` breakpoints; V = 0 before the first and
    after the last breakpoint.
    """

    kind: Literal["piecewise_linear"] = "piecewise_linear"
    points: Annotated[
        List[Tuple[float, float]],
        Field(min_length=2),
        AfterValidator(validate_breakpoints),
    ]

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        table = np.asarray(self.points, dtype=float)
        return table[:, 0], table[:, 1]

    def breakpoints(self) -> List[float]:
        xs, _ = self.nodes()
        end = self.support_end()
        return [float(x) for x in xs if 0 < x <= end]


class Sampled(_Interpolated, frozen=True):
    """
    Values on the uniform grid x_i = i * spacing, linearly interpolated and zero
    beyond the grid. A `csv` entry with two columns `x, V(x)` may replace
    `spacing` and `values`.
    """

    kind: Literal["sampled"] = "sampled"
    spacing: Annotated[float, Field(gt=0)]
    values: Annotated[List[float], Field(min_length=2)]

    @model_validator(mode="before")
    @classmethod
    def read_csv(cls, data: Any, info: ValidationInfo) -> Any:
        return load_sampled_csv(data, info)

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        vs = np.asarray(self.values, dtype=float)
        return self.spacing * np.arange(vs.size), vs

    def breakpoints(self) -> List[float]:
        end = self.support_end()
        return [end] if end > 0 else []


def potential_discriminator(data: Any) -> Optional[str]:
    """
    A function used to determine which potential model validates an edge. The tag
    is read from the `kind` key of a dictionary or the `kind` attribute of a
    model.

    Args:
        data: An object within the list passed to the `StarGraph.edges` attribute.

    Returns:
        A string naming the potential kind, or None if the object has no kind.
    """
    if isinstance(data, dict):
        return data.get("kind")
    return getattr(data, "kind", None)


EdgePotential = Annotated[
    Union[
        Annotated[ZeroPotential, Tag("zero")],
        Annotated[SquareWell, Tag("square_well")],
        Annotated[Exponential, Tag("exponential")],
        Annotated[PiecewiseLinear, Tag("piecewise_linear")],
        Annotated[Sampled, Tag("sampled")],
    ],
    Discriminator(potential_discriminator),
]
