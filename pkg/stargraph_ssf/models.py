"""A model that defines a star graph with potentials on its edges.

The `StarGraph` model validates that a graph has at least two half-line edges
joined at one vertex with Kirchhoff conditions and that every edge carries a valid
`EdgePotential`.
"""

from __future__ import annotations

import math
from typing import Annotated, Any, List, Sequence

import numpy as np
from pydantic import BaseModel, WrapValidator, model_validator

from stargraph_ssf.potentials import EdgePotential, SquareWell, ZeroPotential
from stargraph_ssf.validators import validate_edges

TUNED_DEPTH = -((math.pi / 2) ** 2)


class StarGraph(BaseModel, frozen=True):
    """
    A class that defines a star graph. `n` defaults to the number of listed
    potentials; when it is given it must match that number.

    Attributes:
        n: The number of edges, at least 2.
        edges: A list of `EdgePotential` objects, one per edge.
    """

    n: int
    edges: Annotated[List[EdgePotential], WrapValidator(validate_edges)]

    @model_validator(mode="before")
    @classmethod
    def default_edge_count(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("n") is None:
            edges = data.get("edges")
            if isinstance(edges, (list, tuple)):
                return {**data, "n": len(edges)}
        return data

    @classmethod
    def free(cls, n: int) -> StarGraph:
        """Return the star graph with `n` free edges."""
        return cls(edges=[ZeroPotential() for _ in range(n)])

    @classmethod
    def tuned_resonant(cls, n: int, tuned_edges: int) -> StarGraph:
        """
        Return a star graph whose first `tuned_edges` edges carry the well
        SquareWell(-(pi/2)**2, 1), whose Jost function vanishes at zero energy.
        The remaining edges are free.
        """
        edges: List[Any] = [
            SquareWell(depth=TUNED_DEPTH, width=1.0) for _ in range(tuned_edges)
        ]
        edges += [ZeroPotential() for _ in range(n - tuned_edges)]
        return cls(edges=edges)

    @classmethod
    def random_wells(
        cls,
        seed: int,
        n_choices: Sequence[int] = (2, 3, 4),
        depth_range: Sequence[float] = (-9.0, 0.0),
        width_range: Sequence[float] = (0.5, 2.0),
    ) -> StarGraph:
        """
        Draw a star graph with square wells on a random subset of its edges.

        Each edge carries a well with probability 1/2; at least one edge does.

        Args:
            seed: The seed of the `numpy` random generator.
            n_choices: The possible edge counts.
            depth_range: The interval the depths are drawn from.
            width_range: The interval the widths are drawn from.

        Returns:
            A `StarGraph`.
        """
        rng = np.random.default_rng(seed)
        n = int(rng.choice(n_choices))
        has_well = rng.random(n) < 0.5
        if not has_well.any():
            has_well[rng.integers(n)] = True
        edges: List[Any] = []
        for well in has_well:
            depth = float(rng.uniform(*depth_range))
            width = float(rng.uniform(*width_range))
            edges.append(
                SquareWell(depth=depth, width=width) if well else ZeroPotential()
            )
        return cls(edges=edges)

    def moments(self, order: int) -> List[float]:
        """Return the moment of the given order of every edge potential."""
        return [p.moment(order) for p in self.edges]

    @property
    def sup_negative(self) -> float:
        """The largest depth max(0, -inf V_j) over all edges."""
        return max(p.sup_negative() for p in self.edges)

    @property
    def support(self) -> float:
        """The largest truncation point of a compactly supported edge, at least 1."""
        ends = [p.support_end() for p in self.edges]
        finite = [e for e in ends if math.isfinite(e)]
        return max([1.0, *finite])

    @property
    def is_free(self) -> bool:
        return all(p.is_zero for p in self.edges)
