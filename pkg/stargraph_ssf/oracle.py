"""An independent finite-difference model of the star graph operator.

Every edge is cut at x = L with a Dirichlet condition and discretized with the
nodes x_i = i h. The quadratic form

    sum_j [ sum_i (u_{j,i+1} - u_{j,i})**2 / h + trapezoid(V_j u_j**2) ]

with one shared vertex value u_0 and the trapezoid mass (vertex mass n h / 2,
other nodes h) gives a stiffness matrix A and a diagonal mass B. The operator is
the symmetric matrix S = B**-1/2 A B**-1/2:

    edge rows      2 / h**2 + V_{j,i} on the diagonal, -1 / h**2 off it
    vertex row     2 / h**2 + mean_j V_j(0) on the diagonal,
                   -sqrt(2 / n) / h**2 towards the first node of every edge

The Kirchhoff condition is the natural boundary condition of the form, so S is
exactly symmetric. Potentials enter as cell averages. The half-line variant has a
single edge and a Dirichlet vertex.

Because S is a star of tridiagonal chains, an LDL^T elimination that runs from
the far end of every edge towards the vertex gives the pivots of S - z in O(size).
The pivots yield the inertia (the number of eigenvalues below a real z), ln det
(S - z) and, through their z-derivatives, tr (S - z)**-1.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from numpy.linalg import slogdet
from pydantic import BaseModel
from scipy.linalg import eigh, eigvalsh
from scipy.sparse.linalg import eigsh, splu

from stargraph_ssf.errors import (
    DimensionOverflow,
    NotConverged,
    SingularShift,
    TrustRegionExceeded,
)
from stargraph_ssf.fields import Complex, RealArray
from stargraph_ssf.graph_ops import as_spectral_param, boundary_data, gauss_panels
from stargraph_ssf.jost import jost_solution
from stargraph_ssf.logging_config import get_logger
from stargraph_ssf.models import StarGraph
from stargraph_ssf.potentials import EdgePotential, ZeroPotential
from stargraph_ssf.tolerances import DEFAULTS, Tolerances

logger = get_logger(__name__)

PIVOT_FLOOR = 1e-300
DENSE_EIGEN_LIMIT = 600
BIRMAN_SCHWINGER_LIMIT = 4000
TRUST_LIMIT = 0.1
DEFAULT_LEVELS = ((30.0, 0.02), (40.0, 0.01))
MAX_REFINEMENTS = 2


class DiscretizedGraph(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """
    The discretized operator S on the truncated star graph.

    Unknowns are ordered as the vertex value (absent for a Dirichlet vertex)
    followed by the nodes of edge 0, edge 1, ... from x = h to x = L - h.

    Attributes:
        L: The truncation length of every edge.
        h: The grid spacing.
        n: The number of edges.
        dirichlet_vertex: True for the half-line variant.
        edge_potential: Cell averages of V_j at the interior nodes, shape
            (n, nodes).
        vertex_potential: mean_j of the half-cell averages of V_j at x = 0.
    """

    L: float
    h: float
    n: int
    dirichlet_vertex: bool = False
    edge_potential: RealArray
    vertex_potential: float = 0.0

    @property
    def nodes(self) -> int:
        """Interior nodes per edge."""
        return int(self.edge_potential.shape[1])

    @property
    def size(self) -> int:
        return self.n * self.nodes + (0 if self.dirichlet_vertex else 1)

    @property
    def coupling(self) -> float:
        """The off-diagonal entry between the vertex and the first node of an edge."""
        return -math.sqrt(2.0 / self.n) / self.h**2

    @property
    def potential(self) -> np.ndarray:
        """The diagonal potential of S in the unknown ordering."""
        head = [] if self.dirichlet_vertex else [self.vertex_potential]
        return np.concatenate([head, self.edge_potential.ravel()])

    @property
    def matrix(self) -> sp.csr_matrix:
        """S as a sparse symmetric matrix."""
        inv_h2 = 1.0 / self.h**2
        offset = 0 if self.dirichlet_vertex else 1
        diagonal = 2 * inv_h2 + self.potential
        rows: List[int] = []
        cols: List[int] = []
        vals: List[float] = []
        for j in range(self.n):
            start = offset + j * self.nodes
            idx = np.arange(start, start + self.nodes - 1)
            rows += idx.tolist() + (idx + 1).tolist()
            cols += (idx + 1).tolist() + idx.tolist()
            vals += [-inv_h2] * (2 * idx.size)
            if not self.dirichlet_vertex:
                rows += [0, start]
                cols += [start, 0]
                vals += [self.coupling, self.coupling]
        off = sp.coo_matrix((vals, (rows, cols)), shape=(self.size, self.size))
        return (sp.diags(diagonal) + off).tocsr()

    def free(self) -> DiscretizedGraph:
        """The same discretization with V = 0."""
        return self.model_copy(
            update={
                "edge_potential": np.zeros_like(self.edge_potential),
                "vertex_potential": 0.0,
            }
        )

    def scale(self) -> float:
        return 1.0 + float(np.max(np.abs(self.potential), initial=0.0))


class Pivots(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """The LDL^T pivots of S - z and their z-derivatives."""

    z: Complex
    values: np.ndarray
    derivatives: np.ndarray

    @property
    def log_det(self) -> complex:
        return complex(np.sum(np.log(self.values.astype(complex))))

    @property
    def trace_resolvent(self) -> complex:
        """tr (S - z)**-1 = -d/dz ln det (S - z)."""
        return complex(-np.sum(self.derivatives / self.values))

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.values.real < 0))


class OracleEigencount(BaseModel, frozen=True):
    """
    Negative eigenvalues of the discretized operator.

    Attributes:
        N: The number of eigenvalues below -delta.
        values: The eigenvalues below -delta, increasing.
        delta: The cut separating bound states from discretization noise.
        levels: The (L, h) pairs used, refinements included; the last two agree.
    """

    N: int
    values: List[float]
    delta: float
    levels: List[Tuple[float, float]]


class StochasticTrace(BaseModel, frozen=True):
    """A Hutchinson estimate of a trace with its standard error."""

    mean: Complex
    stderr: float
    probes: int


class DecayFit(BaseModel, frozen=True):
    """
    A log-log fit of the trace norm of R(-t) - R_0(-t) against t.

    Attributes:
        t: The sample points.
        norms: The trace norms.
        slope: The fitted exponent, None for the exact-zero case.
        exact_zero: True if every difference vanishes.
    """

    t: List[float]
    norms: List[float]
    slope: Optional[float] = None
    exact_zero: bool = False


def _check_budget(size: int, tol: Tolerances) -> None:
    if size > tol.oracle_max_unknowns:
        raise DimensionOverflow({"input": size, "limit": tol.oracle_max_unknowns})


def _edge_grid(L: float, h: float) -> np.ndarray:
    steps = int(round(L / h))
    if steps < 2:
        raise ValueError(f"L={L} must exceed 2h={2 * h}")
    return h * np.arange(1, steps)


def discretize(
    g: StarGraph, L: float, h: float, tol: Tolerances = DEFAULTS
) -> DiscretizedGraph:
    """
    Discretize the star graph operator on [0, L] per edge with spacing h.

    Args:
        g: The star graph.
        L: The truncation length.
        h: The grid spacing.
        tol: The numerical settings.

    Returns:
        A `DiscretizedGraph`.

    Raises:
        DimensionOverflow: if the number of unknowns exceeds the budget.
    """
    xs = _edge_grid(L, h)
    _check_budget(g.n * xs.size + 1, tol)
    if L < 4 * g.support or h > L / 200:
        logger.warning(f"coarse discretization L={L}, h={h} for support {g.support}")
    edge_potential = np.array([p.cell_average(xs, h) for p in g.edges])
    vertex = float(np.mean([p.cell_average(np.array([0.0]), h)[0] for p in g.edges]))
    return DiscretizedGraph(
        L=L, h=h, n=g.n, edge_potential=edge_potential, vertex_potential=vertex
    )


def discretize_half_line(
    p: EdgePotential, L: float, h: float, tol: Tolerances = DEFAULTS
) -> DiscretizedGraph:
    """Discretize -u'' + V u on [0, L] with Dirichlet conditions at both ends."""
    xs = _edge_grid(L, h)
    _check_budget(xs.size, tol)
    return DiscretizedGraph(
        L=L,
        h=h,
        n=1,
        dirichlet_vertex=True,
        edge_potential=p.cell_average(xs, h)[None, :],
    )


def pivots(d: DiscretizedGraph, z: complex) -> Pivots:
    """
    Return the LDL^T pivots of S - z with their z-derivatives.

    The chains are eliminated from x = L - h inwards:

        d_last = a_last - z,    d_i = a_i - z - b**2 / d_{i+1}
        d'_last = -1,           d'_i = -1 + b**2 d'_{i+1} / d_{i+1}**2

    followed by the vertex Schur complement with the coupling c.

    Raises:
        SingularShift: if a pivot vanishes.
    """
    z = complex(z)
    dtype = complex if z.imag != 0 else float
    shift = z if z.imag != 0 else z.real
    b2 = 1.0 / d.h**4
    diagonal = 2.0 / d.h**2 + d.edge_potential
    values = np.empty((d.n, d.nodes), dtype=dtype)
    derivatives = np.empty((d.n, d.nodes), dtype=dtype)
    values[:, -1] = diagonal[:, -1] - shift
    derivatives[:, -1] = -1.0
    for i in range(d.nodes - 2, -1, -1):
        previous = values[:, i + 1]
        values[:, i] = diagonal[:, i] - shift - b2 / previous
        derivatives[:, i] = -1.0 + b2 * derivatives[:, i + 1] / previous**2
    all_values = values.ravel()
    all_derivatives = derivatives.ravel()
    if not d.dirichlet_vertex:
        c2 = d.coupling**2
        first, first_derivative = values[:, 0], derivatives[:, 0]
        vertex = 2.0 / d.h**2 + d.vertex_potential - shift - np.sum(c2 / first)
        vertex_derivative = -1.0 + np.sum(c2 * first_derivative / first**2)
        all_values = np.append(all_values, vertex)
        all_derivatives = np.append(all_derivatives, vertex_derivative)
    if np.min(np.abs(all_values)) < PIVOT_FLOOR * d.scale() or not np.all(
        np.isfinite(all_values)
    ):
        raise SingularShift({"input": z})
    return Pivots(z=z, values=all_values, derivatives=all_derivatives)


def count_below(d: DiscretizedGraph, z: float) -> int:
    """The number of eigenvalues of S below the real number z."""
    return pivots(d, z).negative_count


def trace_resolvent(d: DiscretizedGraph, z: complex) -> complex:
    """tr (S - z)**-1."""
    return pivots(d, z).trace_resolvent


def oracle_log_determinant(d: DiscretizedGraph, d0: DiscretizedGraph, z: complex) -> complex:
    """ln det(S - z) - ln det(S_0 - z), summed pivot by pivot."""
    return pivots(d, z).log_det - pivots(d0, z).log_det


def delta_cut(d: DiscretizedGraph) -> float:
    """The cut 10 h**2 scale below which eigenvalues count as bound states."""
    return 10 * d.h**2 * d.scale()


def oracle_eigenvalues(d: DiscretizedGraph, count: Optional[int] = None) -> List[float]:
    """
    Return the eigenvalues of S below -delta, computed by shift-invert Lanczos
    around a shift below the spectrum (dense for small matrices).
    """
    delta = delta_cut(d)
    count = count_below(d, -delta) if count is None else count
    if count == 0:
        return []
    matrix = d.matrix
    if d.size <= DENSE_EIGEN_LIMIT:
        values = eigvalsh(matrix.toarray())
    else:
        sigma = float(np.min(d.potential)) - 1.0
        values = eigsh(matrix, k=count, sigma=sigma, which="LM", return_eigenvectors=False)
    values = np.sort(values)
    return [float(v) for v in values[values < -delta]][:count]


def oracle_eigencount(
    g: StarGraph,
    levels: Sequence[Tuple[float, float]] = DEFAULT_LEVELS,
    tol: Tolerances = DEFAULTS,
    max_refinements: int = MAX_REFINEMENTS,
) -> OracleEigencount:
    """
    Count the negative eigenvalues of the discretized operator at every level.

    The cut delta shrinks with h**2, so a shallow bound state can sit below
    the cut of a coarse level. While the two finest levels disagree a level
    with h halved and L extended by a quarter is appended, at most
    `max_refinements` times.

    Returns:
        An `OracleEigencount` with the eigenvalues of the finest level and
        every level used, refinements included.

    Raises:
        NotConverged: if the two finest levels still disagree.
    """
    used = [(float(L), float(h)) for L, h in levels]
    counts = []
    finest: Optional[DiscretizedGraph] = None
    for L, h in used:
        finest = discretize(g, L, h, tol)
        counts.append(count_below(finest, -delta_cut(finest)))
    refinements = 0
    while len(counts) > 1 and counts[-1] != counts[-2] and refinements < max_refinements:
        L, h = used[-1]
        used.append((1.25 * L, h / 2))
        logger.info(f"oracle counts {counts} disagree, refining to {used[-1]}")
        finest = discretize(g, *used[-1], tol)
        counts.append(count_below(finest, -delta_cut(finest)))
        refinements += 1
    if len(counts) > 1 and counts[-1] != counts[-2]:
        raise NotConverged({"input": counts, "levels": used})
    assert finest is not None
    return OracleEigencount(
        N=counts[-1],
        values=oracle_eigenvalues(finest, counts[-1]),
        delta=delta_cut(finest),
        levels=used,
    )


def richardson(coarse: complex, fine: complex, order: int = 2, ratio: float = 2.0) -> complex:
    """Extrapolate two values computed with step h and h / ratio to h = 0."""
    return fine + (fine - coarse) / (ratio**order - 1)


def oracle_trace_resolvent_diff(
    d: DiscretizedGraph,
    d0: DiscretizedGraph,
    z: complex,
    tol: Tolerances = DEFAULTS,
    seed: int = 0,
) -> complex:
    """
    Return tr((S_0 - z)**-1 - (S - z)**-1).

    Uses the pivot recursion; above `tol.stochastic_threshold` unknowns the
    Hutchinson estimator is used instead, with probes drawn from `seed`.

    Raises:
        SingularShift: if z is an eigenvalue of either matrix.
    """
    if d.size > tol.stochastic_threshold:
        estimate = stochastic_trace(d, d0, z, tol.stochastic_probes, seed)
        logger.debug(f"stochastic trace {estimate.mean} +- {estimate.stderr:.2g}")
        return estimate.mean
    return trace_resolvent(d0, z) - trace_resolvent(d, z)


def stochastic_trace(
    d: DiscretizedGraph,
    d0: DiscretizedGraph,
    z: complex,
    probes: int = 64,
    seed: int = 0,
) -> StochasticTrace:
    """
    Estimate tr((S_0 - z)**-1 - (S - z)**-1) with Rademacher probes.

    Raises:
        SingularShift: if a factorization fails.
    """
    rng = np.random.default_rng(seed)
    identity = sp.identity(d.size, format="csc")
    try:
        lu = splu((d.matrix.tocsc() - complex(z) * identity).astype(complex))
        lu0 = splu((d0.matrix.tocsc() - complex(z) * identity).astype(complex))
    except RuntimeError as exc:
        raise SingularShift({"input": z}) from exc
    samples = np.empty(probes, dtype=complex)
    for i in range(probes):
        v = rng.choice([-1.0, 1.0], size=d.size).astype(complex)
        samples[i] = v @ (lu0.solve(v) - lu.solve(v))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(probes)) if probes > 1 else math.inf
    return StochasticTrace(mean=complex(samples.mean()), stderr=stderr, probes=probes)


def oracle_determinant(
    d0: DiscretizedGraph, d: DiscretizedGraph, z: complex
) -> complex:
    """
    Return det(I + V**1/2 (S_0 - z)**-1 |V|**1/2) restricted to the unknowns
    where V != 0, with V**1/2 = sign(V) |V|**1/2.

    Larger supports fall back to the pivot ratio det(S - z) / det(S_0 - z), which
    equals the same determinant.

    Raises:
        SingularShift: if z is an eigenvalue of S_0.
    """
    potential = d.potential
    support = np.flatnonzero(potential)
    if support.size == 0:
        return 1.0 + 0j
    if support.size > BIRMAN_SCHWINGER_LIMIT:
        return complex(np.exp(oracle_log_determinant(d, d0, z)))
    identity = sp.identity(d0.size, format="csc")
    try:
        lu = splu((d0.matrix.tocsc() - complex(z) * identity).astype(complex))
    except RuntimeError as exc:
        raise SingularShift({"input": z}) from exc
    rhs = np.zeros((d0.size, support.size), dtype=complex)
    rhs[support, np.arange(support.size)] = 1.0
    block = lu.solve(rhs)[support, :]
    v = potential[support]
    root = np.sign(v) * np.sqrt(np.abs(v))
    kernel = root[:, None] * block * np.sqrt(np.abs(v))[None, :]
    sign, logdet = slogdet(np.eye(support.size) + kernel)
    return complex(sign * np.exp(logdet))


def rank2_trace_norm(
    f: Sequence[complex], g: Sequence[complex], weights: Optional[Sequence[float]] = None
) -> float:
    """
    Return the trace norm of f <f, .> - g <g, .>:

        sqrt((|f|**2 + |g|**2)**2 - 4 |(f, g)|**2)

    Args:
        f: A grid function.
        g: A grid function on the same grid.
        weights: Quadrature weights of the inner product, 1 by default.
    """
    fv, gv = _weighted(f, g, weights)
    nf, ng = np.vdot(fv, fv).real, np.vdot(gv, gv).real
    overlap = abs(np.vdot(fv, gv))
    return float(math.sqrt(max((nf + ng) ** 2 - 4 * overlap**2, 0.0)))


def _weighted(
    f: Sequence[complex], g: Sequence[complex], weights: Optional[Sequence[float]]
) -> Tuple[np.ndarray, np.ndarray]:
    fv = np.asarray(f, dtype=complex).ravel()
    gv = np.asarray(g, dtype=complex).ravel()
    if weights is not None:
        root = np.sqrt(np.asarray(weights, dtype=float).ravel())
        fv, gv = fv * root, gv * root
    return fv, gv


def rank2_gram_matrix(
    f: Sequence[complex], g: Sequence[complex], weights: Optional[Sequence[float]] = None
) -> np.ndarray:
    """
    Return the 2x2 matrix of f <f, .> - g <g, .> in an orthonormal basis of
    span{f, g} obtained by Gram-Schmidt.
    """
    fv, gv = _weighted(f, g, weights)
    first = fv if np.linalg.norm(fv) > 0 else gv
    if np.linalg.norm(first) == 0:
        return np.zeros((2, 2), dtype=complex)
    e1 = first / np.linalg.norm(first)
    rest = gv - np.vdot(e1, gv) * e1
    if np.linalg.norm(rest) == 0:
        rest = fv - np.vdot(e1, fv) * e1
    e2 = rest / np.linalg.norm(rest) if np.linalg.norm(rest) > 0 else np.zeros_like(e1)
    fc = np.array([np.vdot(e1, fv), np.vdot(e2, fv)])
    gc = np.array([np.vdot(e1, gv), np.vdot(e2, gv)])
    return np.outer(fc, fc.conj()) - np.outer(gc, gc.conj())


def rank2_singular_sum(
    f: Sequence[complex], g: Sequence[complex], weights: Optional[Sequence[float]] = None
) -> float:
    """The sum of the singular values of `rank2_gram_matrix`."""
    matrix = rank2_gram_matrix(f, g, weights)
    return float(np.sum(np.linalg.svd(matrix, compute_uv=False)))


def _dense_resolvent(d: DiscretizedGraph, t: float) -> np.ndarray:
    values, vectors = eigh(d.matrix.toarray())
    return (vectors / (values + t)) @ vectors.T


def trace_norm_decay(
    d: DiscretizedGraph, d0: DiscretizedGraph, t_list: Sequence[float]
) -> DecayFit:
    """
    Fit the decay of the trace norm of R(-t) - R_0(-t) on the dense matrices.

    Raises:
        TrustRegionExceeded: if sqrt(t) h >= 0.1 for some t.
    """
    for t in t_list:
        value = math.sqrt(t) * d.h
        if value >= TRUST_LIMIT:
            raise TrustRegionExceeded({"input": t, "value": value, "limit": TRUST_LIMIT})
    if not np.any(d.potential):
        return DecayFit(t=list(t_list), norms=[0.0] * len(t_list), exact_zero=True)
    values, vectors = eigh(d.matrix.toarray())
    values0, vectors0 = eigh(d0.matrix.toarray())
    norms = []
    for t in t_list:
        resolvent = (vectors / (values + t)) @ vectors.T
        resolvent0 = (vectors0 / (values0 + t)) @ vectors0.T
        norms.append(float(np.sum(np.abs(eigvalsh(resolvent - resolvent0)))))
    slope, _ = np.polyfit(np.log(t_list), np.log(norms), 1)
    logger.debug(f"trace norm decay slope {slope:.3f} at h={d.h}")
    return DecayFit(t=list(t_list), norms=norms, slope=float(slope))


def krein_rank2_norm(
    g: StarGraph,
    t: float,
    L: float = 4.0,
    points: int = 16,
    tol: Tolerances = DEFAULTS,
) -> float:
    """
    Return the trace norm of the rank-two part of R(-t) - R_0(-t) in the Krein
    formula, g_k g_k^T - f_k f_k^T with

        f_k = exp(-sqrt(t) x) / (sqrt(n) t**(1/4)),
        g_k = theta_k(x, i sqrt(t)) / (sqrt(-K) theta_k(0, i sqrt(t))),

    computed from the Gram matrix on Gauss-Legendre nodes of [0, L] per edge.
    """
    spectral = as_spectral_param(-t)
    data = boundary_data(g, spectral, False, tol)
    if data.K is None:
        raise ValueError(f"Jost function vanishes at z={-t}")
    root_minus_k = np.sqrt(-complex(data.K))
    width = min(1.0, 2.0 / math.sqrt(t))
    f_parts, g_parts, w_parts = [], [], []
    for k, p in enumerate(g.edges):
        xs, ws = gauss_panels(L, p.breakpoints(), width, points)
        theta = jost_solution(p, spectral, xs, tol).theta
        f_parts.append(np.exp(-math.sqrt(t) * xs) / (math.sqrt(g.n) * t**0.25))
        g_parts.append(theta / (root_minus_k * data.edges[k].theta0))
        w_parts.append(ws)
    return rank2_singular_sum(
        np.concatenate(g_parts), np.concatenate(f_parts), np.concatenate(w_parts)
    )


def free_half_line(L: float, h: float, tol: Tolerances = DEFAULTS) -> DiscretizedGraph:
    """The discretized free half-line."""
    return discretize_half_line(ZeroPotential(), L, h, tol)
