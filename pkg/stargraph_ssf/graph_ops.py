"""Graph-level objects assembled from the Jost data of the edges.

With w_j = theta_j(0, zeta) and theta'_j = theta'_j(0, zeta):

    K(zeta) = sum_j theta'_j / w_j                     (Kirchhoff sum)
    P(zeta) = sum_j theta'_j prod_{k != j} w_k         (pole-free combination)
    D(z)    = P(zeta) / (i n zeta)                     (perturbation determinant)

P = K prod_j w_j wherever K is finite. Every determinant and trace formula is
evaluated through P, so zeros of a single Jost function never produce a pole.
"""

from __future__ import annotations

import cmath
import math
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel

from stargraph_ssf.errors import EigenvalueHit, JostZero, ZeroSpectralParam
from stargraph_ssf.fields import Complex
from stargraph_ssf.jost import (
    JostData,
    SpectralParam,
    jost_boundary_batch,
    jost_solution,
    regular_solution,
)
from stargraph_ssf.logging_config import get_logger
from stargraph_ssf.models import StarGraph
from stargraph_ssf.tolerances import DEFAULTS, Tolerances

logger = get_logger(__name__)

ZLike = Union[complex, float, SpectralParam]

LOG_PATH_POINTS = 200
LOG_PATH_START = 1e4


class GraphBoundaryData(BaseModel, frozen=True):
    """
    Jost data of all edges at one zeta and the quantities built from it.

    Attributes:
        zeta: The spectral parameter.
        edges: The `JostData` of every edge.
        K: The Kirchhoff sum, or None if some Jost function vanishes (a pole).
        P: The pole-free combination.
        prodW: The product of the Jost functions.
        dP: The zeta derivative of P, if zeta derivatives were requested.
    """

    zeta: Complex
    edges: List[JostData]
    K: Optional[Complex] = None
    P: Complex
    prodW: Complex
    dP: Optional[Complex] = None

    @property
    def pole(self) -> bool:
        return self.K is None


class PerturbationDeterminant(BaseModel, frozen=True):
    """
    The perturbation determinant D(z) of the graph operator with respect to the
    free graph.

    Attributes:
        value: D(z).
        zeta: The spectral parameter used.
        form: 'pole_free' for P / (i n zeta), 'product' for K prod w / (i n zeta).
    """

    value: Complex
    zeta: SpectralParam
    form: Literal["pole_free", "product"] = "pole_free"


def as_spectral_param(z: ZLike) -> SpectralParam:
    """Return `z` as a `SpectralParam`, taking the branch with Im zeta >= 0."""
    if isinstance(z, SpectralParam):
        return z
    return SpectralParam.from_z(complex(z))


def zero_threshold(zeta: complex, tol: Tolerances = DEFAULTS) -> float:
    """The value below which |w_j(zeta)| is treated as a zero of the Jost function."""
    return tol.jost_zero * (1.0 + abs(zeta))


def _unique_edges(g: StarGraph) -> Tuple[List[int], List[int]]:
    """Indices of the distinct potentials and, per edge, the index of its twin."""
    keys: Dict[str, int] = {}
    unique: List[int] = []
    owner: List[int] = []
    for j, p in enumerate(g.edges):
        key = p.model_dump_json()
        if key not in keys:
            keys[key] = len(unique)
            unique.append(j)
        owner.append(keys[key])
    return unique, owner


def edge_arrays(
    g: StarGraph,
    zetas: Sequence[complex],
    with_zeta_derivatives: bool = False,
    tol: Tolerances = DEFAULTS,
) -> Dict[str, np.ndarray]:
    """
    Jost boundary data of every edge at every zeta, as arrays of shape (n, q).

    Edges with identical potentials are integrated once.

    Returns:
        A dictionary with keys 'theta', 'dtheta' and, with derivatives,
        'theta_dot' and 'dtheta_dot'.
    """
    zeta_array = np.asarray(zetas, dtype=complex).ravel()
    unique, owner = _unique_edges(g)
    computed = [
        jost_boundary_batch(g.edges[j], zeta_array, with_zeta_derivatives, tol)
        for j in unique
    ]
    shape = (g.n, zeta_array.size)
    arrays = {"theta": np.empty(shape, complex), "dtheta": np.empty(shape, complex)}
    if with_zeta_derivatives:
        arrays["theta_dot"] = np.empty(shape, complex)
        arrays["dtheta_dot"] = np.empty(shape, complex)
    for j, u in enumerate(owner):
        arrays["theta"][j] = [d.theta0 for d in computed[u]]
        arrays["dtheta"][j] = [d.dtheta0_dx for d in computed[u]]
        if with_zeta_derivatives:
            arrays["theta_dot"][j] = [d.dtheta0_dzeta for d in computed[u]]
            arrays["dtheta_dot"][j] = [d.ddtheta0_dxdzeta for d in computed[u]]
    return arrays


def _products_except(theta: np.ndarray) -> np.ndarray:
    """prod_{k != j} theta_k for every j, along axis 0."""
    n = theta.shape[0]
    out = np.empty_like(theta)
    for j in range(n):
        out[j] = np.prod(np.delete(theta, j, axis=0), axis=0)
    return out


def pole_free_arrays(arrays: Dict[str, np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    P and, if the derivative arrays are present, dP/dzeta for every column.
    """
    theta, dtheta = arrays["theta"], arrays["dtheta"]
    n = theta.shape[0]
    others = _products_except(theta)
    P = np.sum(dtheta * others, axis=0)
    if "theta_dot" not in arrays:
        return P, None
    theta_dot, dtheta_dot = arrays["theta_dot"], arrays["dtheta_dot"]
    dP = np.sum(dtheta_dot * others, axis=0)
    for j in range(n):
        for ell in range(n):
            if ell == j:
                continue
            rest = np.delete(theta, [j, ell], axis=0)
            dP = dP + dtheta[j] * theta_dot[ell] * np.prod(rest, axis=0)
    return P, dP


def determinant_at_zeta(
    g: StarGraph, zetas: Sequence[complex], tol: Tolerances = DEFAULTS
) -> np.ndarray:
    """
    D as a function of zeta, P(zeta) / (i n zeta), for many zeta with Im >= 0.
    """
    zeta_array = np.asarray(zetas, dtype=complex).ravel()
    if np.any(zeta_array == 0):
        raise ZeroSpectralParam({"input": "determinant_at_zeta"})
    P, _ = pole_free_arrays(edge_arrays(g, zeta_array, False, tol))
    return P / (1j * g.n * zeta_array)


def boundary_data(
    g: StarGraph,
    sp: SpectralParam,
    with_zeta_derivatives: bool = False,
    tol: Tolerances = DEFAULTS,
) -> GraphBoundaryData:
    """
    Collect the Jost data of all edges at `sp` together with K, P and prod w.

    Args:
        g: The star graph.
        sp: The spectral parameter.
        with_zeta_derivatives: Also compute dP/dzeta.
        tol: The numerical settings.

    Returns:
        A `GraphBoundaryData` object. `K` is None when a Jost function vanishes.
    """
    arrays = edge_arrays(g, [sp.zeta], with_zeta_derivatives, tol)
    P, dP = pole_free_arrays(arrays)
    theta, dtheta = arrays["theta"][:, 0], arrays["dtheta"][:, 0]
    threshold = zero_threshold(sp.zeta, tol)
    K = None
    if np.all(np.abs(theta) >= threshold):
        K = complex(np.sum(dtheta / theta))
    edges = []
    for j in range(g.n):
        data = {
            "zeta": sp.zeta,
            "theta0": complex(theta[j]),
            "dtheta0_dx": complex(dtheta[j]),
        }
        if with_zeta_derivatives:
            data["dtheta0_dzeta"] = complex(arrays["theta_dot"][j, 0])
            data["ddtheta0_dxdzeta"] = complex(arrays["dtheta_dot"][j, 0])
        edges.append(JostData(**data))
    return GraphBoundaryData(
        zeta=sp.zeta,
        edges=edges,
        K=K,
        P=complex(P[0]),
        prodW=complex(np.prod(theta)),
        dP=None if dP is None else complex(dP[0]),
    )


def kirchhoff_sum(g: StarGraph, sp: SpectralParam, tol: Tolerances = DEFAULTS) -> complex:
    """
    Return K(zeta) = sum_j theta'_j(0, zeta) / theta_j(0, zeta).

    Raises:
        JostZero: if some |theta_j(0, zeta)| is below the zero threshold. The
            pole-free combination should be used instead.
    """
    data = boundary_data(g, sp, False, tol)
    threshold = zero_threshold(sp.zeta, tol)
    for j, edge in enumerate(data.edges):
        if abs(edge.theta0) < threshold:
            raise JostZero({"loc": j, "input": abs(edge.theta0), "zeta": sp.zeta})
    assert data.K is not None
    return data.K


def pole_free_P(g: StarGraph, sp: SpectralParam, tol: Tolerances = DEFAULTS) -> complex:
    """Return P(zeta) = sum_j theta'_j(0, zeta) prod_{k != j} theta_k(0, zeta)."""
    return boundary_data(g, sp, False, tol).P


def perturbation_determinant(
    g: StarGraph,
    z: ZLike,
    form: Literal["pole_free", "product"] = "pole_free",
    tol: Tolerances = DEFAULTS,
) -> PerturbationDeterminant:
    """
    Compute D(z) = P(zeta) / (i n zeta).

    Args:
        g: The star graph.
        z: A point off [0, inf), a boundary value lambda > 0 (read as lambda + i0),
            or a `SpectralParam`.
        form: 'product' evaluates K prod w / (i n zeta) instead and fails at
            zeros of the Jost functions.
        tol: The numerical settings.

    Returns:
        A `PerturbationDeterminant`.

    Raises:
        ZeroSpectralParam: if zeta = 0.
        JostZero: for the product form at a zero of some w_j.
    """
    sp = as_spectral_param(z)
    if sp.is_zero:
        raise ZeroSpectralParam({"input": "perturbation_determinant"})
    if form == "product":
        K = kirchhoff_sum(g, sp, tol)
        data = boundary_data(g, sp, False, tol)
        value = K * data.prodW / (1j * g.n * sp.zeta)
    else:
        value = pole_free_P(g, sp, tol) / (1j * g.n * sp.zeta)
    return PerturbationDeterminant(value=value, zeta=sp, form=form)


def _check_eigenvalue(data: GraphBoundaryData, z: complex, tol: Tolerances) -> None:
    terms = sum(
        abs(e.dtheta0_dx) * math.prod(abs(o.theta0) for o in data.edges if o is not e)
        for e in data.edges
    )
    if abs(data.P) < tol.eigenvalue_zero * max(1.0, terms):
        raise EigenvalueHit({"input": z, "value": abs(data.P)})


def trace_resolvent_diff_formula(
    g: StarGraph, z: ZLike, tol: Tolerances = DEFAULTS
) -> complex:
    """
    Return tr(R_0(z) - R(z)) = (1 / 2 zeta) (P_dot / P - 1 / zeta).

    This is the logarithmic z-derivative of D(z), assembled from the exact zeta
    derivatives of the Jost data.

    Raises:
        ZeroSpectralParam: if zeta = 0.
        EigenvalueHit: if P(zeta) vanishes.
    """
    sp = as_spectral_param(z)
    if sp.is_zero:
        raise ZeroSpectralParam({"input": "trace_resolvent_diff_formula"})
    data = boundary_data(g, sp, True, tol)
    _check_eigenvalue(data, sp.z, tol)
    assert data.dP is not None
    zeta = sp.zeta
    return (data.dP / data.P - 1 / zeta) / (2 * zeta)


def edgewise_trace_formula(g: StarGraph, z: ZLike, tol: Tolerances = DEFAULTS) -> complex:
    """
    Return (sum_j w_dot_j / w_j + K_dot / K - 1 / zeta) / (2 zeta), the same trace
    as `trace_resolvent_diff_formula` written with K. Fails at Jost zeros and at
    zeros of K.
    """
    sp = as_spectral_param(z)
    if sp.is_zero:
        raise ZeroSpectralParam({"input": "edgewise_trace_formula"})
    data = boundary_data(g, sp, True, tol)
    threshold = zero_threshold(sp.zeta, tol)
    total = 0j
    K_dot = 0j
    for j, e in enumerate(data.edges):
        if abs(e.theta0) < threshold:
            raise JostZero({"loc": j, "input": abs(e.theta0), "zeta": sp.zeta})
        assert e.dtheta0_dzeta is not None and e.ddtheta0_dxdzeta is not None
        total += e.dtheta0_dzeta / e.theta0
        K_dot += (
            e.ddtheta0_dxdzeta * e.theta0 - e.dtheta0_dx * e.dtheta0_dzeta
        ) / e.theta0**2
    assert data.K is not None
    if abs(data.K) < tol.eigenvalue_zero:
        raise EigenvalueHit({"input": sp.z, "value": abs(data.K)})
    zeta = sp.zeta
    return (total + K_dot / data.K - 1 / zeta) / (2 * zeta)


def log_determinant(g: StarGraph, z: complex, tol: Tolerances = DEFAULTS) -> complex:
    """
    Return ln D(z) on the branch with ln D -> 0 far from the spectrum.

    The argument is continued along the vertical path from z + iR down to z,
    where R is large enough that |D(z + iR) - 1| is below the anchor deviation.
    Points in the lower half-plane use D(conj z) = conj D(z).

    Raises:
        ZeroSpectralParam: if z = 0.
    """
    z = complex(z)
    if z.imag < 0:
        return log_determinant(g, z.conjugate(), tol).conjugate()
    if z == 0:
        raise ZeroSpectralParam({"input": "log_determinant"})
    height = LOG_PATH_START * (1 + abs(z))
    shifts = np.concatenate(
        [height * np.geomspace(1.0, 1e-9 / (1 + abs(z)), LOG_PATH_POINTS), [0.0]]
    )
    values = steps = np.zeros(0, dtype=complex)
    for _ in range(tol.refinement_rounds):
        zetas = [as_spectral_param(z + 1j * s).zeta for s in shifts]
        values = determinant_at_zeta(g, zetas, tol)
        steps = np.angle(values[1:] / values[:-1])
        if np.all(np.abs(steps) < tol.unwrap_limit):
            start = cmath.log(values[0])
            return complex(np.log(abs(values[-1])), start.imag + float(np.sum(steps)))
        bad = np.flatnonzero(np.abs(steps) >= tol.unwrap_limit)
        midpoints = 0.5 * (shifts[bad] + shifts[bad + 1])
        shifts = np.sort(np.concatenate([shifts, midpoints]))[::-1]
    logger.warning(f"log_determinant: path to z={z} still jumps after refinement")
    start = cmath.log(values[0])
    return complex(np.log(abs(values[-1])), start.imag + float(np.sum(steps)))


def _kernel_pieces(
    g: StarGraph, sp: SpectralParam, j: int, xs: np.ndarray, tol: Tolerances
) -> Tuple[np.ndarray, np.ndarray]:
    jost = jost_solution(g.edges[j], sp, xs, tol)
    regular = regular_solution(g.edges[j], sp, xs, tol)
    return jost.theta, regular.phi


def krein_kernel(
    g: StarGraph,
    z: ZLike,
    j: int,
    x: Union[float, Sequence[float]],
    ell: int,
    y: Union[float, Sequence[float]],
    tol: Tolerances = DEFAULTS,
) -> Union[complex, np.ndarray]:
    """
    Evaluate the resolvent kernel R_{j, ell}(x, y; z) of the graph operator:

        delta_{j ell} phi_j(min(x, y)) theta_j(max(x, y)) / w_j
            - theta_j(x) theta_ell(y) / (K w_j w_ell)

    `x` and `y` broadcast against each other.

    Raises:
        JostZero: if w_j or w_ell vanishes.
        EigenvalueHit: if K vanishes.
    """
    sp = as_spectral_param(z)
    data = boundary_data(g, sp, False, tol)
    threshold = zero_threshold(sp.zeta, tol)
    for edge in {j, ell}:
        w = data.edges[edge].theta0
        if abs(w) < threshold:
            raise JostZero({"loc": edge, "input": abs(w), "zeta": sp.zeta})
    assert data.K is not None
    if abs(data.K) < tol.eigenvalue_zero:
        raise EigenvalueHit({"input": sp.z, "value": abs(data.K)})
    xa, ya = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    w_j = data.edges[j].theta0
    w_ell = data.edges[ell].theta0
    theta_x, _ = _kernel_pieces(g, sp, j, xa.ravel(), tol)
    theta_y, _ = _kernel_pieces(g, sp, ell, ya.ravel(), tol)
    kernel = -theta_x * theta_y / (data.K * w_j * w_ell)
    if j == ell:
        low = np.minimum(xa, ya).ravel()
        high = np.maximum(xa, ya).ravel()
        _, phi_low = _kernel_pieces(g, sp, j, low, tol)
        theta_high, _ = _kernel_pieces(g, sp, j, high, tol)
        kernel = kernel + phi_low * theta_high / w_j
    kernel = kernel.reshape(xa.shape)
    return complex(kernel) if kernel.ndim == 0 else kernel


def gauss_panels(
    end: float, breaks: Sequence[float], width: float, points: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, end], with panels split at `breaks`."""
    cuts = {0.0, end, *(b for b in breaks if 0 < b < end)}
    cuts.update(np.arange(width, end, width).tolist())
    edges = np.array(sorted(cuts))
    nodes, weights = leggauss(points)
    lo, hi = edges[:-1, None], edges[1:, None]
    xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[None, :]
    ws = 0.5 * (hi - lo) * weights[None, :]
    return xs.ravel(), ws.ravel()


def krein_trace(
    g: StarGraph,
    z: ZLike,
    L: float = 20.0,
    points: int = 16,
    tol: Tolerances = DEFAULTS,
) -> complex:
    """
    Return tr(R(z) - R_0(z)) by quadrature of the diagonal of the Krein kernels
    over [0, L] on every edge.

    The diagonal of the free kernel is sin(zeta x) e^{i zeta x} / zeta -
    e^{2 i zeta x} / (n i zeta). The difference decays like e^{-2 Im zeta x}
    beyond the supports, so `L` must be large compared with 1 / Im zeta.
    """
    sp = as_spectral_param(z)
    zeta = sp.zeta
    if sp.is_zero:
        raise ZeroSpectralParam({"input": "krein_trace"})
    data = boundary_data(g, sp, False, tol)
    if data.K is None:
        raise JostZero(
            {"loc": "K", "input": min(abs(e.theta0) for e in data.edges), "zeta": zeta}
        )
    total = 0j
    for j, p in enumerate(g.edges):
        xs, ws = gauss_panels(L, p.breakpoints(), 1.0, points)
        theta, phi = _kernel_pieces(g, sp, j, xs, tol)
        w = data.edges[j].theta0
        diagonal = phi * theta / w - theta**2 / (data.K * w**2)
        free = np.sin(zeta * xs) * np.exp(1j * zeta * xs) / zeta - np.exp(
            2j * zeta * xs
        ) / (g.n * 1j * zeta)
        total += complex(np.sum(ws * (diagonal - free)))
    return total
