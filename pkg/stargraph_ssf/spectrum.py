"""Bound states and the zero-energy resonance of a star graph.

Negative eigenvalues -kappa**2 of the graph operator are the zeros of the real
function kappa -> D(-kappa**2). The zero-energy behaviour is classified from the
Jost data at zeta = 0:

    M = #{j : w_j(0) = 0}

    M = 0, K(0) != 0   no resonance, m = 0
    M = 0, K(0) = 0    resonance with m = 1, u_j = theta_j(x, 0) / theta_j(0, 0)
    M = 1              K has a pole, no resonance, m = 0
    M >= 2             m = M - 1; resonance functions vanish at the vertex and
                       live on the edges with w_j(0) = 0
"""

from __future__ import annotations

import math
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, model_validator
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar

from stargraph_ssf.errors import GridTooCoarse, IllConditioned
from stargraph_ssf.graph_ops import determinant_at_zeta, edge_arrays
from stargraph_ssf.jost import SpectralParam, jost_solution
from stargraph_ssf.logging_config import get_logger
from stargraph_ssf.models import StarGraph
from stargraph_ssf.tolerances import DEFAULTS, Tolerances

logger = get_logger(__name__)

CELL_SUBSAMPLES = 8
MAX_DOUBLINGS = 20
DOUBLE_ZERO_TOL = 1e-8

ResonanceCase = Literal["nonresonant", "kirchhoff_zero", "pole", "vanishing_edges"]


class BoundStateList(BaseModel, frozen=True):
    """
    The zeros kappa > 0 of D(-kappa**2), each counted with its order.

    Attributes:
        kappas: Sorted zeros; a double zero appears twice.
        refinement_tol: The tolerance of the root refinement in kappa.
        kappa_max: The upper end of the searched interval.
        double_zeros: The zeros detected as double zeros.
    """

    kappas: List[float]
    refinement_tol: float
    kappa_max: float
    double_zeros: List[float] = []

    @property
    def N(self) -> int:
        return len(self.kappas)

    @property
    def eigenvalues(self) -> List[float]:
        """The eigenvalues -kappa**2 in increasing order."""
        return sorted(-k * k for k in self.kappas)


class ResonanceReport(BaseModel, frozen=True):
    """
    The zero-energy classification of a star graph.

    Attributes:
        M: The number of edges whose Jost function vanishes at zero energy.
        m: The multiplicity of the resonance, 0 if there is none.
        case: The branch of the classification that applies.
        K0: The Kirchhoff sum at zero energy, None when it has a pole.
        coefficients: m linearly independent vectors (c_1, ..., c_n); the
            resonance function is c_j theta_j(x, 0) on edge j.
        w0: The Jost functions w_j(0).
        dtheta0: The derivatives theta'_j(0, 0).
        tolerance_used: The zero threshold before the per-edge scale.
        kirchhoff_residual: max |sum_j c_j theta'_j(0, 0)|.
        continuity_residual: max spread of c_j theta_j(0, 0) over the edges.
    """

    M: int
    m: int
    case: ResonanceCase
    K0: Optional[float] = None
    coefficients: List[List[float]] = []
    w0: List[float]
    dtheta0: List[float]
    tolerance_used: float
    kirchhoff_residual: float = 0.0
    continuity_residual: float = 0.0

    @property
    def pole(self) -> bool:
        return self.K0 is None

    @model_validator(mode="after")
    def check_case(self) -> ResonanceReport:
        expected = {
            "nonresonant": (self.M == 0 and self.m == 0),
            "kirchhoff_zero": (self.M == 0 and self.m == 1),
            "pole": (self.M == 1 and self.m == 0 and self.K0 is None),
            "vanishing_edges": (self.M >= 2 and self.m == self.M - 1),
        }
        if not expected[self.case]:
            raise ValueError(f"inconsistent classification M={self.M}, m={self.m}")
        if len(self.coefficients) != self.m:
            raise ValueError("one coefficient vector per resonance function")
        return self


class ZeroEnergyWitness(BaseModel, frozen=True):
    """
    Evidence that zero is not an eigenvalue: every bounded zero-energy solution
    tends to a nonzero constant on some edge.

    Attributes:
        holds: True if every resonance function has a nonzero limit.
        limits: For each resonance function, max_j |c_j theta_j(X_j, 0)|.
        m: The multiplicity of the resonance.
    """

    holds: bool
    limits: List[float]
    m: int


def bargmann_bound(g: StarGraph) -> float:
    """Return sum_j moment(p_j, 1), an upper bound for the number of bound states."""
    return float(sum(g.moments(1)))


def _negative_axis(g: StarGraph, kappas: np.ndarray, tol: Tolerances) -> np.ndarray:
    return determinant_at_zeta(g, 1j * np.asarray(kappas, float), tol).real


def _kappa_max(g: StarGraph, tol: Tolerances) -> float:
    kappa_max = math.sqrt(g.sup_negative) + 1.0
    for _ in range(MAX_DOUBLINGS):
        if abs(_negative_axis(g, np.array([kappa_max]), tol)[0] - 1) < 0.5:
            return kappa_max
        kappa_max *= 2
    return kappa_max


def _sign_changes(values: np.ndarray) -> np.ndarray:
    signs = np.sign(values)
    return np.flatnonzero(signs[:-1] * signs[1:] < 0)


def count_negative_eigenvalues(
    g: StarGraph,
    kappa_max: Optional[float] = None,
    grid: Optional[int] = None,
    tol: Tolerances = DEFAULTS,
) -> BoundStateList:
    """
    Find the negative eigenvalues of the graph operator as zeros of D(-kappa**2).

    The real function kappa -> D(-kappa**2) is sampled on `grid` log-spaced
    points of [kappa_min, kappa_max]. Every sign change is refined with Brent's
    method. Cells whose subsamples show more than one sign change raise
    `GridTooCoarse`; local minima of |D| without a sign change are examined for
    double zeros.

    Args:
        g: The star graph.
        kappa_max: The upper end of the search; by default sqrt(max depth) + 1,
            doubled until |D - 1| < 1/2.
        grid: The number of grid points; `tol.kappa_grid` by default.
        tol: The numerical settings.

    Returns:
        A `BoundStateList`.
    """
    if g.is_free:
        return BoundStateList(kappas=[], refinement_tol=tol.kappa_refine, kappa_max=1.0)
    kappa_max = kappa_max or _kappa_max(g, tol)
    kappas = np.geomspace(tol.kappa_min, kappa_max, grid or tol.kappa_grid)
    values = _negative_axis(g, kappas, tol)

    def f(kappa: float) -> float:
        return float(_negative_axis(g, np.array([kappa]), tol)[0])

    roots: List[float] = []
    for i in _sign_changes(values):
        cell = np.linspace(kappas[i], kappas[i + 1], CELL_SUBSAMPLES + 1)
        changes = _sign_changes(_negative_axis(g, cell, tol)).size
        if changes > 1:
            raise GridTooCoarse(
                {"input": (float(kappas[i]), float(kappas[i + 1])), "changes": changes}
            )
        roots.append(brentq(f, kappas[i], kappas[i + 1], xtol=tol.kappa_refine))

    simple, doubles = _double_zeros(f, kappas, values, roots, tol)
    roots.extend(simple)
    for kappa in doubles:
        roots.extend([kappa, kappa])
    roots.sort()
    logger.debug(f"{len(roots)} bound states below kappa_max={kappa_max:.3g}")
    bound = bargmann_bound(g)
    if len(roots) > bound:
        logger.warning(f"N={len(roots)} exceeds the Bargmann bound {bound:.3g}")
    return BoundStateList(
        kappas=[float(k) for k in roots],
        refinement_tol=tol.kappa_refine,
        kappa_max=float(kappa_max),
        double_zeros=[float(k) for k in doubles],
    )


def _double_zeros(
    f: Callable[[float], float],
    kappas: np.ndarray,
    values: np.ndarray,
    roots: List[float],
    tol: Tolerances,
) -> Tuple[List[float], List[float]]:
    """
    Examine the local minima of |D| without a sign change. A minimum that dips
    through zero hides two simple zeros; one that only touches zero is a double
    zero.

    Returns:
        A tuple of the extra simple zeros and the double zeros.
    """
    simple: List[float] = []
    doubles: List[float] = []
    magnitude = np.abs(values)
    for i in range(1, values.size - 1):
        if not (magnitude[i] < magnitude[i - 1] and magnitude[i] < magnitude[i + 1]):
            continue
        if np.sign(values[i - 1]) != np.sign(values[i + 1]):
            continue
        if any(kappas[i - 1] <= r <= kappas[i + 1] for r in roots):
            continue
        lo, hi = kappas[i - 1], kappas[i + 1]
        coeffs = np.polyfit(kappas[i - 1 : i + 2], values[i - 1 : i + 2], 2)
        vertex = -coeffs[1] / (2 * coeffs[0]) if coeffs[0] != 0 else kappas[i]
        if np.polyval(coeffs, vertex) * values[i] > 0 and magnitude[i] > 1e-3:
            continue
        sign = float(np.sign(values[i]))
        result = minimize_scalar(
            lambda k: sign * f(k),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": tol.kappa_refine},
        )
        lowest = float(result.x)
        if sign * result.fun < 0:
            simple.append(brentq(f, lo, lowest, xtol=tol.kappa_refine))
            simple.append(brentq(f, lowest, hi, xtol=tol.kappa_refine))
        elif abs(result.fun) < DOUBLE_ZERO_TOL:
            logger.warning(f"double zero of D(-kappa^2) at kappa={lowest:.6g}")
            doubles.append(lowest)
    return simple, doubles


def _ill_conditioned(loc: object, value: float, threshold: float) -> bool:
    if threshold / 10 <= value < 10 * threshold:
        logger.warning(f"{loc}: |{value:.3g}| near zero threshold {threshold:.3g}")
        return True
    return False


def classify_zero_energy(
    g: StarGraph, zero_tol: Optional[float] = None, tol: Tolerances = DEFAULTS
) -> ResonanceReport:
    """
    Classify the zero-energy behaviour of the graph operator.

    Args:
        g: The star graph.
        zero_tol: The zero threshold; |w_j(0)| counts as zero below
            zero_tol * (1 + moment(p_j, 0)). Defaults to `tol.zero_tol`.
        tol: The numerical settings.

    Returns:
        A `ResonanceReport`.

    Raises:
        MomentRequired: if a first moment is infinite.
        IllConditioned: if some |w_j(0)| or |K(0)| is within a factor 10 of its
            threshold.
    """
    zero_tol = zero_tol or tol.zero_tol
    arrays = edge_arrays(g, [0.0], False, tol)
    w0 = arrays["theta"][:, 0].real
    dtheta0 = arrays["dtheta"][:, 0].real
    thresholds = np.array([zero_tol * p.scale for p in g.edges])
    for j in range(g.n):
        if _ill_conditioned(j, abs(w0[j]), thresholds[j]):
            raise IllConditioned(
                {"loc": j, "input": abs(w0[j]), "threshold": thresholds[j]}
            )
    vanishing = np.flatnonzero(np.abs(w0) < thresholds)
    M = int(vanishing.size)
    common = {
        "M": M,
        "w0": w0.tolist(),
        "dtheta0": dtheta0.tolist(),
        "tolerance_used": zero_tol,
    }

    if M == 1:
        return ResonanceReport(m=0, case="pole", K0=None, **common)

    if M >= 2:
        row = dtheta0[vanishing][None, :]
        basis = null_space(row)
        coefficients = np.zeros((basis.shape[1], g.n))
        coefficients[:, vanishing] = basis.T
        return ResonanceReport(
            m=M - 1,
            case="vanishing_edges",
            K0=None,
            coefficients=coefficients.tolist(),
            kirchhoff_residual=float(np.max(np.abs(coefficients @ dtheta0))),
            continuity_residual=float(np.max(np.abs(coefficients * w0))),
            **common,
        )

    K0 = float(np.sum(dtheta0 / w0))
    K_threshold = zero_tol * (1.0 + float(np.sum(np.abs(dtheta0 / w0))))
    if _ill_conditioned("K0", abs(K0), K_threshold):
        raise IllConditioned({"loc": "K0", "input": abs(K0), "threshold": K_threshold})
    if abs(K0) >= K_threshold:
        return ResonanceReport(m=0, case="nonresonant", K0=K0, **common)
    c = 1.0 / w0
    vertex_values = c * w0
    return ResonanceReport(
        m=1,
        case="kirchhoff_zero",
        K0=K0,
        coefficients=[c.tolist()],
        kirchhoff_residual=abs(float(c @ dtheta0)),
        continuity_residual=float(np.ptp(vertex_values)),
        **common,
    )


def zero_is_never_eigenvalue_check(
    g: StarGraph, report: Optional[ResonanceReport] = None, tol: Tolerances = DEFAULTS
) -> ZeroEnergyWitness:
    """
    Confirm that no bounded zero-energy solution is square integrable.

    On edge j a bounded solution is c_j theta_j(x, 0), which tends to c_j since
    theta_j(x, 0) = 1 beyond the truncation point. The witness records, for
    every resonance function, max_j |c_j theta_j(X_j, 0)|; it holds when all of
    these are nonzero. Without a resonance it holds vacuously.
    """
    report = report or classify_zero_energy(g, tol=tol)
    zero = SpectralParam.from_zeta(0)
    far = []
    for p in g.edges:
        end = max(p.truncation_point(tol.tau_tail), 1.0)
        far.append(abs(jost_solution(p, zero, [end], tol).theta[0]))
    limits = [
        max(abs(c_j) * far_j for c_j, far_j in zip(c, far)) for c in report.coefficients
    ]
    return ZeroEnergyWitness(
        holds=all(limit > tol.zero_tol for limit in limits), limits=limits, m=report.m
    )


def _contour(radius: float, epsilon: float, points: int) -> np.ndarray:
    right = np.geomspace(epsilon, radius, points)
    arc = radius * np.exp(1j * np.linspace(0, math.pi, points))[1:-1]
    left = -np.geomspace(radius, epsilon, points)
    small = epsilon * np.exp(1j * np.linspace(math.pi, 0, points))[1:-1]
    return np.concatenate([right, arc, left, small, right[:1]]).astype(complex)


def winding_count(
    g: StarGraph,
    radius: Optional[float] = None,
    epsilon: float = 1e-3,
    points: int = 200,
    tol: Tolerances = DEFAULTS,
) -> int:
    """
    Count the zeros of zeta -> D(zeta**2) in the upper half annulus
    epsilon < |zeta| < radius with the argument principle.

    The contour runs along the real axis, the large arc, the negative real axis
    and the small arc. Segments whose argument increment reaches the unwrap
    limit are bisected until it does not.
    """
    radius = radius or _kappa_max(g, tol)
    path = _contour(radius, epsilon, points)
    values = determinant_at_zeta(g, path, tol)
    for _ in range(tol.refinement_rounds):
        steps = np.angle(values[1:] / values[:-1])
        bad = np.flatnonzero(np.abs(steps) >= tol.unwrap_limit)
        if bad.size == 0:
            break
        midpoints = 0.5 * (path[bad] + path[bad + 1])
        midpoints.imag = np.maximum(midpoints.imag, 0.0)
        new_values = determinant_at_zeta(g, midpoints, tol)
        path = np.insert(path, bad + 1, midpoints)
        values = np.insert(values, bad + 1, new_values)
    total = float(np.sum(np.angle(values[1:] / values[:-1])))
    return int(round(total / (2 * math.pi)))

