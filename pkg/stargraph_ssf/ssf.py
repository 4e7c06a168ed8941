"""The spectral shift function of a star graph.

On the positive half-line xi(lambda) = eta(sqrt(lambda)) / pi, where eta(k) is the
continuous argument of D(k**2) fixed by eta(infinity) = 0. Below zero xi is the
step function -#{eigenvalues < lambda}. The curve is checked against

    ln D(z) = int xi(lambda) / (lambda - z) dlambda,

the trace formula for the test function (lambda + c)**-1, the low-energy
behaviour D ~ c zeta**(m - 1) and Levinson's formula
xi(0+) = -(N + (m - 1) / 2).
"""

from __future__ import annotations

import cmath
import math
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.integrate import quad, trapezoid
from scipy.interpolate import PchipInterpolator

from stargraph_ssf.errors import (
    AnchorTooSmall,
    RefinementLimit,
    TailTooFat,
    WindowContainsZero,
)
from stargraph_ssf.fields import Complex, RealArray
from stargraph_ssf.graph_ops import (
    determinant_at_zeta,
    log_determinant,
    trace_resolvent_diff_formula,
)
from stargraph_ssf.jost import SpectralParam
from stargraph_ssf.logging_config import get_logger
from stargraph_ssf.models import StarGraph
from stargraph_ssf.spectrum import (
    BoundStateList,
    ResonanceReport,
    classify_zero_energy,
    count_negative_eigenvalues,
)
from stargraph_ssf.tolerances import DEFAULTS, Tolerances

logger = get_logger(__name__)

K_ANCHOR = 100.0
LEVINSON_POINTS = 5
FIT_POINTS = 40
FIT_WINDOW = (1e-4, 1e-2)
QUAD_CHUNK = 50
QUAD_LIMIT = 200


class SpectralShiftCurve(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """
    The spectral shift function sampled on a k-grid.

    Attributes:
        k: Increasing wave numbers, the last one is the anchor.
        lambdas: k**2.
        eta: The continuous argument of D(k**2), anchored at the last point.
        xi: eta / pi.
        modulus: |D(k**2)|.
        unwrap_audit: The largest argument increment between neighbours.
        eigenvalues: The negative eigenvalues, giving the step part below 0.
        k_anchor: The anchor wave number.
        refinement_rounds: The number of midpoint insertion rounds used.
    """

    k: RealArray
    lambdas: RealArray
    eta: RealArray
    xi: RealArray
    modulus: RealArray
    unwrap_audit: float
    eigenvalues: List[float] = []
    k_anchor: float
    refinement_rounds: int = 0

    def negative_part(self, lam: float) -> int:
        """Return xi(lambda) = -#{eigenvalues < lambda} for lambda < 0."""
        return -sum(1 for e in self.eigenvalues if e < lam)


class LevinsonResult(BaseModel, frozen=True):
    """
    The terms of Levinson's formula xi(0+) = -(N + (m - 1) / 2).

    Attributes:
        xi_at_zero_plus: xi extrapolated to lambda = 0+.
        N: The number of negative eigenvalues.
        m: The multiplicity of the zero-energy resonance.
        predicted: -(N + (m - 1) / 2).
        residual: |xi_at_zero_plus - predicted|.
        model: 'sqrt' for a fit linear in k, 'linear' for a fit linear in lambda.
    """

    xi_at_zero_plus: float
    N: int
    m: int
    predicted: float
    residual: float
    model: Literal["sqrt", "linear"]


class DispersionResult(BaseModel, frozen=True):
    """ln D(z) against the integral of xi(lambda) / (lambda - z)."""

    z: Complex
    integral: Complex
    log_det: Complex
    residual: float
    tail: Complex
    tail_estimate: float


class TraceTestResult(BaseModel, frozen=True):
    """-int xi(lambda) (lambda + c)**-2 against tr(R(-c) - R_0(-c))."""

    c: float
    integral: float
    formula: float
    residual: float
    tail_estimate: float


class LowEnergyFit(BaseModel, frozen=True):
    """Least-squares fit ln|D(-kappa**2)| = slope ln kappa + intercept."""

    slope: float
    intercept: float
    window: Tuple[float, float]
    points: int


def _default_k_grid(tol: Tolerances) -> np.ndarray:
    k_min, k_max = tol.k_window
    return np.geomspace(k_min, k_max, tol.k_grid)


def phase_curve(
    g: StarGraph,
    k_grid: Optional[Sequence[float]] = None,
    k_anchor: float = K_ANCHOR,
    eigenvalues: Sequence[float] = (),
    tol: Tolerances = DEFAULTS,
) -> SpectralShiftCurve:
    """
    Track the argument of D(k**2) from the anchor down the k-grid.

    The phase at the anchor is the principal argument of D(k_anchor**2); each
    step down adds the principal argument of D(k_i**2) / D(k_{i+1}**2). Wherever
    such an increment reaches `tol.unwrap_limit` the geometric midpoint is
    inserted, for at most `tol.refinement_rounds` rounds.

    Args:
        g: The star graph.
        k_grid: Positive wave numbers; by default `tol.k_grid` log-spaced points
            covering [lambda_min, lambda_max].
        k_anchor: The anchor, the largest wave number of the curve.
        eigenvalues: The negative eigenvalues, stored for the step part.
        tol: The numerical settings.

    Returns:
        A `SpectralShiftCurve`.

    Raises:
        AnchorTooSmall: if |D(k_anchor**2) - 1| is not below the anchor limit.
        RefinementLimit: if an increment stays too large after refinement.
    """
    grid = _default_k_grid(tol) if k_grid is None else np.asarray(k_grid, float)
    ks = np.append(np.unique(grid[(grid > 0) & (grid < k_anchor)]), k_anchor)
    values = determinant_at_zeta(g, ks, tol)
    deviation = abs(values[-1] - 1)
    if deviation >= tol.anchor_max_deviation:
        raise AnchorTooSmall(
            {"input": k_anchor, "deviation": deviation, "limit": tol.anchor_max_deviation}
        )
    rounds = 0
    while True:
        steps = np.angle(values[:-1] / values[1:])
        bad = np.flatnonzero(np.abs(steps) >= tol.unwrap_limit)
        if bad.size == 0:
            break
        if rounds == tol.refinement_rounds:
            i = int(bad[0])
            raise RefinementLimit(
                {"input": (float(ks[i]), float(ks[i + 1])), "rounds": rounds}
            )
        midpoints = np.sqrt(ks[bad] * ks[bad + 1])
        ks = np.insert(ks, bad + 1, midpoints)
        values = np.insert(values, bad + 1, determinant_at_zeta(g, midpoints, tol))
        rounds += 1
    logger.debug(f"phase curve: {ks.size} points after {rounds} refinement rounds")
    tail_sums = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
    eta = float(np.angle(values[-1])) + tail_sums
    return SpectralShiftCurve(
        k=ks,
        lambdas=ks**2,
        eta=eta,
        xi=eta / math.pi,
        modulus=np.abs(values),
        unwrap_audit=float(np.max(np.abs(steps))) if steps.size else 0.0,
        eigenvalues=sorted(eigenvalues),
        k_anchor=k_anchor,
        refinement_rounds=rounds,
    )


def spectral_shift_curve(
    g: StarGraph,
    bound_states: Optional[BoundStateList] = None,
    k_grid: Optional[Sequence[float]] = None,
    k_anchor: float = K_ANCHOR,
    tol: Tolerances = DEFAULTS,
) -> SpectralShiftCurve:
    """Return the full curve: the phase part and the step part below zero."""
    bound_states = bound_states or count_negative_eigenvalues(g, tol=tol)
    return phase_curve(g, k_grid, k_anchor, bound_states.eigenvalues, tol)


def _interpolant(curve: SpectralShiftCurve) -> PchipInterpolator:
    return PchipInterpolator(np.log(curve.k), curve.xi)


def xi_at(curve: SpectralShiftCurve, lam: float) -> float:
    """
    Evaluate xi at any lambda: the step part below 0, the interpolated phase on
    the grid, xi at the first grid point below it and the tail model
    xi(Lambda) (Lambda / lambda)**(1/2) above the last point.
    """
    if lam < 0:
        return float(curve.negative_part(lam))
    if lam <= curve.lambdas[0]:
        return float(curve.xi[0])
    if lam >= curve.lambdas[-1]:
        return float(curve.xi[-1] * math.sqrt(curve.lambdas[-1] / lam))
    return float(_interpolant(curve)(0.5 * math.log(lam)))


def _chunked_quad(curve: SpectralShiftCurve, weight: Callable[[float], complex]) -> complex:
    """Integrate xi(k) * weight(k) dk over the grid, in the variable u = ln k."""
    spline = _interpolant(curve)
    us = np.log(curve.k)
    total = 0j
    for start in range(0, us.size - 1, QUAD_CHUNK):
        a, b = us[start], us[min(start + QUAD_CHUNK, us.size - 1)]

        def integrand(u: float, part: int) -> float:
            k = math.exp(u)
            value = float(spline(u)) * weight(k) * k
            return value.real if part == 0 else value.imag

        re, _ = quad(integrand, a, b, args=(0,), limit=QUAD_LIMIT)
        im, _ = quad(integrand, a, b, args=(1,), limit=QUAD_LIMIT)
        total += complex(re, im)
    return total


def _tail_amplitudes(curve: SpectralShiftCurve) -> Tuple[float, float]:
    """xi * sqrt(lambda) at the last grid point and at a quarter of it."""
    big = curve.lambdas[-1]
    quarter = xi_at(curve, big / 4) * math.sqrt(big / 4)
    return float(curve.xi[-1] * math.sqrt(big)), quarter


def dispersion_check(
    g: StarGraph,
    z: complex,
    curve: Optional[SpectralShiftCurve] = None,
    tol: Tolerances = DEFAULTS,
) -> DispersionResult:
    """
    Compare ln D(z) with the integral of xi(lambda) / (lambda - z).

    The integral adds the step part below 0 in closed form, the constant
    continuation of xi below the first grid point, the interpolated curve and the
    tail model beyond the last grid point. The tail is evaluated with the
    amplitude read at Lambda and at Lambda / 4; their difference is the tail
    estimate.

    Raises:
        TailTooFat: if the tail estimate exceeds the dispersion tolerance.
    """
    z = complex(z)
    curve = curve or spectral_shift_curve(g, tol=tol)
    root = SpectralParam.from_z(z).zeta
    lam0, big = float(curve.lambdas[0]), float(curve.lambdas[-1])

    negative = -sum(cmath.log(-z) - cmath.log(e - z) for e in curve.eigenvalues)
    low = curve.xi[0] * (cmath.log(lam0 - z) - cmath.log(-z))
    middle = _chunked_quad(curve, lambda k: 2 * k / (k * k - z))

    def tail(amplitude: float) -> complex:
        s = math.sqrt(big)
        return -(amplitude / root) * cmath.log((s - root) / (s + root))

    a_big, a_quarter = _tail_amplitudes(curve)
    tail_value = tail(a_big)
    tail_estimate = abs(tail_value - tail(a_quarter))
    if tail_estimate > tol.residuals.dispersion:
        raise TailTooFat(
            {
                "input": big,
                "estimate": tail_estimate,
                "tolerance": tol.residuals.dispersion,
            }
        )
    integral = negative + low + middle + tail_value
    log_det = log_determinant(g, z, tol)
    return DispersionResult(
        z=z,
        integral=integral,
        log_det=log_det,
        residual=abs(integral - log_det),
        tail=tail_value,
        tail_estimate=tail_estimate,
    )


def trace_test_function_check(
    g: StarGraph,
    c: float,
    curve: Optional[SpectralShiftCurve] = None,
    tol: Tolerances = DEFAULTS,
) -> TraceTestResult:
    """
    Compare -int xi(lambda) (lambda + c)**-2 dlambda with tr(R(-c) - R_0(-c)).

    Args:
        g: The star graph.
        c: A shift with -c below the spectrum of both operators.
        curve: A precomputed curve.
        tol: The numerical settings.

    Raises:
        TailTooFat: if the tail estimate exceeds the trace test tolerance.
    """
    curve = curve or spectral_shift_curve(g, tol=tol)
    if c <= 0 or any(e + c <= 0 for e in curve.eigenvalues):
        raise ValueError(f"-c={-c} must lie below the spectrum")
    lam0, big = float(curve.lambdas[0]), float(curve.lambdas[-1])

    negative = -sum(1 / (e + c) - 1 / c for e in curve.eigenvalues)
    low = curve.xi[0] * (1 / c - 1 / (lam0 + c))
    middle = _chunked_quad(curve, lambda k: 2 * k / (k * k + c) ** 2).real

    def tail(amplitude: float) -> float:
        value, _ = quad(lambda lam: amplitude / math.sqrt(lam) / (lam + c) ** 2, big, np.inf)
        return float(value)

    a_big, a_quarter = _tail_amplitudes(curve)
    tail_value = tail(a_big)
    tail_estimate = abs(tail_value - tail(a_quarter))
    if tail_estimate > tol.residuals.trace_test_function:
        raise TailTooFat(
            {
                "input": big,
                "estimate": tail_estimate,
                "tolerance": tol.residuals.trace_test_function,
            }
        )
    integral = -(negative + low + middle + tail_value)
    formula = -trace_resolvent_diff_formula(g, -c, tol).real
    return TraceTestResult(
        c=c,
        integral=integral,
        formula=formula,
        residual=abs(integral - formula),
        tail_estimate=tail_estimate,
    )


def low_energy_exponent(
    g: StarGraph,
    fit_window: Tuple[float, float] = FIT_WINDOW,
    points: int = FIT_POINTS,
    tol: Tolerances = DEFAULTS,
) -> LowEnergyFit:
    """
    Fit ln|D(-kappa**2)| against ln kappa on the positive imaginary zeta-axis.

    The slope approximates m - 1 and the intercept ln|c| in
    D(z) = c zeta**(m - 1) (1 + o(1)).

    Raises:
        WindowContainsZero: if D(-kappa**2) changes sign inside the window.
    """
    kappas = np.geomspace(fit_window[0], fit_window[1], points)
    values = determinant_at_zeta(g, 1j * kappas, tol).real
    if np.any(np.sign(values[:-1]) != np.sign(values[1:])) or np.any(values == 0):
        raise WindowContainsZero({"input": fit_window})
    slope, intercept = np.polyfit(np.log(kappas), np.log(np.abs(values)), 1)
    return LowEnergyFit(
        slope=float(slope),
        intercept=float(intercept),
        window=(float(fit_window[0]), float(fit_window[1])),
        points=points,
    )


def levinson_check(
    g: StarGraph,
    curve: Optional[SpectralShiftCurve] = None,
    bound_states: Optional[BoundStateList] = None,
    report: Optional[ResonanceReport] = None,
    tol: Tolerances = DEFAULTS,
) -> LevinsonResult:
    """
    Compare xi(0+) with -(N + (m - 1) / 2).

    xi(0+) is extrapolated from the smallest grid points: linearly in k when a
    resonance is present and linearly in lambda otherwise.
    """
    bound_states = bound_states or count_negative_eigenvalues(g, tol=tol)
    report = report or classify_zero_energy(g, tol=tol)
    curve = curve or phase_curve(g, eigenvalues=bound_states.eigenvalues, tol=tol)
    ks = curve.k[:LEVINSON_POINTS]
    xis = curve.xi[:LEVINSON_POINTS]
    model: Literal["sqrt", "linear"] = "sqrt" if report.m >= 1 else "linear"
    abscissa = ks if model == "sqrt" else ks**2
    _, xi0 = np.polyfit(abscissa, xis, 1)
    predicted = -(bound_states.N + (report.m - 1) / 2)
    residual = abs(float(xi0) - predicted)
    if residual > tol.residuals.levinson:
        logger.warning(
            f"Levinson residual {residual:.3g}: xi(0+)={xi0:.4f}, N={bound_states.N}, "
            f"m={report.m}"
        )
    return LevinsonResult(
        xi_at_zero_plus=float(xi0),
        N=bound_states.N,
        m=report.m,
        predicted=predicted,
        residual=residual,
        model=model,
    )


def weighted_l1(curve: SpectralShiftCurve, exponent: float = 1.0) -> float:
    """Return int |xi| (1 + |lambda|)**-exponent over the computed window."""
    positive = trapezoid(
        np.abs(curve.xi) * (1 + curve.lambdas) ** -exponent, curve.lambdas
    )
    negative = 0.0
    for e in curve.eigenvalues:
        value, _ = quad(lambda lam: (1 + abs(lam)) ** -exponent, e, 0.0)
        negative += value
    return float(positive + negative)


def phase_symmetry_defect(g: StarGraph, k: float, tol: Tolerances = DEFAULTS) -> float:
    """Return |eta(k) + eta(-k)| from D at the real points zeta = k and -k."""
    plus, minus = determinant_at_zeta(g, [k, -k], tol)
    return abs(float(np.angle(plus * minus)))
