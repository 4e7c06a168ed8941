"""Regular and Jost solutions of -u'' + V u = zeta**2 u on one half-line edge.

The Jost solution is written as theta(x, zeta) = exp(i zeta x) m(x, zeta). The
reduced function m solves

    m'' + 2 i zeta m' = V m,        m(X) = 1, m'(X) = 0,

from the truncation point X of the potential down to 0, and its zeta derivative
n = dm/dzeta solves

    n'' + 2 i zeta n' = V n - 2 i m',        n(X) = n'(X) = 0.

For Im zeta >= 0 the backward direction is the stable one for both equations,
the reduced functions stay bounded at large |zeta| and the system is real at
zeta = 0 (apart from the purely imaginary n). Forward integration of theta is
never used. The regular solution phi is integrated forward from phi(0) = 0,
phi'(0) = 1.

All integrations use `scipy.integrate.solve_ivp` with the DOP853 method and are
split at the breakpoints of the potential so that no step straddles a jump.
Several values of zeta are integrated in one system; the relative tolerance is
tightened by sqrt(#zeta) because the integrator controls an RMS norm.
"""

from __future__ import annotations

import cmath
import math
from typing import Annotated, Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import AfterValidator, BaseModel, Field
from scipy.integrate import solve_ivp

from stargraph_ssf.errors import MomentRequired, StiffnessFailure
from stargraph_ssf.fields import Complex, ComplexArray, RealArray
from stargraph_ssf.logging_config import get_logger
from stargraph_ssf.potentials import EdgePotential, _Potential
from stargraph_ssf.tolerances import DEFAULTS, Tolerances

logger = get_logger(__name__)

BATCH_SIZE = 64
FD_STEP = 1e-4


def _upper_half_plane(zeta: complex) -> complex:
    if zeta.imag < 0:
        raise ValueError(f"zeta must satisfy Im zeta >= 0, got {zeta}")
    return zeta


class SpectralParam(BaseModel, frozen=True):
    """
    The spectral parameter zeta with z = zeta**2 and Im zeta >= 0.

    Attributes:
        zeta: The square root of z in the closed upper half-plane.
        from_z: True if the object was built from z, in which case zeta is the
            branch of z**(1/2) with Im zeta > 0 off the positive real axis and
            zeta = sqrt(z) > 0 on it (the boundary value z + i0).
    """

    zeta: Annotated[Complex, AfterValidator(_upper_half_plane)]
    from_z: bool = False

    @classmethod
    def from_zeta(cls, zeta: complex) -> SpectralParam:
        return cls(zeta=complex(zeta))

    @classmethod
    def from_z(cls, z: complex) -> SpectralParam:
        zeta = cmath.sqrt(complex(z))
        if zeta.imag < 0:
            zeta = -zeta
        return cls(zeta=complex(zeta.real, abs(zeta.imag)), from_z=True)

    @property
    def z(self) -> complex:
        return self.zeta * self.zeta

    @property
    def is_zero(self) -> bool:
        return self.zeta == 0


class JostData(BaseModel, frozen=True):
    """
    Boundary values of the Jost solution of one edge at one zeta.

    Attributes:
        zeta: The spectral parameter.
        theta0: theta(0, zeta), the Jost function w(zeta).
        dtheta0_dx: theta'(0, zeta).
        dtheta0_dzeta: d theta(0, zeta) / d zeta, if requested.
        ddtheta0_dxdzeta: d theta'(0, zeta) / d zeta, if requested.
        est_error: A coarse bound on the absolute error of the values.
    """

    zeta: Complex
    theta0: Complex
    dtheta0_dx: Complex
    dtheta0_dzeta: Optional[Complex] = None
    ddtheta0_dxdzeta: Optional[Complex] = None
    est_error: Annotated[float, Field(ge=0)] = 0.0

    @property
    def w(self) -> complex:
        return self.theta0

    def conjugate(self) -> JostData:
        """Return the data at -conj(zeta), the conjugate of the data at zeta."""

        def conj(value: Optional[complex]) -> Optional[complex]:
            return None if value is None else value.conjugate()

        return JostData(
            zeta=-self.zeta.conjugate(),
            theta0=self.theta0.conjugate(),
            dtheta0_dx=self.dtheta0_dx.conjugate(),
            dtheta0_dzeta=conj(self.dtheta0_dzeta),
            ddtheta0_dxdzeta=conj(self.ddtheta0_dxdzeta),
            est_error=self.est_error,
        )


class JostSamples(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """The Jost solution and its x-derivative sampled on a grid."""

    zeta: Complex
    xs: RealArray
    theta: ComplexArray
    dtheta_dx: ComplexArray
    est_error: float


class RegularData(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """
    The regular solution phi(x, zeta) and phi'(x, zeta) sampled on `xs`, with
    phi(0) = 0 and phi'(0) = 1.
    """

    zeta: Complex
    xs: RealArray
    phi: ComplexArray
    dphi_dx: ComplexArray


def _segments(p: _Potential, end: float) -> List[Tuple[float, float]]:
    """The intervals [a, b] of [0, end] between breakpoints, ordered from `end` down."""
    cuts = sorted({0.0, end, *(b for b in p.breakpoints() if 0.0 < b < end)})
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:])][::-1]


def _segment_potential(p: _Potential, a: float, b: float) -> Callable[[float], float]:
    """V restricted to [a, b], taken from the inside at the endpoints."""
    margin = 1e-12 * (b - a)
    lo, hi = a + margin, b - margin

    def potential(x: float) -> float:
        return float(p.eval(min(max(x, lo), hi)))

    return potential


def _m_form_rhs(
    zetas: np.ndarray, rows: int, potential: Callable[[float], float]
) -> Callable[[float, np.ndarray], np.ndarray]:
    q = zetas.size

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        state = y.reshape(rows, q)
        v = potential(x)
        out = np.empty_like(state)
        out[0] = state[1]
        out[1] = v * state[0] - 2j * zetas * state[1]
        if rows == 4:
            out[2] = state[3]
            out[3] = v * state[2] - 2j * zetas * state[3] - 2j * state[1]
        return out.ravel()

    return rhs


def _backward_sweep(
    p: _Potential,
    zetas: np.ndarray,
    rows: int,
    tol: Tolerances,
    xs: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float, Optional[np.ndarray]]:
    """
    Integrate the reduced Jost system from the truncation point down to 0.

    Returns:
        The state (rows, q) at x = 0, the truncation point, and if `xs` is given
        the state sampled at `xs` with shape (rows, q, len(xs)).
    """
    end = p.truncation_point(tol.tau_tail)
    q = zetas.size
    state = np.zeros((rows, q), dtype=complex)
    state[0] = 1.0
    samples = None
    if xs is not None:
        samples = np.zeros((rows, q, xs.size), dtype=complex)
        samples[0] = 1.0
    rtol = max(tol.rtol / math.sqrt(q), 1e-13)
    steps = 0
    for a, b in _segments(p, end):
        rhs = _m_form_rhs(zetas, rows, _segment_potential(p, a, b))
        sol = solve_ivp(
            rhs,
            (b, a),
            state.ravel(),
            method="DOP853",
            rtol=rtol,
            atol=tol.atol,
            dense_output=xs is not None,
        )
        if sol.status != 0:
            raise StiffnessFailure({"input": zetas.tolist(), "detail": sol.message})
        steps += sol.t.size
        state = sol.y[:, -1].reshape(rows, q)
        if xs is not None and samples is not None:
            inside = (xs >= a) & (xs <= b)
            if inside.any():
                samples[:, :, inside] = sol.sol(xs[inside]).reshape(rows, q, -1)
    logger.debug(f"{p.kind}: {q} zeta values, X={end:.3g}, {steps} steps")
    return state, end, samples


def _check_zero_energy_moments(p: _Potential, zetas: np.ndarray, derivatives: bool) -> None:
    if not np.any(zetas == 0):
        return
    if not math.isfinite(p.moment(1)):
        raise MomentRequired({"input": p.kind, "order": 1})
    if derivatives and not math.isfinite(p.moment(2)):
        raise MomentRequired({"input": p.kind, "order": 2})


def jost_boundary_batch(
    p: EdgePotential,
    zetas: Sequence[complex],
    with_zeta_derivatives: bool = False,
    tol: Tolerances = DEFAULTS,
) -> List[JostData]:
    """
    Compute the boundary data of the Jost solution for many values of zeta.

    Args:
        p: The edge potential.
        zetas: Spectral parameters with Im zeta >= 0.
        with_zeta_derivatives: Also integrate the variational system.
        tol: The numerical settings.

    Returns:
        A list of `JostData`, one per zeta, in the order given.
    """
    zeta_array = np.asarray(zetas, dtype=complex).ravel()
    if np.any(zeta_array.imag < 0):
        raise ValueError("all zeta values must satisfy Im zeta >= 0")
    _check_zero_energy_moments(p, zeta_array, with_zeta_derivatives)
    rows = 4 if with_zeta_derivatives else 2
    results: List[JostData] = []
    for start in range(0, zeta_array.size, BATCH_SIZE):
        chunk = zeta_array[start : start + BATCH_SIZE]
        state, end, _ = _backward_sweep(p, chunk, rows, tol)
        est_error = tol.rtol * max(end, 1.0) + p.tail_bound(end)
        for i, zeta in enumerate(chunk):
            m, dm = state[0, i], state[1, i]
            data = {
                "zeta": complex(zeta),
                "theta0": complex(m),
                "dtheta0_dx": complex(dm + 1j * zeta * m),
                "est_error": est_error,
            }
            if with_zeta_derivatives:
                n, dn = state[2, i], state[3, i]
                data["dtheta0_dzeta"] = complex(n)
                data["ddtheta0_dxdzeta"] = complex(dn + 1j * m + 1j * zeta * n)
            results.append(JostData(**data))
    return results


def jost_boundary(
    p: EdgePotential,
    sp: SpectralParam,
    with_zeta_derivatives: bool = False,
    tol: Tolerances = DEFAULTS,
) -> JostData:
    """
    Compute theta(0, zeta), theta'(0, zeta) and optionally their zeta derivatives.

    Args:
        p: The edge potential.
        sp: The spectral parameter.
        with_zeta_derivatives: Also return the zeta derivatives.
        tol: The numerical settings.

    Returns:
        A `JostData` object.

    Raises:
        TailNotIntegrable: if the potential cannot be truncated.
        StiffnessFailure: if the integrator fails.
        MomentRequired: if zeta = 0 and a needed moment is infinite.
    """
    return jost_boundary_batch(p, [sp.zeta], with_zeta_derivatives, tol)[0]


def jost_solution(
    p: EdgePotential, sp: SpectralParam, xs: Sequence[float], tol: Tolerances = DEFAULTS
) -> JostSamples:
    """
    Sample theta(x, zeta) and theta'(x, zeta) on `xs`.

    Beyond the truncation point the Jost solution is exp(i zeta x).

    Args:
        p: The edge potential.
        sp: The spectral parameter.
        xs: Positions >= 0, in any order.
        tol: The numerical settings.

    Returns:
        A `JostSamples` object with values in the order of `xs`.
    """
    grid = np.asarray(xs, dtype=float)
    if np.any(grid < 0):
        raise ValueError("jost_solution needs x >= 0")
    zeta = sp.zeta
    _check_zero_energy_moments(p, np.array([zeta]), False)
    _, end, samples = _backward_sweep(p, np.array([zeta]), 2, tol, xs=grid.ravel())
    assert samples is not None
    m, dm = samples[0, 0], samples[1, 0]
    phase = np.exp(1j * zeta * grid.ravel())
    theta = phase * m
    dtheta = phase * (dm + 1j * zeta * m)
    return JostSamples(
        zeta=zeta,
        xs=grid,
        theta=theta.reshape(grid.shape),
        dtheta_dx=dtheta.reshape(grid.shape),
        est_error=tol.rtol * max(end, 1.0) + p.tail_bound(end),
    )


def regular_solution(
    p: EdgePotential, sp: SpectralParam, xs: Sequence[float], tol: Tolerances = DEFAULTS
) -> RegularData:
    """
    Sample the regular solution phi(x, zeta) and phi'(x, zeta) on `xs`.

    Args:
        p: The edge potential.
        sp: The spectral parameter.
        xs: Positions >= 0, in any order.
        tol: The numerical settings.

    Returns:
        A `RegularData` object with values in the order of `xs`.

    Raises:
        StiffnessFailure: if the integrator fails.
    """
    grid = np.asarray(xs, dtype=float)
    flat = grid.ravel()
    zeta = sp.zeta
    z = zeta * zeta
    phi = np.zeros(flat.size, dtype=complex)
    dphi = np.zeros(flat.size, dtype=complex)
    at_zero = flat == 0
    dphi[at_zero] = 1.0
    top = float(flat.max()) if flat.size else 0.0
    cuts = sorted({0.0, top, *(b for b in p.breakpoints() if 0.0 < b < top)})
    state = np.array([0.0, 1.0], dtype=complex)
    for a, b in zip(cuts[:-1], cuts[1:]):
        potential = _segment_potential(p, a, b)

        def rhs(
            x: float, y: np.ndarray, potential: Callable[[float], float] = potential
        ) -> np.ndarray:
            return np.array([y[1], (potential(x) - z) * y[0]])

        sol = solve_ivp(
            rhs,
            (a, b),
            state,
            method="DOP853",
            rtol=tol.rtol,
            atol=tol.atol,
            dense_output=True,
        )
        if sol.status != 0:
            raise StiffnessFailure({"input": zeta, "detail": sol.message})
        state = sol.y[:, -1]
        inside = (flat > a) & (flat <= b)
        if inside.any():
            values = sol.sol(flat[inside])
            phi[inside] = values[0]
            dphi[inside] = values[1]
    return RegularData(
        zeta=zeta,
        xs=grid,
        phi=phi.reshape(grid.shape),
        dphi_dx=dphi.reshape(grid.shape),
    )


def wronskian(
    p: EdgePotential, sp: SpectralParam, x: Sequence[float], tol: Tolerances = DEFAULTS
) -> np.ndarray:
    """
    Return W(x) = theta(x) phi'(x) - theta'(x) phi(x), which equals w(zeta) for
    every x.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    jost = jost_solution(p, sp, xs, tol)
    regular = regular_solution(p, sp, xs, tol)
    return jost.theta * regular.dphi_dx - jost.dtheta_dx * regular.phi


def zero_energy_identity(p: EdgePotential, tol: Tolerances = DEFAULTS) -> complex:
    """
    Return theta_dot(0,0) theta'(0,0) - theta_dot'(0,0) theta(0,0), which equals
    -i for every integrable potential with a finite second moment. When the Jost
    function vanishes at zero energy only the first product is kept.
    """
    data = jost_boundary(p, SpectralParam.from_zeta(0), True, tol)
    assert data.dtheta0_dzeta is not None and data.ddtheta0_dxdzeta is not None
    product = data.dtheta0_dzeta * data.dtheta0_dx
    if abs(data.theta0) < tol.jost_zero:
        return product
    return product - data.ddtheta0_dxdzeta * data.theta0


def low_energy_slope(p: EdgePotential, tol: Tolerances = DEFAULTS) -> complex:
    """
    Return w0 = i theta_dot(0, 0), the constant with w(zeta) = -i w0 zeta + o(zeta)
    when the Jost function vanishes at zero energy.
    """
    data = jost_boundary(p, SpectralParam.from_zeta(0), True, tol)
    assert data.dtheta0_dzeta is not None
    return 1j * data.dtheta0_dzeta


def half_line_determinant(p: EdgePotential, z: complex, tol: Tolerances = DEFAULTS) -> complex:
    """Return the Jost function w(zeta), the determinant of the Dirichlet half-line."""
    return jost_boundary(p, SpectralParam.from_z(z), False, tol).theta0


def half_line_trace(p: EdgePotential, z: complex, tol: Tolerances = DEFAULTS) -> complex:
    """
    Return tr(R_{D,0}(z) - R_D(z)) = w_dot(zeta) / (2 zeta w(zeta)) for the
    half-line with a Dirichlet condition at 0.
    """
    sp = SpectralParam.from_z(z)
    if sp.is_zero:
        raise ValueError("half_line_trace needs z != 0")
    data = jost_boundary(p, sp, True, tol)
    assert data.dtheta0_dzeta is not None
    return data.dtheta0_dzeta / (2 * sp.zeta * data.theta0)


def finite_difference_zeta_derivative(
    p: EdgePotential, sp: SpectralParam, h: float = FD_STEP, tol: Tolerances = DEFAULTS
) -> complex:
    """Return the central difference (theta(0, zeta+h) - theta(0, zeta-h)) / 2h."""
    plus, minus = jost_boundary_batch(p, [sp.zeta + h, sp.zeta - h], False, tol)
    return (plus.theta0 - minus.theta0) / (2 * h)
