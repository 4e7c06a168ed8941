import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from stargraph_ssf.errors import MomentRequired
from stargraph_ssf.jost import (
    JostData,
    SpectralParam,
    finite_difference_zeta_derivative,
    half_line_determinant,
    half_line_trace,
    jost_boundary,
    jost_boundary_batch,
    jost_solution,
    low_energy_slope,
    regular_solution,
    wronskian,
    zero_energy_identity,
)
from stargraph_ssf.potentials import Exponential, SquareWell, ZeroPotential


def square_well_jost(depth: float, width: float, zeta: complex):
    """theta(0) and theta'(0) of a square well in closed form."""
    q = cmath.sqrt(zeta * zeta - depth)
    phase = cmath.exp(1j * zeta * width)
    theta = phase * (cmath.cos(q * width) - 1j * zeta / q * cmath.sin(q * width))
    dtheta = phase * (q * cmath.sin(q * width) + 1j * zeta * cmath.cos(q * width))
    return theta, dtheta


class TestSpectralParam:
    def test_from_z_negative(self):
        sp = SpectralParam.from_z(-4.0)
        assert sp.zeta == pytest.approx(2j)
        assert sp.z == pytest.approx(-4.0)
        assert sp.from_z

    def test_from_z_boundary_value(self):
        assert SpectralParam.from_z(9.0).zeta == pytest.approx(3.0)

    def test_from_z_lower_half_plane(self):
        sp = SpectralParam.from_z(complex(1.0, -1.0))
        assert sp.zeta.imag > 0
        assert sp.z == pytest.approx(complex(1.0, -1.0))

    def test_lower_half_plane_rejected(self):
        with pytest.raises(ValidationError):
            SpectralParam.from_zeta(complex(1.0, -0.5))

    def test_is_zero(self):
        assert SpectralParam.from_zeta(0).is_zero
        assert not SpectralParam.from_zeta(1e-9).is_zero

    def test_json(self):
        assert SpectralParam.from_zeta(1 + 2j).model_dump(mode="json") == {
            "zeta": [1.0, 2.0],
            "from_z": False,
        }


class TestJostBoundary:
    @pytest.mark.parametrize("zeta", [0.5, 3.0, 2j, 1 + 1j, -1.5])
    def test_free(self, zeta):
        data = jost_boundary(ZeroPotential(), SpectralParam.from_zeta(zeta), True)
        assert data.theta0 == pytest.approx(1.0)
        assert data.dtheta0_dx == pytest.approx(1j * zeta)
        assert data.dtheta0_dzeta == pytest.approx(0.0, abs=1e-12)
        assert data.ddtheta0_dxdzeta == pytest.approx(1j)

    @pytest.mark.parametrize("zeta", [0.3, 2.0, 1.5j, 0.7 + 0.4j])
    def test_square_well_closed_form(self, zeta):
        theta, dtheta = square_well_jost(-1.0, 1.0, zeta)
        data = jost_boundary(SquareWell(depth=-1.0, width=1.0), SpectralParam.from_zeta(zeta))
        assert data.theta0 == pytest.approx(theta, rel=1e-8)
        assert data.dtheta0_dx == pytest.approx(dtheta, rel=1e-8)

    def test_zero_energy(self, unit_well):
        data = jost_boundary(unit_well, SpectralParam.from_zeta(0))
        assert data.theta0 == pytest.approx(math.cos(1.0), rel=1e-9)
        assert data.dtheta0_dx == pytest.approx(math.sin(1.0), rel=1e-9)

    def test_tuned_well_vanishes(self, tuned_well):
        data = jost_boundary(tuned_well, SpectralParam.from_zeta(0))
        assert abs(data.theta0) < 1e-8
        assert data.dtheta0_dx == pytest.approx(math.pi / 2, rel=1e-8)

    def test_batch_matches_single(self, unit_well):
        zetas = [0.1 * (k + 1) for k in range(70)]
        batch = jost_boundary_batch(unit_well, zetas)
        for k in (0, 63, 64, 69):
            single = jost_boundary(unit_well, SpectralParam.from_zeta(zetas[k]))
            assert batch[k].theta0 == pytest.approx(single.theta0, rel=1e-8)

    def test_batch_rejects_lower_half_plane(self, unit_well):
        with pytest.raises(ValueError):
            jost_boundary_batch(unit_well, [1 - 1j])

    @pytest.mark.parametrize("k", [0.4, 1.0, 5.0])
    def test_conjugation_symmetry(self, unit_well, k):
        plus = jost_boundary(unit_well, SpectralParam.from_zeta(k), True)
        minus = jost_boundary(unit_well, SpectralParam.from_zeta(-k), True)
        mirrored = plus.conjugate()
        assert isinstance(mirrored, JostData)
        assert minus.theta0 == pytest.approx(mirrored.theta0, abs=1e-9)
        assert minus.dtheta0_dx == pytest.approx(mirrored.dtheta0_dx, abs=1e-9)

    def test_exponential_decays_to_free(self):
        p = Exponential(amplitude=-1e-8, rate=1.0)
        data = jost_boundary(p, SpectralParam.from_zeta(2j))
        assert data.theta0 == pytest.approx(1.0, abs=1e-7)
        assert data.est_error > 0

    @pytest.mark.parametrize("zeta", [0.8, 1.2j, 0.5 + 0.5j])
    def test_zeta_derivative_finite_difference(self, unit_well, zeta):
        sp = SpectralParam.from_zeta(zeta)
        data = jost_boundary(unit_well, sp, True)
        assert data.dtheta0_dzeta == pytest.approx(
            finite_difference_zeta_derivative(unit_well, sp), rel=1e-5
        )


class TestSolutions:
    def test_jost_solution_outside_support(self, unit_well):
        sp = SpectralParam.from_zeta(1.3)
        xs = np.array([1.5, 3.0])
        samples = jost_solution(unit_well, sp, xs)
        assert samples.theta == pytest.approx(np.exp(1.3j * xs), rel=1e-9)
        assert samples.dtheta_dx == pytest.approx(1.3j * np.exp(1.3j * xs), rel=1e-9)

    def test_jost_solution_at_vertex(self, unit_well):
        sp = SpectralParam.from_zeta(0.6 + 0.2j)
        samples = jost_solution(unit_well, sp, [0.0])
        boundary = jost_boundary(unit_well, sp)
        assert samples.theta[0] == pytest.approx(boundary.theta0, rel=1e-8)

    def test_regular_solution_free(self):
        xs = np.array([0.0, 0.5, 2.0])
        data = regular_solution(ZeroPotential(), SpectralParam.from_zeta(2.0), xs)
        assert data.phi == pytest.approx(np.sin(2 * xs) / 2, abs=1e-9)
        assert data.dphi_dx == pytest.approx(np.cos(2 * xs), abs=1e-9)

    def test_regular_solution_inside_well(self, unit_well):
        xs = np.array([0.25, 0.75])
        data = regular_solution(unit_well, SpectralParam.from_zeta(0), xs)
        assert data.phi == pytest.approx(np.sin(xs), rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(
    depth=st.floats(min_value=-6, max_value=3),
    width=st.floats(min_value=0.3, max_value=2),
    re=st.floats(min_value=-3, max_value=3),
    im=st.floats(min_value=0.05, max_value=3),
)
def test_wronskian_constant(depth, width, re, im):
    p = SquareWell(depth=depth, width=width)
    sp = SpectralParam.from_zeta(complex(re, im))
    values = wronskian(p, sp, [0.0, 0.4 * width, width, 2 * width])
    w = jost_boundary(p, sp).theta0
    scale = max(1.0, abs(w), float(np.max(np.abs(values))))
    assert np.max(np.abs(values - w)) < 1e-7 * scale


class TestZeroEnergy:
    @pytest.mark.parametrize(
        "p",
        [
            SquareWell(depth=-1.0, width=1.0),
            SquareWell(depth=2.0, width=0.5),
            SquareWell(depth=-((math.pi / 2) ** 2), width=1.0),
            ZeroPotential(),
        ],
    )
    def test_zero_energy_identity(self, p):
        assert zero_energy_identity(p) == pytest.approx(-1j, abs=1e-8)

    def test_low_energy_slope_tuned(self, tuned_well):
        slope = low_energy_slope(tuned_well)
        assert abs(slope) > 0
        assert abs(slope.imag) < 1e-8

    def test_moment_required(self):
        class HeavyTail(SquareWell):
            def moment(self, order: int) -> float:
                return math.inf if order > 0 else super().moment(order)

        p = HeavyTail(depth=-1.0, width=1.0)
        with pytest.raises(MomentRequired):
            jost_boundary(p, SpectralParam.from_zeta(0))
        assert jost_boundary(p, SpectralParam.from_zeta(1.0)).theta0 != 0


class TestHalfLine:
    def test_free(self):
        assert half_line_determinant(ZeroPotential(), -4.0) == pytest.approx(1.0)
        assert half_line_trace(ZeroPotential(), -4.0) == pytest.approx(0.0, abs=1e-12)

    def test_trace_is_log_derivative(self, unit_well):
        z, dz = -4.0, 1e-4
        numeric = (
            cmath.log(half_line_determinant(unit_well, z + dz))
            - cmath.log(half_line_determinant(unit_well, z - dz))
        ) / (2 * dz)
        assert half_line_trace(unit_well, z) == pytest.approx(numeric, rel=1e-4)

    def test_trace_rejects_zero(self, unit_well):
        with pytest.raises(ValueError):
            half_line_trace(unit_well, 0.0)


BOUND_POTENTIALS = [
    SquareWell(depth=-4.0, width=1.0),
    SquareWell(depth=2.0, width=0.5),
    SquareWell(depth=-((math.pi / 2) ** 2), width=1.0),
    Exponential(amplitude=-2.0, rate=1.0),
    Exponential(amplitude=3.0, rate=2.0),
]


class TestBounds:
    @pytest.mark.parametrize(
        "p, integral",
        [
            (SquareWell(depth=-4.0, width=1.0), -4.0),
            (SquareWell(depth=2.0, width=0.5), 1.0),
            (Exponential(amplitude=-2.0, rate=1.0), -2.0),
            (Exponential(amplitude=3.0, rate=2.0), 1.5),
        ],
    )
    def test_large_zeta(self, p, integral):
        # t (w(it) - 1) tends to the integral of V over 2
        total = p.moment(0)
        scaled = []
        for t in np.geomspace(10.0, 1e3, 7):
            w = jost_boundary(p, SpectralParam.from_zeta(1j * t)).theta0
            scaled.append(t * abs(w - 1))
            assert t * abs(w - 1) <= total * math.exp(total / t)
        assert scaled[-1] == pytest.approx(abs(integral) / 2, rel=0.02)

    @pytest.mark.parametrize("p", BOUND_POTENTIALS)
    def test_zero_energy_tail(self, p):
        xs = np.linspace(0.0, 3.0, 13)
        theta = jost_solution(p, SpectralParam.from_zeta(0), xs).theta
        constant = math.exp(p.moment(1))
        for x, value in zip(xs, theta):
            assert abs(value - 1) <= constant * p.tail_bound(float(x)) + 1e-9
