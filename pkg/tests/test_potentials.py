import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import TypeAdapter, ValidationError

from stargraph_ssf.errors import TailNotIntegrable
from stargraph_ssf.potentials import (
    EdgePotential,
    Exponential,
    PiecewiseLinear,
    Sampled,
    SquareWell,
    ZeroPotential,
    potential_discriminator,
)

adapter = TypeAdapter(EdgePotential)


class TestZeroPotential:
    def test_queries(self):
        p = ZeroPotential()
        assert p.eval(0.3) == 0.0
        assert p.moment(0) == p.moment(2) == 0.0
        assert p.support_end() == 0.0
        assert p.truncation_point(1e-12) == 0.0
        assert p.is_zero
        assert p.scale == 1.0
        assert p.cell_average([0.0, 0.1], 0.1).tolist() == [0.0, 0.0]


class TestSquareWell:
    def test_eval(self, unit_well):
        assert unit_well.eval(0.5) == -1.0
        assert unit_well.eval(1.5) == 0.0
        assert unit_well.eval(np.array([0.0, 0.99, 1.0])).tolist() == [-1.0, -1.0, 0.0]

    @pytest.mark.parametrize("order, expected", [(0, 2.0), (1, 1.0), (2, 2 / 3)])
    def test_moment(self, order, expected):
        assert SquareWell(depth=-2.0, width=1.0).moment(order) == pytest.approx(expected)

    def test_negative_order(self, unit_well):
        with pytest.raises(ValueError):
            unit_well.moment(-1)

    def test_tail_and_support(self, unit_well):
        assert unit_well.tail_bound(0.0) == pytest.approx(1.5)
        assert unit_well.tail_bound(2.0) == 0.0
        assert unit_well.support_end() == 1.0
        assert unit_well.truncation_point(1e-12) == 1.0
        assert unit_well.breakpoints() == [1.0]
        assert unit_well.sup_negative() == 1.0

    def test_cell_average_straddles_jump(self, unit_well):
        averages = unit_well.cell_average([0.0, 0.5, 1.0, 1.5], 0.2)
        assert averages.tolist() == pytest.approx([-1.0, -1.0, -0.5, 0.0])

    def test_width_positive(self):
        with pytest.raises(ValidationError) as e:
            SquareWell(depth=-1.0, width=0.0)
        assert e.value.errors()[0]["loc"] == ("width",)


class TestExponential:
    def test_moments(self):
        p = Exponential(amplitude=-3.0, rate=2.0)
        assert p.moment(0) == pytest.approx(1.5)
        assert p.moment(1) == pytest.approx(0.75)
        assert p.support_end() == math.inf
        assert p.sup_negative() == 3.0

    def test_truncation_point(self):
        p = Exponential(amplitude=-3.0, rate=2.0)
        end = p.truncation_point(1e-12)
        assert p.tail_bound(end) == pytest.approx(1e-12, rel=1e-6)
        assert 10 < end < 20

    def test_tail_not_integrable(self):
        p = Exponential(amplitude=-1.0, rate=1e-5)
        with pytest.raises(TailNotIntegrable):
            p.truncation_point(1e-12)

    def test_cell_average(self):
        p = Exponential(amplitude=1.0, rate=1.0)
        average = p.cell_average([1.0], 0.5)[0]
        expected = (math.exp(-0.75) - math.exp(-1.25)) / 0.5
        assert average == pytest.approx(expected)


class TestInterpolated:
    def test_piecewise_linear(self):
        p = PiecewiseLinear(points=[(0.0, -2.0), (1.0, 0.0), (2.0, 0.0)])
        assert p.eval(0.5) == pytest.approx(-1.0)
        assert p.eval(3.0) == 0.0
        assert p.moment(0) == pytest.approx(1.0)
        assert p.moment(1) == pytest.approx(1 / 3)
        assert p.support_end() == 1.0
        assert p.breakpoints() == [1.0]

    def test_piecewise_linear_sign_change(self):
        p = PiecewiseLinear(points=[(0.0, -1.0), (2.0, 1.0)])
        assert p.moment(0) == pytest.approx(1.0)

    def test_piecewise_linear_invalid(self):
        with pytest.raises(ValidationError) as e:
            PiecewiseLinear(points=[(0.0, -1.0), (0.0, 1.0)])
        assert e.value.errors()[0]["type"] == "invalid_potential_grid"

    def test_sampled(self):
        p = Sampled(spacing=0.5, values=[-1.0, -1.0, 0.0, 0.0])
        assert p.eval(0.25) == -1.0
        assert p.eval(0.75) == pytest.approx(-0.5)
        assert p.support_end() == 1.0
        assert p.moment(0) == pytest.approx(0.75)

    def test_sampled_from_csv(self, tmp_path):
        (tmp_path / "v.csv").write_text("x,V\n0,-1\n0.5,-1\n1,0\n")
        p = Sampled.model_validate(
            {"kind": "sampled", "csv": "v.csv"}, context={"base_dir": tmp_path}
        )
        assert p.spacing == 0.5
        assert p.values == [-1.0, -1.0, 0.0]


class TestEdgePotential:
    @pytest.mark.parametrize(
        "data, model",
        [
            ({"kind": "zero"}, ZeroPotential),
            ({"kind": "square_well", "depth": -1, "width": 1}, SquareWell),
            ({"kind": "exponential", "amplitude": -1, "rate": 1}, Exponential),
            ({"kind": "piecewise_linear", "points": [[0, -1], [1, 0]]}, PiecewiseLinear),
            ({"kind": "sampled", "spacing": 0.1, "values": [-1, 0]}, Sampled),
        ],
    )
    def test_discriminated(self, data, model):
        assert isinstance(adapter.validate_python(data), model)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            adapter.validate_python({"kind": "coulomb"})

    def test_discriminator(self, unit_well):
        assert potential_discriminator({"kind": "zero"}) == "zero"
        assert potential_discriminator(unit_well) == "square_well"
        assert potential_discriminator({}) is None


@given(
    depth=st.floats(min_value=-20, max_value=20, allow_nan=False),
    width=st.floats(min_value=0.1, max_value=5),
    a=st.floats(min_value=0, max_value=6),
    b=st.floats(min_value=0, max_value=6),
)
def test_tail_bound_decreasing(depth, width, a, b):
    p = SquareWell(depth=depth, width=width)
    lo, hi = min(a, b), max(a, b)
    assert p.tail_bound(hi) <= p.tail_bound(lo) + 1e-12
    assert p.tail_bound(0.0) == pytest.approx(p.moment(0) + p.moment(1))


@given(
    amplitude=st.floats(min_value=-10, max_value=10, allow_nan=False),
    rate=st.floats(min_value=0.1, max_value=5),
    a=st.floats(min_value=0, max_value=20),
    b=st.floats(min_value=0, max_value=20),
)
def test_exponential_tail_decreasing(amplitude, rate, a, b):
    p = Exponential(amplitude=amplitude, rate=rate)
    lo, hi = min(a, b), max(a, b)
    assert p.tail_bound(hi) <= p.tail_bound(lo) * (1 + 1e-12)
