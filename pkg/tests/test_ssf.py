import math

import numpy as np
import pytest

from stargraph_ssf.errors import AnchorTooSmall, WindowContainsZero
from stargraph_ssf.models import StarGraph
from stargraph_ssf.spectrum import count_negative_eigenvalues
from stargraph_ssf.ssf import (
    SpectralShiftCurve,
    dispersion_check,
    levinson_check,
    low_energy_exponent,
    phase_curve,
    phase_symmetry_defect,
    spectral_shift_curve,
    trace_test_function_check,
    weighted_l1,
    xi_at,
)


@pytest.fixture
def well_curve(one_well_graph) -> SpectralShiftCurve:
    return spectral_shift_curve(one_well_graph)


class TestPhaseCurve:
    def test_free_graph(self, free_graph):
        curve = phase_curve(free_graph)
        assert np.max(np.abs(curve.xi)) < 1e-10
        assert weighted_l1(curve) < 1e-8
        assert curve.refinement_rounds == 0

    def test_grid(self, well_curve):
        assert np.all(np.diff(well_curve.k) > 0)
        assert well_curve.k[-1] == 100.0
        assert well_curve.lambdas == pytest.approx(well_curve.k**2)
        assert well_curve.xi == pytest.approx(well_curve.eta / math.pi)
        assert well_curve.unwrap_audit < math.pi / 2

    def test_anchor(self, well_curve):
        assert abs(well_curve.eta[-1]) < 0.05

    def test_anchor_too_small(self, unit_well_graph):
        with pytest.raises(AnchorTooSmall):
            phase_curve(unit_well_graph, k_grid=[0.001, 0.005], k_anchor=0.01)

    def test_step_part(self, well_curve, one_well_graph):
        bound = count_negative_eigenvalues(one_well_graph)
        assert well_curve.eigenvalues == bound.eigenvalues
        lowest = bound.eigenvalues[0]
        assert xi_at(well_curve, lowest - 1.0) == 0
        assert xi_at(well_curve, -1e-9) == -bound.N

    def test_xi_at(self, well_curve):
        lam = float(well_curve.lambdas[100])
        assert xi_at(well_curve, lam) == pytest.approx(well_curve.xi[100], rel=1e-9)
        assert xi_at(well_curve, 0.0) == well_curve.xi[0]
        big = float(well_curve.lambdas[-1])
        assert xi_at(well_curve, 4 * big) == pytest.approx(well_curve.xi[-1] / 2)

    @pytest.mark.parametrize("k", [0.5, 3.0, 20.0])
    def test_phase_symmetry(self, one_well_graph, k):
        assert phase_symmetry_defect(one_well_graph, k) < 1e-8


class TestLevinson:
    def test_free_graph(self, free_graph):
        result = levinson_check(free_graph)
        assert result.N == 0
        assert result.m == 1
        assert result.model == "sqrt"
        assert result.predicted == 0.0
        assert result.residual < 1e-8

    def test_unit_well_graph(self, unit_well_graph):
        result = levinson_check(unit_well_graph)
        assert (result.N, result.m) == (1, 0)
        assert result.model == "linear"
        assert result.predicted == -0.5
        assert result.residual < 0.02

    @pytest.mark.slow
    def test_tuned_graph(self, tuned_graph):
        result = levinson_check(tuned_graph)
        assert result.residual < 0.02

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_random_corpus(self, seed):
        assert levinson_check(StarGraph.random_wells(seed)).residual < 0.02


class TestLowEnergy:
    def test_free_graph(self):
        fit = low_energy_exponent(StarGraph.free(3))
        assert fit.slope == pytest.approx(0.0, abs=1e-8)
        assert fit.intercept == pytest.approx(0.0, abs=1e-8)

    def test_nonresonant(self, unit_well_graph):
        fit = low_energy_exponent(unit_well_graph)
        assert fit.slope == pytest.approx(-1.0, abs=0.1)
        assert fit.points == 40

    def test_tuned_graph(self, tuned_graph):
        tuned = sum(not p.is_zero for p in tuned_graph.edges)
        m = 0 if tuned == 1 else tuned - 1
        fit = low_energy_exponent(tuned_graph)
        assert fit.slope == pytest.approx(m - 1, abs=0.1)

    def test_window_contains_zero(self, symmetric_pair):
        kappa = count_negative_eigenvalues(symmetric_pair).kappas[0]
        with pytest.raises(WindowContainsZero):
            low_energy_exponent(symmetric_pair, (kappa / 2, 2 * kappa), 20)


@pytest.mark.slow
class TestIntegralIdentities:
    @pytest.mark.parametrize("z", [-4.0, complex(1.0, 1.0)])
    def test_dispersion(self, one_well_graph, well_curve, z):
        result = dispersion_check(one_well_graph, z, well_curve)
        assert result.residual < 1e-2
        assert result.tail_estimate < 1e-2

    def test_trace_test_function(self, one_well_graph, well_curve):
        result = trace_test_function_check(one_well_graph, 4.0, well_curve)
        assert result.residual < 1e-2

    def test_trace_test_function_shift(self, one_well_graph, well_curve):
        with pytest.raises(ValueError):
            trace_test_function_check(one_well_graph, 0.01, well_curve)
