"""Tasks of the command line driver.

Each task takes a `RunConfig` and the (possibly scaled) `Tolerances` and returns a
`TaskResult`: the rows of `<task>.csv`, a JSON payload for `<task>.json` and the
`Check` records aggregated into `summary.json`. Tasks share no state; the
`TASKS` registry maps the names accepted by `RunConfig.tasks` to the functions.
"""

from __future__ import annotations

import math
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, computed_field

from stargraph_ssf.config import RunConfig
from stargraph_ssf.graph_ops import (
    as_spectral_param,
    boundary_data,
    edgewise_trace_formula,
    krein_trace,
    perturbation_determinant,
    trace_resolvent_diff_formula,
)
from stargraph_ssf.jost import half_line_trace
from stargraph_ssf.models import StarGraph
from stargraph_ssf.oracle import (
    discretize,
    discretize_half_line,
    free_half_line,
    krein_rank2_norm,
    oracle_determinant,
    oracle_eigencount,
    oracle_trace_resolvent_diff,
    richardson,
    trace_norm_decay,
)
from stargraph_ssf.spectrum import (
    bargmann_bound,
    classify_zero_energy,
    count_negative_eigenvalues,
    zero_is_never_eigenvalue_check,
)
from stargraph_ssf.ssf import (
    dispersion_check,
    levinson_check,
    low_energy_exponent,
    phase_symmetry_defect,
    spectral_shift_curve,
    trace_test_function_check,
    weighted_l1,
    xi_at,
)
from stargraph_ssf.tolerances import Tolerances

Provenance = Literal["formula", "oracle", "formula-vs-oracle"]
Cell = Any


class Check(BaseModel, frozen=True):
    """
    One number compared against a reference.

    Attributes:
        name: What was compared.
        value: The computed value.
        reference: The value it was compared with, if any.
        residual: The discrepancy that is tested.
        tolerance: The largest admissible residual.
        provenance: Where `value` and `reference` come from.
    """

    name: str
    value: float
    reference: Optional[float] = None
    residual: float
    tolerance: float
    provenance: Provenance

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tolerance


class TaskResult(BaseModel, frozen=True):
    """
    The output of one task.

    Attributes:
        task: The task name.
        columns: The CSV header.
        rows: The CSV rows.
        payload: The JSON document of the task.
        checks: The checks reported in `summary.json`.
        error: The error message if the task failed.
    """

    task: str
    columns: List[str] = []
    rows: List[List[Cell]] = []
    payload: Dict[str, Any] = {}
    checks: List[Check] = []
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)


def _relative(value: complex, reference: complex) -> float:
    return float(abs(value - reference) / max(abs(reference), 1e-300))


def _levels(config: RunConfig) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """The coarse and fine (L, h) levels; the fine level also extends L by a third."""
    L = config.parameters.oracle_L
    coarse, fine = config.parameters.oracle_h
    return (L, coarse), (4 * L / 3, fine)


def _sweep_graphs(config: RunConfig) -> List[Tuple[str, StarGraph]]:
    graphs = [("config", config.graph)]
    for i in range(config.parameters.sweep_count):
        graphs.append((f"random_{config.seed + i}", StarGraph.random_wells(config.seed + i)))
    return graphs


def ssf_curve_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    g = config.graph
    bound_states = count_negative_eigenvalues(g, tol=tol)
    curve = spectral_shift_curve(
        g, bound_states, k_anchor=config.parameters.k_anchor, tol=tol
    )
    rows = [
        [lam, k, eta, xi]
        for lam, k, eta, xi in zip(curve.lambdas, curve.k, curve.eta, curve.xi)
    ]
    symmetry = phase_symmetry_defect(g, config.parameters.phase_lambda**0.5, tol)
    checks = [
        Check(
            name="phase_symmetry",
            value=symmetry,
            residual=symmetry,
            tolerance=tol.residuals.free_identity,
            provenance="formula",
        ),
    ]
    payload = {
        "curve": curve.model_dump(mode="json"),
        "bound_states": bound_states.model_dump(mode="json"),
        "weighted_l1": weighted_l1(curve),
    }
    return TaskResult(
        task="ssf_curve",
        columns=["lambda", "k", "eta", "xi"],
        rows=rows,
        payload=payload,
        checks=checks,
    )


def levinson_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    rows, checks, payload = [], [], {}
    for label, g in _sweep_graphs(config):
        result = levinson_check(g, tol=tol)
        rows.append(
            [label, result.xi_at_zero_plus, result.N, result.m, result.predicted,
             result.residual]
        )
        checks.append(
            Check(
                name=f"levinson[{label}]",
                value=result.xi_at_zero_plus,
                reference=result.predicted,
                residual=result.residual,
                tolerance=tol.residuals.levinson,
                provenance="formula",
            )
        )
        payload[label] = result.model_dump(mode="json")
    return TaskResult(
        task="levinson",
        columns=["graph", "xi_at_zero_plus", "N", "m", "predicted", "residual"],
        rows=rows,
        payload=payload,
        checks=checks,
    )


def _kappa_checks(
    label: str, kappas: List[float], oracle_values: List[float], L: float, tol: Tolerances
) -> List[Check]:
    checks = []
    for kappa in kappas:
        if kappa * L <= 8 or not oracle_values:
            continue
        eigenvalue = -kappa * kappa
        nearest = min(oracle_values, key=lambda e: abs(e - eigenvalue))
        checks.append(
            Check(
                name=f"eigenvalue[{label}, kappa={kappa:.6g}]",
                value=eigenvalue,
                reference=nearest,
                residual=_relative(eigenvalue, nearest),
                tolerance=tol.residuals.eigenvalue,
                provenance="formula-vs-oracle",
            )
        )
    return checks


def eigencount_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    levels = _levels(config)
    rows, checks, payload = [], [], {}
    for label, g in _sweep_graphs(config):
        bound_states = count_negative_eigenvalues(g, tol=tol)
        oracle = oracle_eigencount(g, levels, tol)
        for kappa in bound_states.kappas:
            rows.append([label, kappa, -kappa * kappa])
        checks.append(
            Check(
                name=f"eigencount[{label}]",
                value=bound_states.N,
                reference=oracle.N,
                residual=abs(bound_states.N - oracle.N),
                tolerance=0.0,
                provenance="formula-vs-oracle",
            )
        )
        checks += _kappa_checks(label, bound_states.kappas, oracle.values, levels[0][0], tol)
        payload[label] = {
            "bound_states": bound_states.model_dump(mode="json"),
            "oracle": oracle.model_dump(mode="json"),
            "bargmann_bound": bargmann_bound(g),
        }
    return TaskResult(
        task="eigencount",
        columns=["graph", "kappa", "eigenvalue"],
        rows=rows,
        payload=payload,
        checks=checks,
    )


def resonance_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    g = config.graph
    report = classify_zero_energy(g, tol=tol)
    witness = zero_is_never_eigenvalue_check(g, report, tol)
    fit = low_energy_exponent(g, config.parameters.fit_window, tol=tol)
    expected = report.m - 1
    rows = [[j, w, d] for j, (w, d) in enumerate(zip(report.w0, report.dtheta0))]
    checks = [
        Check(
            name="low_energy_exponent",
            value=fit.slope,
            reference=expected,
            residual=abs(fit.slope - expected),
            tolerance=tol.residuals.low_energy_slope,
            provenance="formula",
        ),
        Check(
            name="zero_not_eigenvalue",
            value=min(witness.limits, default=1.0),
            residual=0.0 if witness.holds else math.inf,
            tolerance=0.0,
            provenance="formula",
        ),
    ]
    return TaskResult(
        task="resonance",
        columns=["edge", "w0", "dtheta0"],
        rows=rows,
        payload={
            "report": report.model_dump(mode="json"),
            "witness": witness.model_dump(mode="json"),
            "low_energy_fit": fit.model_dump(mode="json"),
        },
        checks=checks,
    )


def trace_formula_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    g = config.graph
    (L0, h0), (L1, h1) = _levels(config)
    coarse, fine = discretize(g, L0, h0, tol), discretize(g, L1, h1, tol)
    rows, checks = [], []
    for z in config.parameters.z_values:
        formula = trace_resolvent_diff_formula(g, z, tol)
        krein = -krein_trace(g, z, tol=tol)
        oracle = richardson(
            oracle_trace_resolvent_diff(coarse, coarse.free(), z, tol, config.seed),
            oracle_trace_resolvent_diff(fine, fine.free(), z, tol, config.seed),
        )
        residual = _relative(formula, oracle)
        rows.append(
            [z.real, z.imag, formula.real, formula.imag, oracle.real, oracle.imag,
             krein.real, krein.imag, residual]
        )
        checks.append(
            Check(
                name=f"trace_formula[z={z}]",
                value=abs(formula),
                reference=abs(oracle),
                residual=residual,
                tolerance=tol.residuals.trace_formula,
                provenance="formula-vs-oracle",
            )
        )
        checks.append(
            Check(
                name=f"krein_trace[z={z}]",
                value=abs(krein),
                reference=abs(formula),
                residual=_relative(krein, formula),
                tolerance=tol.residuals.trace_formula,
                provenance="formula",
            )
        )
        if not boundary_data(g, as_spectral_param(z), False, tol).pole:
            edgewise = edgewise_trace_formula(g, z, tol)
            checks.append(
                Check(
                    name=f"edgewise_form[z={z}]",
                    value=abs(edgewise),
                    reference=abs(formula),
                    residual=_relative(edgewise, formula),
                    tolerance=tol.residuals.trace_formula,
                    provenance="formula",
                )
            )
    return TaskResult(
        task="trace_formula_check",
        columns=["z_re", "z_im", "formula_re", "formula_im", "oracle_re", "oracle_im",
                 "krein_re", "krein_im", "residual"],
        rows=rows,
        payload={"levels": [[L0, h0], [L1, h1]]},
        checks=checks,
    )


def dispersion_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    g = config.graph
    bound_states = count_negative_eigenvalues(g, tol=tol)
    curve = spectral_shift_curve(
        g, bound_states, k_anchor=config.parameters.k_anchor, tol=tol
    )
    dispersion = dispersion_check(g, config.parameters.z_dispersion, curve, tol)
    test = trace_test_function_check(g, config.parameters.trace_c, curve, tol)
    rows = [
        ["dispersion", dispersion.integral.real, dispersion.integral.imag,
         dispersion.log_det.real, dispersion.log_det.imag, dispersion.residual],
        ["trace_test_function", test.integral, 0.0, test.formula, 0.0, test.residual],
    ]
    checks = [
        Check(
            name="dispersion",
            value=abs(dispersion.integral),
            reference=abs(dispersion.log_det),
            residual=dispersion.residual,
            tolerance=tol.residuals.dispersion,
            provenance="formula",
        ),
        Check(
            name="trace_test_function",
            value=test.integral,
            reference=test.formula,
            residual=test.residual,
            tolerance=tol.residuals.trace_test_function,
            provenance="formula",
        ),
    ]
    return TaskResult(
        task="dispersion_check",
        columns=["identity", "integral_re", "integral_im", "reference_re",
                 "reference_im", "residual"],
        rows=rows,
        payload={
            "dispersion": dispersion.model_dump(mode="json"),
            "trace_test_function": test.model_dump(mode="json"),
        },
        checks=checks,
    )


def decay_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    g = config.graph
    params = config.parameters
    fits = []
    for h in (params.decay_h, params.decay_h / 2):
        d = discretize(g, params.decay_L, h, tol)
        fits.append(trace_norm_decay(d, d.free(), params.decay_t))
    coarse, fine = fits
    rank2 = [krein_rank2_norm(g, t, params.decay_L, tol=tol) for t in params.decay_t]
    rows = [
        [t, a, b, r]
        for t, a, b, r in zip(params.decay_t, coarse.norms, fine.norms, rank2)
    ]
    if fine.exact_zero:
        checks = [
            Check(
                name="decay_exact_zero",
                value=0.0,
                residual=max(fine.norms),
                tolerance=0.0,
                provenance="oracle",
            )
        ]
    else:
        assert coarse.slope is not None and fine.slope is not None
        checks = [
            Check(
                name="decay_slope",
                value=fine.slope,
                residual=fine.slope,
                tolerance=tol.residuals.decay_slope,
                provenance="oracle",
            ),
            Check(
                name="decay_stability",
                value=fine.slope,
                reference=coarse.slope,
                residual=abs(fine.slope - coarse.slope),
                tolerance=tol.residuals.decay_stability,
                provenance="oracle",
            ),
        ]
    return TaskResult(
        task="decay_check",
        columns=["t", "norm_coarse", "norm_fine", "rank2_norm"],
        rows=rows,
        payload={
            "coarse": coarse.model_dump(mode="json"),
            "fine": fine.model_dump(mode="json"),
            "rank2_norms": rank2,
        },
        checks=checks,
    )


def oracle_compare_task(config: RunConfig, tol: Tolerances) -> TaskResult:
    """
    Compare the formulas with the finite-difference oracle.

    The determinant is compared at every `z_values` point and at
    `phase_lambda + i phase_epsilon`, where the oracle and the formula are
    evaluated at the same complex point and their arguments must agree. The
    boundary value arg D(phase_lambda + i0) is checked against pi xi(phase_lambda)
    read off the unwrapped phase curve. The half-line trace closes the comparison.
    """
    g = config.graph
    params = config.parameters
    (L0, h0), (L1, h1) = _levels(config)
    coarse, fine = discretize(g, L0, h0, tol), discretize(g, L1, h1, tol)
    rows, checks, payload = [], [], {}
    points = list(params.z_values) + [complex(params.phase_lambda, params.phase_epsilon)]
    for z in points:
        formula = perturbation_determinant(g, z, tol=tol).value
        oracle = richardson(
            oracle_determinant(coarse.free(), coarse, z),
            oracle_determinant(fine.free(), fine, z),
        )
        residual = _relative(oracle, formula)
        rows.append(["determinant", z.real, z.imag, formula.real, formula.imag,
                     oracle.real, oracle.imag, residual])
        payload[f"determinant[z={z}]"] = {
            "formula": [formula.real, formula.imag],
            "oracle": [oracle.real, oracle.imag],
            "residual": residual,
        }
        if z.imag > 0:
            phase = abs(float(np.angle(oracle / formula)))
            checks.append(
                Check(
                    name=f"determinant_phase[z={z}]",
                    value=float(np.angle(formula)),
                    reference=float(np.angle(oracle)),
                    residual=phase,
                    tolerance=tol.residuals.phase,
                    provenance="formula-vs-oracle",
                )
            )
        else:
            checks.append(
                Check(
                    name=f"determinant[z={z}]",
                    value=abs(formula),
                    reference=abs(oracle),
                    residual=residual,
                    tolerance=tol.residuals.determinant,
                    provenance="formula-vs-oracle",
                )
            )
    lam = params.phase_lambda
    curve = spectral_shift_curve(
        g, count_negative_eigenvalues(g, tol=tol), k_anchor=params.k_anchor, tol=tol
    )
    boundary = perturbation_determinant(g, lam, tol=tol).value
    eta = math.pi * xi_at(curve, lam)
    argument = float(np.angle(boundary))
    defect = abs(float(np.angle(np.exp(1j * (eta - argument)))))
    payload[f"eta_phase[lambda={lam}]"] = {"arg_D": argument, "eta": eta, "residual": defect}
    checks.append(
        Check(
            name=f"eta_phase[lambda={lam}]",
            value=argument,
            reference=eta,
            residual=defect,
            tolerance=tol.residuals.phase,
            provenance="formula",
        )
    )
    p = next((p for p in g.edges if not p.is_zero), g.edges[0])
    free = (free_half_line(L0, h0, tol), free_half_line(L1, h1, tol))
    half = (discretize_half_line(p, L0, h0, tol), discretize_half_line(p, L1, h1, tol))
    for z in params.z_values:
        formula = half_line_trace(p, z, tol)
        oracle = richardson(
            oracle_trace_resolvent_diff(half[0], free[0], z, tol, config.seed),
            oracle_trace_resolvent_diff(half[1], free[1], z, tol, config.seed),
        )
        residual = _relative(oracle, formula) if abs(formula) > 0 else abs(oracle)
        rows.append(["half_line_trace", z.real, z.imag, formula.real, formula.imag,
                     oracle.real, oracle.imag, residual])
        checks.append(
            Check(
                name=f"half_line_trace[z={z}]",
                value=abs(formula),
                reference=abs(oracle),
                residual=residual,
                tolerance=tol.residuals.trace_formula,
                provenance="formula-vs-oracle",
            )
        )
    return TaskResult(
        task="oracle_compare",
        columns=["quantity", "z_re", "z_im", "formula_re", "formula_im", "oracle_re",
                 "oracle_im", "residual"],
        rows=rows,
        payload=payload,
        checks=checks,
    )


TaskFunction = Callable[[RunConfig, Tolerances], TaskResult]

TASKS: Dict[str, TaskFunction] = {
    "ssf_curve": ssf_curve_task,
    "levinson": levinson_task,
    "eigencount": eigencount_task,
    "resonance": resonance_task,
    "trace_formula_check": trace_formula_task,
    "dispersion_check": dispersion_task,
    "decay_check": decay_task,
    "oracle_compare": oracle_compare_task,
}
