import pytest
from pydantic import ValidationError
from pydantic_core import PydanticCustomError

from stargraph_ssf.errors import (
    ConfigSyntaxError,
    DimensionOverflow,
    EdgeCountMismatch,
    EigenvalueHit,
    InvalidPotentialGrid,
    JostZero,
    NoTasks,
    NotConverged,
    SpectralError,
    StarGraphTooSmall,
    TrustRegionExceeded,
)


@pytest.mark.parametrize("count", [0, 1])
def test_star_graph_too_small(count):
    error = StarGraphTooSmall({"input": count})
    assert error.type == "star_graph_too_small"
    assert error.message() == f"edges: A star graph needs at least 2 edges, got {count}."
    assert error.error_details.get("loc") == ("edges",)
    assert error.error_details.get("input") == count


def test_edge_count_mismatch():
    error = EdgeCountMismatch({"input": 3, "found": 2})
    assert error.type == "edge_count_mismatch"
    assert error.message() == "n: Graph declares 3 edges but lists 2 potentials."
    assert (
        error.message_template
        == "n: Graph declares {input} edges but lists {found} potentials."
    )
    assert error.error_details.get("loc") == ("n",)


def test_invalid_potential_grid():
    error = InvalidPotentialGrid(
        {"loc": "csv", "input": 0.5, "reason": "x must start at 0"}
    )
    assert error.type == "invalid_potential_grid"
    assert error.message() == "csv: Invalid potential grid, x must start at 0."
    assert error.error_details.get("loc") == ("csv",)


def test_no_tasks():
    error = NoTasks({"input": []})
    assert error.type == "no_tasks"
    assert error.message() == "tasks: At least one task must be requested."
    assert error.error_details.get("loc") == ("tasks",)


def test_config_syntax_error():
    error = ConfigSyntaxError({"input": "run.toml", "detail": "line 2"})
    assert error.type == "config_syntax_error"
    assert error.message() == "run.toml: Configuration is not valid TOML (line 2)."
    assert error.error_details.get("loc") == ("run.toml",)


@pytest.mark.parametrize("edge", [0, 2])
def test_jost_zero(edge):
    error = JostZero({"loc": edge, "input": 1e-12, "zeta": 0.5})
    assert error.type == "jost_zero"
    assert error.message().startswith(f"edge {edge}: Jost function")
    assert error.error_details.get("loc") == (edge,)


@pytest.mark.parametrize(
    "error, type_",
    [
        (EigenvalueHit({"input": -1.0, "value": 0.0}), "eigenvalue_hit"),
        (NotConverged({"input": [1, 2], "levels": [(30, 0.02)]}), "not_converged"),
        (
            TrustRegionExceeded({"input": 1e4, "value": 1.0, "limit": 0.1}),
            "trust_region_exceeded",
        ),
        (DimensionOverflow({"input": 10, "limit": 5}), "dimension_overflow"),
    ],
)
def test_numerical_errors(error, type_):
    assert isinstance(error, SpectralError)
    assert isinstance(error, PydanticCustomError)
    assert error.type == type_
    with pytest.raises(SpectralError):
        raise error


def test_error_details_build_validation_error():
    errors = [
        StarGraphTooSmall({"input": 1}).error_details,
        EdgeCountMismatch({"input": 3, "found": 1}).error_details,
    ]
    exc = ValidationError.from_exception_data(title="StarGraph", line_errors=errors)
    assert sorted(e["type"] for e in exc.errors()) == [
        "edge_count_mismatch",
        "star_graph_too_small",
    ]
    assert sorted(e["loc"] for e in exc.errors()) == [("edges",), ("n",)]
