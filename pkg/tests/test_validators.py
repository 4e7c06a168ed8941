from typing import Any, Dict, Optional

import numpy as np
import pytest
from pydantic import ValidationError

from stargraph_ssf.errors import InvalidPotentialGrid
from stargraph_ssf.validators import (
    check_sampled_grid,
    load_sampled_csv,
    read_potential_csv,
    validate_breakpoints,
    validate_tasks,
)


class MockInfo:
    def __init__(self, data: Dict[str, Any], context: Optional[Any] = None):
        self.data = data
        self.context = context


def test_validate_breakpoints():
    points = [(0.0, -1.0), (0.5, -2.0), (1.0, 0.0)]
    assert validate_breakpoints(points) == points


@pytest.mark.parametrize(
    "points, reasons",
    [
        ([(-0.5, 1.0), (1.0, 0.0)], ["x must be >= 0"]),
        ([(0.0, 1.0), (0.0, 0.0)], ["x must be strictly increasing"]),
        (
            [(-1.0, 1.0), (0.5, 0.0), (0.2, 0.0)],
            ["x must be >= 0", "x must be strictly increasing"],
        ),
    ],
)
def test_validate_breakpoints_errors(points, reasons):
    with pytest.raises(ValidationError) as e:
        validate_breakpoints(points)
    errors = e.value.errors()
    assert [i["type"] for i in errors] == ["invalid_potential_grid"] * len(reasons)
    assert [i["msg"] for i in errors] == [
        f"breakpoints: Invalid potential grid, {r}." for r in reasons
    ]


@pytest.mark.parametrize(
    "xs, reason",
    [
        ([0.0], "need at least 2 rows"),
        ([0.1, 0.2, 0.3], "x must start at 0"),
        ([0.0, 0.2, 0.1], "x must be strictly increasing"),
        ([0.0, 0.1, 0.3], "x must be uniform"),
    ],
)
def test_check_sampled_grid_errors(xs, reason):
    error = check_sampled_grid(xs)
    assert isinstance(error, InvalidPotentialGrid)
    assert error.context["reason"] == reason
    assert error.error_details.get("loc") == ("csv",)


def test_check_sampled_grid():
    assert check_sampled_grid(np.linspace(0, 2, 41)) is None


class TestCsv:
    def test_read_potential_csv_header(self, tmp_path):
        path = tmp_path / "well.csv"
        path.write_text("x,V\n0,-1\n0.5,-1\n1,0\n")
        xs, vs = read_potential_csv(path)
        assert xs.tolist() == [0.0, 0.5, 1.0]
        assert vs.tolist() == [-1.0, -1.0, 0.0]

    def test_read_potential_csv_no_header(self, tmp_path):
        path = tmp_path / "well.csv"
        path.write_text("0,2\n0.25,1\n")
        xs, vs = read_potential_csv(path)
        assert xs.tolist() == [0.0, 0.25]
        assert vs.tolist() == [2.0, 1.0]

    def test_load_sampled_csv_relative(self, tmp_path):
        (tmp_path / "well.csv").write_text("0,-1\n0.5,-1\n1,0\n")
        info = MockInfo({}, {"base_dir": tmp_path})
        data = load_sampled_csv({"kind": "sampled", "csv": "well.csv"}, info)
        assert data == {"kind": "sampled", "spacing": 0.5, "values": [-1.0, -1.0, 0.0]}

    def test_load_sampled_csv_passthrough(self):
        data = {"kind": "sampled", "spacing": 0.1, "values": [1.0, 0.0]}
        assert load_sampled_csv(data, MockInfo({})) is data

    def test_load_sampled_csv_invalid(self, tmp_path):
        (tmp_path / "bad.csv").write_text("0.5,-1\n1,0\n")
        with pytest.raises(ValidationError) as e:
            load_sampled_csv({"csv": str(tmp_path / "bad.csv")}, MockInfo({}))
        assert e.value.errors()[0]["type"] == "invalid_potential_grid"
        assert e.value.errors()[0]["loc"] == ("csv",)


def test_validate_tasks():
    assert validate_tasks(["levinson", "ssf_curve", "levinson"]) == [
        "levinson",
        "ssf_curve",
    ]


def test_validate_tasks_empty():
    with pytest.raises(ValidationError) as e:
        validate_tasks([])
    assert e.value.errors()[0]["type"] == "no_tasks"
