from pathlib import Path

import pytest
from pydantic import ValidationError

from stargraph_ssf.config import Parameters, RunConfig, parse_config, parse_z
from stargraph_ssf.potentials import Sampled, ZeroPotential


def write(tmp_path: Path, text: str, name: str = "run.toml") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParseConfig:
    def test_minimal(self, tmp_path, config_text):
        config = parse_config(write(tmp_path, config_text))
        assert config.tasks == ["levinson", "ssf_curve"]
        assert config.graph.n == 2
        assert all(isinstance(p, ZeroPotential) for p in config.graph.edges)
        assert config.output_dir == Path("out")
        assert config.seed == 7
        assert config.parameters == Parameters()
        assert config.tolerances.residuals.levinson == 0.02

    def test_overrides(self, tmp_path, config_text):
        text = config_text + """
[tolerances]
kappa_grid = 200

[tolerances.residuals]
levinson = 0.05

[parameters]
z_values = [-1.0, [-4.0, 0.5]]
oracle_h = [0.04, 0.02]
"""
        config = parse_config(write(tmp_path, text))
        assert config.tolerances.kappa_grid == 200
        assert config.tolerances.residuals.levinson == 0.05
        assert config.tolerances.residuals.dispersion == 1e-2
        assert config.parameters.z_values == [-1.0, complex(-4.0, 0.5)]
        assert config.parameters.oracle_h == (0.04, 0.02)

    def test_sampled_relative_path(self, tmp_path):
        data = tmp_path / "data"
        data.mkdir()
        (data / "well.csv").write_text("x,V\n0,-2\n0.5,-2\n1,0\n")
        text = """
tasks = ["eigencount"]

[graph]
[[graph.edges]]
kind = "sampled"
csv = "well.csv"

[[graph.edges]]
kind = "zero"
"""
        config = parse_config(write(data, text))
        edge = config.graph.edges[0]
        assert isinstance(edge, Sampled)
        assert edge.spacing == 0.5
        assert edge.values == [-2.0, -2.0, 0.0]

    def test_syntax_error(self, tmp_path):
        with pytest.raises(ValidationError) as e:
            parse_config(write(tmp_path, "tasks = [levinson\n"))
        errors = e.value.errors()
        assert errors[0]["type"] == "config_syntax_error"
        assert errors[0]["loc"] == ("file",)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            parse_config(tmp_path / "absent.toml")


class TestRunConfig:
    def graph(self, n: int = 2) -> dict:
        return {"edges": [{"kind": "zero"}] * n}

    def test_empty_tasks(self):
        with pytest.raises(ValidationError) as e:
            RunConfig(graph=self.graph(), tasks=[])
        assert e.value.errors()[0]["type"] == "no_tasks"
        assert e.value.errors()[0]["loc"][0] == "tasks"

    def test_unknown_task(self):
        with pytest.raises(ValidationError) as e:
            RunConfig(graph=self.graph(), tasks=["plot"])
        assert e.value.errors()[0]["type"] == "literal_error"

    def test_edge_count_mismatch(self):
        with pytest.raises(ValidationError) as e:
            RunConfig(graph={"n": 3, **self.graph(2)}, tasks=["levinson"])
        assert [i["type"] for i in e.value.errors()] == ["edge_count_mismatch"]
        assert e.value.errors()[0]["loc"][0] == "graph"

    def test_single_edge(self):
        with pytest.raises(ValidationError) as e:
            RunConfig(graph=self.graph(1), tasks=["levinson"])
        assert e.value.errors()[0]["type"] == "star_graph_too_small"

    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            RunConfig(
                graph=self.graph(), tasks=["decay_check"], parameters={"decay_t": [16.0]}
            )

    def test_json(self):
        config = RunConfig(
            graph=self.graph(),
            tasks=["oracle_compare"],
            parameters={"z_values": [[1.0, 2.0]]},
        )
        dumped = config.model_dump(mode="json")
        assert dumped["parameters"]["z_values"] == [[1.0, 2.0]]
        assert dumped["output_dir"] == "results"


@pytest.mark.parametrize(
    "value, expected",
    [([1.0, 2.0], complex(1.0, 2.0)), ((0, -1), complex(0.0, -1.0)), (3.0, 3.0)],
)
def test_parse_z(value, expected):
    assert parse_z(value) == expected
