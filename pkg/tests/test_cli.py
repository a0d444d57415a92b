import csv
import json

import pytest
from equilibria import examples
from equilibria.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main


def write_config(path, name, **extra):
    document = examples.example_config(name)
    document.update(extra)
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    root = tmp_path_factory.mktemp("single_arc")
    config = write_config(root / "config.json", "single_arc")
    out = root / "out"
    code = main(["solve", "--config", config, "--out", str(out), "--grid", "512"])
    return code, config, out


def test_solve_uniform(tmp_path):
    config = write_config(tmp_path / "config.json", "uniform")
    out = tmp_path / "out"
    assert main(["solve", "--config", config, "--out", str(out), "-q"]) == EXIT_PASS
    document = json.loads((out / "solution.json").read_text(encoding="utf-8"))
    assert document["solution"]["k"] == 0
    assert document["solution"]["arcs"] == "full"
    assert document["solution"]["capacity"] == pytest.approx(1.0, abs=1e-10)
    assert not (out / "support.json").exists()


def test_solve_single_arc(solved):
    code, _, out = solved
    assert code == EXIT_PASS
    support = json.loads((out / "support.json").read_text(encoding="utf-8"))
    assert support["k"] == 1
    assert support["converged"] is True
    rows = read_csv(out / "density.csv")
    assert list(rows[0]) == ["theta", "f"]
    assert float(rows[0]["f"]) == 0.0
    assert float(rows[-1]["f"]) == 0.0
    assert len(read_csv(out / "potential.csv")) == 4096


def test_solve_json_only(tmp_path):
    config = write_config(
        tmp_path / "config.json", "uniform", output={"formats": ["json"]}
    )
    out = tmp_path / "out"
    assert main(["solve", "--config", config, "--out", str(out)]) == EXIT_PASS
    assert (out / "solution.json").exists()
    assert not (out / "density.csv").exists()


def test_malformed_config(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "config error" in capsys.readouterr().err


def test_oracle_uniform(tmp_path):
    config = write_config(tmp_path / "config.json", "uniform")
    out = tmp_path / "out"
    code = main(["oracle", "--config", config, "--out", str(out), "--grid", "256"])
    assert code == EXIT_PASS
    rows = read_csv(out / "measure.csv")
    assert len(rows) == 256
    for row in rows:
        assert float(row["weight"]) == pytest.approx(1.0 / 256, abs=1e-15)
    document = json.loads((out / "oracle.json").read_text(encoding="utf-8"))
    assert document["arcs"] == "full"


def test_bad_grid_override(tmp_path):
    config = write_config(tmp_path / "config.json", "uniform")
    code = main(["oracle", "--config", config, "--out", str(tmp_path), "--grid", "100"])
    assert code == EXIT_USAGE


def test_verify_stored_solution(solved, tmp_path):
    _, config, out = solved
    solution = str(out / "solution.json")
    code = main(
        ["verify", "--config", config, "--solution", solution, "--out", str(tmp_path)]
    )
    assert code == EXIT_PASS
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["pass"] is True
    assert report["failed"] == []


def test_verify_perturbed_solution(solved, tmp_path):
    _, config, out = solved
    document = json.loads((out / "solution.json").read_text(encoding="utf-8"))
    (alpha, beta), = document["solution"]["arcs"]
    document["solution"]["arcs"] = [[alpha - 1e-2, beta + 1e-2]]
    perturbed = tmp_path / "perturbed.json"
    perturbed.write_text(json.dumps(document), encoding="utf-8")
    code = main(
        [
            "verify",
            "--config",
            config,
            "--solution",
            str(perturbed),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == EXIT_FAIL


def test_verify_missing_solution(solved, tmp_path):
    _, config, _ = solved
    missing = str(tmp_path / "missing.json")
    code = main(["verify", "--config", config, "--solution", missing])
    assert code == EXIT_USAGE


def test_missing_config_flag():
    assert main(["solve"]) == EXIT_USAGE


def test_unknown_command():
    assert main(["plot", "--config", "x.json"]) == EXIT_USAGE
