import json
import os

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cylflow import cli
from cylflow.config import ConfigError, RunConfig, apply_overrides, parse_config_text
from cylflow.io import format_float, sha256_file, write_csv
from cylflow.scenarios import resolve_scenario, run_scenario
from cylflow.service.app import app
from cylflow.service.models import RunRequest


# -- configuration ----------------------------------------------------------


def test_parse_config_basic():
    cfg = parse_config_text("scenario = spectrum\nn = 2\nk = 1\n# a comment\nseed = 7")
    assert resolve_scenario(cfg.scenario) == "spectrum-validate"
    assert (cfg.n, cfg.k, cfg.seed) == (2, 1, 7)


def test_parse_config_errors_name_the_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("n = 2\nwhat is this\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("mystery = 4\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("n = banana\n")


def test_validation_names_missing_field():
    cfg = parse_config_text("scenario = spectrum-validate\nk = 1")
    cfg.validate()
    with pytest.raises(ConfigError, match="'n'"):
        cfg.require("n")


def test_validation_range_error():
    cfg = parse_config_text("scenario = spectrum-validate\nn = 3\nk = 5")
    with pytest.raises(ConfigError, match="k"):
        cfg.validate()


def test_resolve_scenario_prefix_and_errors():
    assert resolve_scenario("surgery") == "surgery-table"
    with pytest.raises(ConfigError, match="unknown scenario"):
        resolve_scenario("does-not-exist")
    with pytest.raises(ConfigError, match="ambiguous"):
        resolve_scenario("non")  # nonconcentration vs nondegenerate-rmcf


def test_apply_overrides_skips_none():
    cfg = RunConfig(scenario="surgery-table")
    apply_overrides(cfg, {"n": None, "seed": 3})
    assert cfg.seed == 3 and cfg.n is None


# -- output files ------------------------------------------------------------


def test_csv_format(tmp_path):
    path = str(tmp_path / "out.csv")
    write_csv(path, ["a", "b"], [(1.0 / 3.0, 2), (float("nan"), -1)])
    text = open(path, "rb").read().decode()
    assert text.endswith("\n") and "\r" not in text
    lines = text.splitlines()
    assert lines[0] == "a,b"
    assert lines[1].startswith("0.3333333333333333")  # 17 significant digits
    assert lines[2].split(",")[0] == "nan"
    assert format_float(0.1) == "0.10000000000000001"


def test_run_scenario_manifest_lists_files_with_checksums(tmp_path):
    cfg = RunConfig(scenario="surgery-table", out=str(tmp_path))
    manifest = run_scenario(cfg)
    out_dir = tmp_path / "surgery-table"
    assert manifest["passed"]
    for name, digest in manifest["files"].items():
        assert sha256_file(str(out_dir / name)) == digest
    on_disk = json.load(open(out_dir / "manifest.json"))
    assert on_disk["files"] == manifest["files"]
    # every emitted csv is listed
    csvs = {p for p in os.listdir(out_dir) if p.endswith(".csv")}
    assert csvs == set(manifest["files"])


def test_neckpinch_scenario_finds_the_neck(tmp_path):
    cfg = RunConfig(scenario="neckpinch-mcf", n=2, k=1, grid_points=400, out=str(tmp_path))
    manifest = run_scenario(cfg)
    assert manifest["passed"], manifest["checks"]
    assert abs(manifest["metrics"]["pinch_location"]) < 0.05


def test_determinism_byte_identical(tmp_path):
    digests = []
    for sub in ("a", "b"):
        cfg = RunConfig(
            scenario="monotonicity-sweep",
            n=2,
            k=1,
            grid_points=120,
            horizon=2.0,
            seed=11,
            out=str(tmp_path / sub),
        )
        manifest = run_scenario(cfg)
        digests.append(manifest["files"])
    assert digests[0] == digests[1]


def test_determinism_seed_changes_output(tmp_path):
    files = []
    for seed in (1, 2):
        cfg = RunConfig(
            scenario="monotonicity-sweep",
            n=2,
            k=1,
            grid_points=120,
            horizon=2.0,
            seed=seed,
            out=str(tmp_path / str(seed)),
        )
        files.append(run_scenario(cfg)["files"]["sweep_verdicts.csv"])
    assert files[0] != files[1]


# -- service -----------------------------------------------------------------


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_service_health_and_registry(client):
    assert client.get("/health").json()["status"] == "ok"
    names = {s["name"] for s in client.get("/scenarios").json()}
    assert "nondegenerate-rmcf" in names and len(names) == 10


def test_service_run_endpoint(client, tmp_path):
    body = RunRequest(scenario="surgery-table", out=str(tmp_path)).model_dump()
    response = client.post("/runs", json=body)
    assert response.status_code == 200
    payload = response.json()
    assert payload["passed"] is True
    assert payload["files"]


def test_service_rejects_bad_config(client):
    response = client.post("/runs", json={"scenario": "spectrum-validate", "n": 3, "k": 9})
    assert response.status_code == 422
    response = client.post("/runs", json={"scenario": "nope"})
    assert response.status_code == 422


def test_service_spectrum_endpoint(client):
    response = client.post("/spectrum", json={"n": 2, "k": 1, "cutoff": 0.0})
    payload = response.json()
    assert payload["rho"] == pytest.approx(np.sqrt(2.0))
    eigen = sorted({m["eigenvalue"] for m in payload["modes"]})
    assert eigen == [-1.0, -0.5, 0.0]


def test_service_cusp_and_surgery_endpoints(client):
    response = client.post("/cusp-profile", json={"n": 2, "k": 1, "y": [0.05]})
    assert response.json()["v"][0] == pytest.approx(0.020427, abs=1e-6)
    assert client.get("/surgery/2/1").json()["delta_chi"] == 2
    assert client.get("/surgery/3/3").status_code == 422


# -- CLI ---------------------------------------------------------------------


def test_cli_runs_scenario(tmp_path, capsys):
    code = cli.main(["surgery-table", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == cli.EXIT_OK
    assert "[PASS]" in out and "result: all checks passed" in out


def test_cli_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("scenario = surgery-table\nseed = 4\n")
    code = cli.main(
        ["surgery-table", "--config", str(config), "--out", str(tmp_path / "runs")]
    )
    assert code == cli.EXIT_OK


def test_cli_config_error_exit_code(tmp_path, capsys):
    code = cli.main(["spectrum-validate", "--n", "3", "--k", "7", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG_ERROR
    assert "configuration" in capsys.readouterr().err


def test_cli_bad_config_file(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("definitely not = valid = config\n")
    code = cli.main(["surgery-table", "--config", str(config)])
    assert code == cli.EXIT_CONFIG_ERROR
