from __future__ import annotations

import json
import xml.etree.ElementTree as ET

import jsonschema
import pytest

from islandkit.cli import main
from islandkit.config import SEED_ENV, RunConfig, read_config_file, resolve
from islandkit.errors import ConfigurationError
from islandkit.grid_model import save_flow_snapshot, save_topology
from islandkit.reference import island_snapshot
from test_pipeline import SCHEMA


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    out = tmp_path_factory.mktemp("sc")
    assert main(["synth", "--out-dir", str(out), "--seed", "3"]) == 0
    return out


def _inputs(sc):
    return ["--topology", str(sc / "topology.json"), "--flows", str(sc / "flows.csv"), "--waveforms", str(sc / "waveforms.csv")]


def _run(capsys, argv):
    status = main(argv)
    cap = capsys.readouterr()
    return status, cap.out, cap.err


def test_island_happy_path(capsys, scenario):
    status, out, _ = _run(capsys, ["island", *_inputs(scenario), "--case", "4", "--seed", "7"])
    assert status == 0
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    planted = json.loads((scenario / "groups.json").read_text())["islands"]
    assert doc["islands"] == planted
    assert doc["config"]["seed"] == 7


def test_usage_errors_exit_two(capsys, scenario):
    assert main(["island"]) == 2
    assert main(["island", *_inputs(scenario), "--window", "boxcar"]) == 2
    capsys.readouterr()


def test_domain_errors_exit_one(capsys, scenario, tmp_path):
    status, _, err = _run(capsys, ["island", *_inputs(scenario), "--k", "0"])
    assert status == 1 and json.loads(err)["error"] == "E_CONFIG"
    status, _, err = _run(capsys, ["island", "--topology", str(tmp_path / "nope.json"), "--flows", "x.csv"])
    assert status == 1 and json.loads(err)["error"] == "E_FILE_NOT_FOUND"
    status, _, err = _run(capsys, ["island", *_inputs(scenario), "--band", "0.1:90"])
    assert status == 1 and json.loads(err)["error"] == "E_BAND"


def test_coherency_from_waveforms_only(capsys, scenario):
    status, out, _ = _run(capsys, ["coherency", "--waveforms", str(scenario / "waveforms.csv")])
    assert status == 0
    doc = json.loads(out)
    assert doc["k"] == 3
    assert doc["groups"] == json.loads((scenario / "groups.json").read_text())["islands"]


def test_evaluate_reference_balance(capsys, tmp_path):
    topo, snap, _ = island_snapshot("frequency")
    save_topology(topo, tmp_path / "t.json")
    save_flow_snapshot(snap, topo, tmp_path / "f.csv")
    (tmp_path / "a.json").write_text(json.dumps({"islands": [["I1"], ["I2"]]}))
    status, out, _ = _run(
        capsys, ["evaluate", "--topology", str(tmp_path / "t.json"), "--flows", str(tmp_path / "f.csv"), "--assignment", str(tmp_path / "a.json")]
    )
    assert status == 0
    doc = json.loads(out)
    assert abs(doc["balance"]["sum_abs_dP_MW"] - 857) <= 1
    assert abs(doc["balance"]["sum_abs_dQ_Mvar"] - 1349) <= 1
    assert doc["cut_set"] == [{"id": "T1", "from": "I1", "to": "I2"}]


def test_oracle_command(capsys, tmp_path):
    assert main(["synth", "--out-dir", str(tmp_path), "--group-sizes", "3,3", "--freqs", "0.3,0.6"]) == 0
    capsys.readouterr()
    base = ["--topology", str(tmp_path / "topology.json"), "--flows", str(tmp_path / "flows.csv")]
    status, out, _ = _run(capsys, ["oracle", *base, "--objective", "disruption", "--k", "2"])
    assert status == 0
    assert json.loads(out)["groups"] == [["B1", "B2", "B3"], ["B4", "B5", "B6"]]
    status, _, err = _run(capsys, ["oracle", *base, "--objective", "disruption"])
    assert status == 1


def test_exports(capsys, scenario, tmp_path):
    dot, gml, csv_path = tmp_path / "s.dot", tmp_path / "s.graphml", tmp_path / "cut.csv"
    status, out, _ = _run(
        capsys,
        ["island", *_inputs(scenario), "--out", str(tmp_path / "s.json"), "--dot", str(dot), "--graphml", str(gml), "--cut-csv", str(csv_path)],
    )
    assert status == 0 and out == ""
    sol = json.loads((tmp_path / "s.json").read_text())
    n_cut = len(sol["cut_set"])
    assert dot.read_text().count("style=dashed") == n_cut
    root = ET.fromstring(gml.read_text())
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    assert len(root.findall(".//g:node", ns)) == 12
    assert len(csv_path.read_text().splitlines()) == n_cut + 1
    status, out, _ = _run(
        capsys, ["export", "--solution", str(tmp_path / "s.json"), "--topology", str(scenario / "topology.json"), "--format", "csv"]
    )
    assert status == 0 and out == csv_path.read_text()


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tuned\ncase = 3\nalpha = 0.25\nseed = 5\nband = 0.2:0.9\n")
    file_values = read_config_file(cfg)
    run = resolve(file_values, {"seed": 9}, env={SEED_ENV: "1"})
    assert (run.case, run.alpha, run.seed, run.band) == (3, 0.25, 9, (0.2, 0.9))
    assert resolve(file_values, {}, env={SEED_ENV: "1"}).seed == 5
    assert resolve({}, {}, env={SEED_ENV: "11"}).seed == 11
    assert resolve({}, {}, env={}) == RunConfig()
    cfg.write_text("colour = blue\n")
    with pytest.raises(ConfigurationError):
        read_config_file(cfg)


def test_env_seed_reaches_output(capsys, scenario, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "123")
    status, out, _ = _run(capsys, ["island", *_inputs(scenario)])
    assert status == 0 and json.loads(out)["config"]["seed"] == 123


def test_layers_flag_overrides_case(capsys, scenario):
    status, out, _ = _run(capsys, ["island", *_inputs(scenario), "--layers", "p,q", "--stage-one", "freq"])
    assert status == 0
    doc = json.loads(out)
    assert doc["config"]["layers"] == ["active", "reactive"]
    assert doc["stage_one"]["k"] == 3
