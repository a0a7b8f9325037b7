"""Command line and HTTP surface: outputs, exit codes, determinism."""
from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest
from fastapi.testclient import TestClient

from haloslopes.cli import run
from haloslopes.service import app, dispatch
from haloslopes.upop import _thread_cap


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dims_example(capsys):
    code, out, _ = _run(capsys, "dims", "--n", "3", "--t", "2,1,0")
    assert code == 0
    assert json.loads(out) == {"d_t": 8}


def test_lower_bound_example(capsys):
    code, out, _ = _run(capsys, "lower-bound", "--n", "3", "--p", "2", "--h", "1", "--vTa", "1/4", "--Mmax", "5")
    assert code == 0
    pts = json.loads(out)["points"]
    assert pts[:2] == [["1/1", "0/1"], ["4/1", "3/4"]]


NP_ARGS = ["np", "--p", "3", "--n", "2", "--h", "1", "--weight", "0,0", "--conductors", "2,1",
           "--degree-cap", "6", "--precision", "8", "--Nmax", "10"]


def test_np_refuses_uncertified_without_flag(capsys):
    code, out, err = _run(capsys, *NP_ARGS)
    assert code == 3
    assert out == ""
    assert "allow-floors" in err


def test_np_with_floors_reports_verdict(capsys, tmp_path):
    plot = tmp_path / "np.txt"
    code, out, _ = _run(capsys, *NP_ARGS, "--allow-floors", "--plot-data", str(plot))
    assert code == 0
    body = json.loads(out)
    assert body["uses_floors"] is True
    assert body["lower_bound"]["verdict"] in ("holds", "violated", "undecided")
    assert body["polygon"]["vertices"][0] == [0, "0/1"]
    rows = plot.read_text().splitlines()
    assert rows[0] == "0 0/1" and all(len(r.split()) == 2 for r in rows)


def test_np_certified_run(capsys):
    code, out, _ = _run(capsys, "np", "--p", "3", "--weight", "0,0", "--conductors", "2,1",
                        "--degree-cap", "14", "--precision", "40", "--Nmax", "6")
    assert code == 0
    body = json.loads(out)
    assert body["certified_upto"] == 6
    assert body["lower_bound"]["lies_above"] is True
    assert body["lower_bound"]["verdict"] == "holds"


def test_output_is_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"out{k}.json"
        code = run(["charpoly", "--p", "3", "--weight", "2,0", "--conductors", "2,1", "--degree-cap", "8",
                    "--precision", "20", "--Nmax", "6", "--allow-floors", "--global-data", "h1_twisted",
                    "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b'"' in outs[0] and b"0." not in outs[0]


def test_unknown_command(capsys):
    code, _, err = _run(capsys, "frobnicate")
    assert code == 64
    assert "unknown command" in err
    assert _run(capsys)[0] == 64


def test_bad_flag_is_a_usage_error(capsys):
    assert _run(capsys, "dims", "--n", "x")[0] == 64


def test_malformed_config(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(capsys, "dims", "--config", str(bad))[0] == 65
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"n": 2, "t": "abc"}))
    assert _run(capsys, "dims", "--config", str(wrong))[0] == 65
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"command": "roche"}))
    assert _run(capsys, "dims", "--config", str(other))[0] == 65


def test_config_supplies_defaults_and_flags_win(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "dims", "n": 2, "t": [5, 0]}))
    code, out, _ = _run(capsys, "dims", "--config", str(cfg))
    assert code == 0 and json.loads(out) == {"d_t": 6}
    code, out, _ = _run(capsys, "dims", "--config", str(cfg), "--n", "3", "--t", "2,1,0")
    assert json.loads(out) == {"d_t": 8}


def test_precondition_exit(capsys):
    assert _run(capsys, "dims", "--t", "0,1")[0] == 2
    assert _run(capsys, "lower-bound", "--n", "2", "--p", "3", "--vTa", "3/2", "--Mmax", "2")[0] == 2


def test_global_data_file(capsys, tmp_path):
    gd = tmp_path / "g.json"
    gd.write_text(json.dumps({"h": 2, "gluing": [{"component": 0, "target": 1}, {"component": 1, "target": 0}]}))
    code, out, _ = _run(capsys, "charpoly", "--p", "3", "--weight", "0,0", "--conductors", "1,1", "--h", "2",
                        "--degree-cap", "2", "--precision", "10", "--Nmax", "2", "--allow-floors",
                        "--global-data", str(gd))
    assert code == 0
    broken = tmp_path / "broken.json"
    broken.write_text("[1, 2]")
    code, _, _ = _run(capsys, "charpoly", "--p", "3", "--weight", "0,0", "--conductors", "1,1",
                      "--degree-cap", "2", "--precision", "10", "--Nmax", "2", "--global-data", str(broken))
    assert code == 65


@pytest.mark.parametrize("argv", [
    ["weight-coords", "--p", "3", "--t", "4,0", "--conductors", "2,1"],
    ["roche", "--p", "3", "--t", "4,0", "--conductors", "2,1", "--rule", "max"],
    ["budget", "--n", "2", "--a", "1,0", "--m", "4,0"],
    ["mackey", "--p", "3", "--t", "0,0", "--conductors", "2,1", "--wild-k", "1,0"],
    ["upper-bound", "--p", "3", "--t", "4,0", "--conductors", "2,1"],
    ["iterate-ubd", "--p", "3", "--t", "4,0", "--conductors", "2,1", "--kmax", "2", "--A1", "1/3"],
    ["disconnect", "--alpha", "2", "--n", "2", "--A1", "1"],
    ["disconnect", "--alpha", "2", "--n", "2", "--p", "3"],
    ["ordinary", "--valuations", "0,0,1,0,2,3"],
])
def test_every_command_runs(capsys, argv):
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    json.loads(out)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("HALO_THREADS", "1")
    assert _thread_cap() == 1
    monkeypatch.setenv("HALO_THREADS", "junk")
    assert _thread_cap() >= 1


def test_http_service():
    client = TestClient(app)
    r = client.post("/run/dims", json={"n": 3, "t": [2, 1, 0]})
    assert r.status_code == 200 and r.json() == {"d_t": 8}
    r = client.post("/run/dims", json={"t": "x"})
    assert r.status_code == 400 and r.headers["x-exit-code"] == "65"
    r = client.post("/run/nothing", json={})
    assert r.status_code == 404 and r.headers["x-exit-code"] == "64"
    r = client.post("/run/dims", json={"t": [0, 1]})
    assert r.headers["x-exit-code"] == "2"
    assert client.get("/health").json()["status"] == "ok"


def test_http_and_in_process_agree():
    client = TestClient(app)
    payload = {"n": 2, "p": 3, "h": 1, "vTa": "1/2", "Mmax": 4}
    assert client.post("/run/lower-bound", json=payload).json() == dispatch("lower-bound", payload)


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "haloslopes.cli", "dims", "--t", "3,0"],
                         capture_output=True, text=True, env={**os.environ, "HALO_THREADS": "1"})
    assert out.returncode == 0 and json.loads(out.stdout) == {"d_t": 4}
