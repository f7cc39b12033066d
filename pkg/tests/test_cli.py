import json

import pytest

from crystal_lab.cli import run

EXAMPLE = [[3, 2, 2], [3, 2, 1], [1, 1, 1]]


def _run(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None), out


def test_macmahon(capsys):
    code, rep, _ = _run(["macmahon", "--order", "10"], capsys)
    assert code == 0
    assert rep["coefficients"] == [1, 1, 3, 6, 13, 24, 48, 86, 160, 282, 500]


def test_slice_roundtrip(tmp_path, capsys):
    pp = tmp_path / "pp.json"
    pp.write_text(json.dumps(EXAMPLE))
    code, rep, _ = _run(["slice", "--in", str(pp)], capsys)
    assert code == 0 and rep["lambda"] == [3, 2, 1]
    tri = tmp_path / "tri.json"
    tri.write_text(json.dumps(rep))
    code, back, _ = _run(["slice", "--in", str(tri)], capsys)
    assert back["plane_partition"] == EXAMPLE


def test_schur_routes_agree(capsys):
    _, a, _ = _run(["schur", "--lam", "2,1", "--cutoff", "14"], capsys)
    _, b, _ = _run(["schur", "--lam", "2,1", "--cutoff", "14", "--route", "tableau"], capsys)
    assert a["value"] == b["value"]


def test_verify_crystal_tau_identity(capsys):
    code, rep, _ = _run(["verify", "theorem1", "--s", "0", "--N", "4", "--degree", "1", "--cutoff", "10"], capsys)
    assert code == 0 and rep["residual"] == "0"


def test_failed_check_exit_code(capsys):
    code, rep, _ = _run(["verify", "theorem3", "--window", "9", "--grid", "t1=0,0.125"], capsys)
    assert code == 1 and rep["status"] == "fail"


@pytest.mark.parametrize("argv", [["nope"], ["verify", "nope"], ["macmahon", "--order", "-1"],
                                  ["verify", "theorem3", "--grid", "x=1"], ["schur", "--lam", "1,2"],
                                  ["verify", "theorem3", "--grid", "t1=0.1.2"]])
def test_bad_arguments(argv, capsys):
    assert run(argv) == 2


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"order": 3, "N": 2}))
    _, rep, _ = _run(["--config", str(cfg), "macmahon"], capsys)
    assert rep["params"]["order"] == 3
    _, rep, _ = _run(["macmahon", "--config", str(cfg), "--order", "5"], capsys)
    assert rep["params"]["order"] == 5


def test_output_file_and_timing(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["macmahon", "--order", "2", "--out", str(out), "--timing"]) == 0
    rep = json.loads(out.read_text())
    assert "wall_seconds" in rep


def test_byte_stable_across_thread_counts(capsys, monkeypatch):
    monkeypatch.setenv("CRYSTAL_LAB_THREADS", "1")
    _, _, a = _run(["suite", "--criteria", "1,2,12"], capsys)
    monkeypatch.setenv("CRYSTAL_LAB_THREADS", "3")
    _, _, b = _run(["suite", "--criteria", "1,2,12"], capsys)
    assert a == b
    assert [c["id"] for c in json.loads(a)["criteria"]] == [1, 2, 12]


def test_dump_matrix(capsys):
    code, rep, _ = _run(["dump-matrix", "--name", "Wbar", "--window", "3", "--cutoff", "6"], capsys)
    assert code == 0 and rep["lo"] == -3 and len(rep["entries"]) == 7


def test_partition_function_and_tau(capsys):
    code, z, _ = _run(["partition-function", "--model", "modified", "--N", "2", "--degree", "1", "--kmax", "1",
                       "--cutoff", "6"], capsys)
    assert code == 0 and z["model"] == "modified"
    code, t, _ = _run(["tau", "--variant", "1D", "--N", "2", "--degree", "1", "--kmax", "1", "--cutoff", "6"],
                      capsys)
    assert code == 0 and t["variant"] == "1D"
