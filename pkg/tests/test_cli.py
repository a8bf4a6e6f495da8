import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qdistill.cli import main
from qdistill.linalg_core import from_qsm_json
from qdistill.qudit_states import bell_vector


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ed_fourparty_json_envelope(capsys):
    code, out, _ = run(capsys, "ed", "--d", "2", "--fourparty", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["seed"] == 0 and doc["report"]["agreement"] is True
    assert doc["report"]["lower_bound_bits"] == 1.0


def test_ed_json_is_byte_identical_for_a_seed(capsys):
    a = run(capsys, "ed", "--d", "3", "--n", "4", "--format", "json", "--seed", "9")[1]
    b = run(capsys, "ed", "--d", "3", "--n", "4", "--format", "json", "--seed", "9")[1]
    assert a == b


def test_ed_odd_n_text(capsys):
    code, out, _ = run(capsys, "ed", "--d", "2", "--n", "3")
    assert code == 0
    assert "infinite" in out and "formal count" in out


def test_ed_table_csv(capsys):
    code, out, _ = run(capsys, "ed", "--table", "--d-max", "2", "--n-max", "4")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["d", "n", "lower", "upper", "formal", "paper", "agreement"]
    assert len(rows) == 1 + 1 + 4
    assert code == 0


def test_ed_needs_a_case(capsys):
    code, _, err = run(capsys, "ed", "--d", "2")
    assert code == 2 and "fourparty" in err


def test_bad_arguments_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ed", "--d", "1", "--fourparty"])
    assert exc.value.code == 2
    code, _, _ = run(capsys, "bell", "--d", "3", "--label", "3,0")
    assert code == 2


def test_bell_qsm_json(capsys):
    code, out, _ = run(capsys, "bell", "--d", "3", "--label", "1,2")
    vec, dims = from_qsm_json(out)
    assert code == 0 and dims == [3, 3]
    assert np.allclose(vec, bell_vector(3, 1, 2))


def test_state_label_and_dense(capsys, tmp_path):
    code, out, _ = run(capsys, "state", "--d", "2", "--kind", "fourparty")
    assert code == 0 and json.loads(out)["biparties"] == 2
    path = tmp_path / "rho.json"
    code, _, _ = run(capsys, "state", "--d", "2", "--kind", "full", "--dense", "--out", str(path))
    mat, dims = from_qsm_json(path.read_text())
    assert code == 0 and mat.shape == (16, 16) and dims == [2, 2, 2, 2]


def test_dense_cap_env_override(capsys, monkeypatch):
    monkeypatch.setenv("QDISTILL_DENSE_CAP", "64")
    code, _, err = run(capsys, "state", "--d", "3", "--kind", "fourparty", "--dense")
    assert code == 2 and "cap" in err
    code, _, _ = run(capsys, "state", "--d", "3", "--kind", "fourparty")
    assert code == 0


def test_ppt_all_cuts(capsys):
    code, out, _ = run(capsys, "ppt", "--d", "3", "--kind", "full", "--format", "json")
    rows = json.loads(out)["report"]
    assert code == 0 and len(rows) == 7
    by_cut = {r["cut"]: r for r in rows}
    assert by_cut["AC|BD"]["verdict"] == "NPT"
    assert by_cut["AB|CD"]["note"].startswith("PPT")


def test_ppt_bad_cut(capsys):
    code, _, _ = run(capsys, "ppt", "--d", "2", "--kind", "full", "--cut", "AB|C")
    assert code == 2


def test_discriminate_with_transcript(capsys, tmp_path):
    path = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "discriminate", "--d", "4", "--label", "3,1", "--transcript", str(path))
    assert code == 0 and "inferred (3,1)" in out
    assert len(path.read_text().splitlines()) == 8


def test_teleport(capsys):
    code, out, _ = run(capsys, "teleport", "--d", "3", "--format", "json", "--seed", "4")
    assert code == 0 and json.loads(out)["report"]["fidelity_with_input"] >= 1 - 1e-10
    code, _, _ = run(capsys, "teleport", "--d", "3", "--channel", "1,1", "--corrections-for", "0,0")
    assert code == 0


def test_verify_small_grid_and_perturbation(capsys):
    code, out, _ = run(capsys, "verify", "--d-max", "2", "--n-max", "4")
    assert code == 0 and "11/11 criteria passed" in out
    code, out, _ = run(capsys, "verify", "--d-max", "2", "--n-max", "4", "--perturb")
    assert code == 1 and "[FAIL]  1." in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qdistill", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "qdistill" in res.stdout
