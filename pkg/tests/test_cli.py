import json
import subprocess
import sys

import numpy as np
import pytest

from ncwigner import __version__
from ncwigner import starcalc as sc
from ncwigner.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_catalog(capsys, tmp_path, fid, *extra):
    code, out, _ = run(capsys, "catalog", fid, *extra)
    assert code == 0
    path = tmp_path / f"{fid}.json"
    path.write_text(out)
    return path


def test_envelope_and_version(capsys):
    code, out, _ = run(capsys, "pfaffian")
    doc = json.loads(out)
    assert code == 0
    assert doc["version"] == __version__
    assert doc["config"]["hbar"] == 1.0
    assert doc["result"]["pfaffian"] == pytest.approx(-0.75)
    assert doc["result"]["expected_sign"] == -1


def test_output_is_byte_identical(capsys):
    first = run(capsys, "figure1", "--trials", "20")[1]
    second = run(capsys, "figure1", "--trials", "20")[1]
    assert first == second


def test_darboux_table(capsys):
    code, out, _ = run(capsys, "darboux", "--format", "table")
    assert code == 0
    assert "det S = 0.75" in out


def test_darboux_json(capsys):
    doc = json.loads(run(capsys, "darboux", "--lambda", "2")[1])
    s = np.array(doc["result"]["S"])
    assert np.linalg.det(s) == pytest.approx(0.75)
    assert doc["result"]["residuals"]["ok"]


def test_pfaffian_of_matrix_file(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[0, 2, 0, 0], [-2, 0, 0, 0], [0, 0, 0, 3], [0, 0, -3, 0]]))
    doc = json.loads(run(capsys, "pfaffian", "--matrix", str(path))[1])
    assert doc["result"]["pfaffian"] == pytest.approx(6.0)


def test_catalog_round_trip_through_purity(capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f1")
    code, out, _ = run(capsys, "purity", str(path))
    assert code == 0
    rep = json.loads(out)["result"]
    assert rep["purity"] == pytest.approx(1 / (2 * np.pi) ** 2)
    assert not rep["exceeds_wigner_bound"]


def test_catalog_csv(capsys, tmp_path):
    csv = tmp_path / "f2.csv"
    code, out, _ = run(capsys, "catalog", "f2", "--csv", str(csv), "--npts", "16")
    assert code == 0
    assert json.loads(out)["result"]["csv"] == str(csv)
    assert np.loadtxt(csv, delimiter=",", skiprows=1).shape == (16**4, 6)


@pytest.mark.parametrize("cmd", ["marginals", "uncertainty", "gaussian-test", "classify"])
def test_descriptor_commands(cmd, capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f6")
    code, out, _ = run(capsys, cmd, str(path), *(["--trials", "20"] if cmd == "classify" else []))
    assert code == 0
    json.loads(out)


def test_classify_region(capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f3")
    doc = json.loads(run(capsys, "classify", str(path))[1])
    assert doc["result"]["region"] == "Omega_3"


def test_klm_finds_frozen_witness(capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f1")
    doc = json.loads(run(capsys, "klm", str(path), "--alpha", "0.5")[1])
    search = doc["result"]["search"]
    assert search["outcome"] == "violation"
    assert search["trials"] == 148


def test_klm_nc_default(capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f7")
    doc = json.loads(run(capsys, "klm", str(path), "--nc-default", "--trials", "50")[1])
    assert doc["result"]["search"]["outcome"] == "none_found"
    assert doc["result"]["spectrum_params"]["alpha"] == pytest.approx(4 / 3)


def test_star_binary_output(capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f7")
    out = tmp_path / "prod.ncwg"
    code, text, _ = run(capsys, "star", str(path), str(path), "--kind", "theta", "--npts", "16", "--binary", "--out", str(out))
    assert code == 0
    g = sc.from_binary(out.read_bytes())
    assert g.spec.npts == (16, 16, 16, 16)
    assert json.loads(text)["result"]["format"] == "ncwg"


def test_figure1_rows(capsys):
    doc = json.loads(run(capsys, "figure1", "--trials", "20")[1])
    assert doc["result"]["all_match"]
    assert [r["region"] for r in doc["result"]["rows"]] == [f"Omega_{i}" for i in range(1, 8)]


def test_figure1_table(capsys):
    code, out, _ = run(capsys, "figure1", "--trials", "20", "--format", "table")
    assert code == 0
    assert "Omega_7" in out


# -- exit codes ----------------------------------------------------------------


def test_usage_error_exits_1(capsys):
    code, _, err = run(capsys, "catalog", "f9")
    assert code == 1
    assert "usage error" in err


def test_missing_file_exits_1(capsys, tmp_path):
    code, _, _ = run(capsys, "purity", str(tmp_path / "nope.json"))
    assert code == 1


def test_precondition_exits_2(capsys):
    code, _, err = run(capsys, "catalog", "f3", "--a", "-1")
    assert code == 2
    assert err.startswith("error:")


def test_degenerate_parameters_exit_2(capsys):
    code, _, _ = run(capsys, "pfaffian", "--theta", "2", "--eta", "2")
    assert code == 2


def test_inconsistency_exits_3(capsys, tmp_path):
    path = write_catalog(capsys, tmp_path, "f3")
    doc = json.loads(path.read_text())
    doc["result"]["measure"]["claims"]["F^C"] = "asserted without reason"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "classify", str(path))
    assert code == 3
    assert "inconsistency" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ncwigner", "pfaffian"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["pfaffian"] == pytest.approx(-0.75)
