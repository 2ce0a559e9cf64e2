import csv
import io
import json
import math
import subprocess
import sys

import pytest

from rbfbern import cli

SWEEP = ["--levels", "3", "--trials", "2", "--q0", "0.25", "--seed", "7"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_geom_report_generated(capsys):
    code, out, _ = run(capsys, "geom", "report", "--spacing", "0.25", "--density", "100")
    row = table(out)[0]
    assert code == 0 and float(row["q"]) == 0.125 and int(row["n"]) == 5


def test_geom_gen_then_report(capsys, tmp_path):
    pts = tmp_path / "p.txt"
    code, _, _ = run(capsys, "geom", "gen", "--dim", "2", "--spacing", "0.25", "--jitter", "0.05",
                     "--seed", "3", "--points-out", str(pts))
    assert code == 0 and pts.read_text().startswith("2 25\n")
    code, out, _ = run(capsys, "geom", "report", "--in", str(pts), "--out", "json")
    doc = json.loads(out)
    assert code == 0 and doc["rows"][0]["n"] == 25 and doc["rows"][0]["q"] >= 0.075


def test_geom_report_error_exit(capsys):
    code, _, err = run(capsys, "geom", "report")
    assert code == 2 and "give --in or --spacing" in err


def test_specfun_eval(capsys):
    code, out, _ = run(capsys, "specfun", "eval", "--fn", "besselj", "--nu", "0.5", "--x", f"{math.pi},1")
    rows = table(out)
    assert code == 0 and abs(float(rows[0]["value"])) < 1e-15
    assert float(rows[1]["value"]) == pytest.approx(math.sqrt(2 / math.pi) * math.sin(1.0), rel=1e-14)
    code, out, _ = run(capsys, "specfun", "eval", "--fn", "gamma", "--x", "0.5")
    assert float(table(out)[0]["value"]) == pytest.approx(math.sqrt(math.pi), rel=1e-15)


def test_rbf_admissible(capsys):
    code, out, _ = run(capsys, "rbf", "admissible", "--family", "sobolev", "--dim", "1", "--beta", "3")
    assert code == 0 and table(out)[0]["pass"] == "true"
    code, out, _ = run(capsys, "rbf", "admissible", "--family", "gaussian", "--dim", "1")
    assert code == 0 and table(out)[0]["pass"] == "false"


def test_kernel_eval(capsys):
    code, out, _ = run(capsys, "kernel", "eval", "--class", "K2", "--dim", "1", "--r", "0,1")
    assert code == 0 and float(table(out)[0]["value"]) == pytest.approx(0.598413420602149, abs=1e-12)


def test_hankel_decay(capsys):
    code, out, err = run(capsys, "hankel", "decay", "--mode", "tail", "--dim", "1", "--n", "2",
                         "--alphas", "1:64:log", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["slope"] <= -1.75 and not err


def test_hankel_decay_reports_failed_contract(capsys):
    # the d = 1 origin integral decays like alpha^{-5/2}
    code, _, err = run(capsys, "hankel", "decay", "--mode", "origin", "--dim", "1", "--n", "3")
    assert code == 1 and "contract failed: slope" in err


def test_net_sample_and_norm(capsys, tmp_path):
    pts, fld = tmp_path / "p.txt", tmp_path / "f.bin"
    run(capsys, "geom", "gen", "--spacing", "0.25", "--points-out", str(pts))
    code, _, _ = run(capsys, "net", "sample", "--centers", str(pts), "--coeffs", "ones", "--field-out", str(fld))
    assert code == 0 and fld.exists()
    code, out, _ = run(capsys, "net", "norm", "--in", str(fld), "--k", "1", "--p", "inf")
    row = table(out)[0]
    assert code == 0 and row["p"] == "inf" and float(row["norm"]) > 0


def test_net_norm_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "net", "norm", "--in", str(tmp_path / "nope.bin"))
    assert code == 2 and err.startswith("rbfbern: error:")


def test_stability_sweep(capsys):
    code, out, _ = run(capsys, "stability", "sweep", *SWEEP, "--out", "csv")
    rows = table(out)
    assert code in (0, 1) and len(rows) == 3
    assert list(rows[0]) == ["level", "q", "sigma0", "dominance_ratio", "inv_norm_actual", "ratio_estimate"]


def test_bernstein_sweep_to_file(capsys, tmp_path):
    path = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bernstein", "sweep", *SWEEP, "--k", "1", "--p", "2", "--out", str(path))
    assert code in (0, 1) and out == ""
    assert path.read_text().splitlines()[0] == "level,q,sigma1,bl_ratio,approx_ratio,bernstein_ratio"


def test_inverse_run(capsys):
    code, out, _ = run(capsys, "inverse", "run", "--levels", "3", "--inverse-extent", "8", "--format", "json")
    doc = json.loads(out)
    assert code in (0, 1) and doc["kind"] == "inverse" and len(doc["rows"]) == 3


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("levels = 3\ntrials = 2\nq0 = 0.25\nformat = json\n")
    code, out, _ = run(capsys, "stability", "sweep", "--config", str(cfg), "--levels", "4")
    doc = json.loads(out)
    assert doc["config"]["levels"] == 4 and doc["config"]["trials"] == 2 and len(doc["rows"]) == 4


def test_invalid_config_exit(capsys):
    code, _, err = run(capsys, "bernstein", "sweep", "--k", "2", "--beta", "3")
    assert code == 2 and "k = 2" in err


DETERMINISM = [
    ["geom", "report", "--spacing", "0.1", "--jitter", "0.02", "--seed", "5"],
    ["specfun", "eval", "--fn", "besselk", "--nu", "1.5", "--x", "0.5,2"],
    ["rbf", "admissible", "--family", "tps", "--dim", "2", "--m", "2"],
    ["kernel", "eval", "--class", "K1", "--dim", "2", "--r", "0,0.5,3"],
    ["hankel", "decay", "--mode", "tail", "--dim", "2", "--n", "3"],
    ["stability", "sweep", *SWEEP],
    ["bernstein", "sweep", *SWEEP, "--format", "json"],
    ["inverse", "run", "--levels", "3", "--inverse-extent", "8"],
]


@pytest.mark.parametrize("argv", DETERMINISM, ids=lambda a: "-".join(a[:2]))
def test_byte_identical_reruns(capsys, argv):
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first and first == second


def test_file_commands_byte_identical(capsys, tmp_path):
    outs = []
    for i in range(2):
        pts, fld = tmp_path / f"p{i}.txt", tmp_path / f"f{i}.bin"
        run(capsys, "geom", "gen", "--spacing", "0.2", "--jitter", "0.05", "--seed", "2", "--points-out", str(pts))
        run(capsys, "net", "sample", "--centers", str(pts), "--field-out", str(fld))
        outs.append((pts.read_bytes(), fld.read_bytes(), run(capsys, "net", "norm", "--in", str(fld))[1]))
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rbfbern.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("rbfbern ")
