import csv
import io
import json
import os
import subprocess
import sys

import pytest

from o2kms.cli import (SCAN_COLUMNS, Phase, RunConfig, beta_grid, classify_phase, main,
                       scan)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_examples(beta0):
    assert classify_phase(1.0).phase is Phase.NoKMS
    assert classify_phase(0.3).phase is Phase.NoKMS
    assert classify_phase(4.0).phase is Phase.CircleSimplex
    crit = classify_phase(beta0, tol=1e-6)
    assert crit.phase is Phase.UniqueCritical
    assert crit.G_low <= 1.0 <= crit.G_high
    assert classify_phase(beta0 - 0.1).phase is Phase.NoKMS
    assert classify_phase(beta0 + 0.1).phase is Phase.CircleSimplex


def test_beta_grid():
    assert beta_grid(1.0, 2.0, 0.5) == (1.0, 1.5, 2.0)
    assert len(beta_grid(1.0, 4.0, 0.1)) == 31
    for args in [(1.0, 2.0, 0.0), (2.0, 1.0, 0.1), (1.0, float("nan"), 0.1)]:
        with pytest.raises(ValueError, match="invalid grid"):
            beta_grid(*args)


def test_scan_examples():
    (row,) = scan(RunConfig((1.0,)))
    assert row["classification"] == "NoKMS"
    assert row["first_negative_depth_or_none"].isdigit()
    (row,) = scan(RunConfig((4.0,)))
    assert row["classification"] == "CircleSimplex"
    assert float(row["partial_M_or_flag"]) == pytest.approx(0.02244, rel=1e-3)
    assert row["first_negative_depth_or_none"] == "none"
    with pytest.raises(ValueError, match="invalid grid"):
        scan(RunConfig(()))


def test_scan_jobs_independent():
    betas = (1.2, 1.6, 2.0, 3.5)
    assert scan(RunConfig(betas, jobs=1)) == scan(RunConfig(betas[::-1], jobs=3))


def test_scan_csv_reproducible(capsys, tmp_path):
    argv = ["scan", "--beta-start", "1.0", "--beta-stop", "3.0", "--beta-step", "0.5",
            "--reproducible"]
    code, first, _ = run(argv, capsys)
    assert code == 0
    _, second, _ = run(argv, capsys)
    assert first == second
    rows = list(csv.reader(io.StringIO(first)))
    assert rows[0] == SCAN_COLUMNS
    assert [r[1] for r in rows[1:]] == ["NoKMS", "CircleSimplex", "CircleSimplex",
                                        "CircleSimplex", "CircleSimplex"]
    stamped = run(argv[:-1], capsys)[1]
    assert stamped.startswith("# generated")


def test_scan_json(capsys):
    code, out, _ = run(["scan", "--beta", "4.0", "--format", "json", "--reproducible"], capsys)
    assert code == 0
    obj = json.loads(out)
    assert "generated" not in obj
    assert obj["rows"][0]["classification"] == "CircleSimplex"


def test_out_file_atomic(capsys, tmp_path):
    target = tmp_path / "scan.csv"
    target.write_text("old\n")
    code, out, _ = run(["scan", "--beta", "2.0", "--reproducible", "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[0] == ",".join(SCAN_COLUMNS)
    assert os.listdir(tmp_path) == ["scan.csv"]


def test_unwritable_path(capsys, tmp_path):
    code, _, err = run(["scan", "--beta", "2.0", "--out", str(tmp_path / "no" / "x.csv")], capsys)
    assert code == 1
    assert "cannot write" in err


def test_exit_codes(capsys):
    assert run(["scan", "--beta-start", "2", "--beta-stop", "1", "--beta-step", "0.1"],
               capsys)[0] == 1
    assert run(["measure", "--beta", "2", "--depth", "17"], capsys)[0] == 2
    assert run(["partition", "--beta", "2", "--level-cap", "100001"], capsys)[0] == 2
    assert run(["rep-check", "--beta", "2", "--level-cap", "23"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    capsys.readouterr()


def test_beta0_command(capsys):
    code, out, _ = run(["beta0", "--format", "json", "--reproducible"], capsys)
    obj = json.loads(out)
    assert code == 0
    assert obj["hi"] - obj["lo"] <= 1e-10
    assert abs(obj["midpoint"] - 1.4263361087268782) < 1e-10


def test_measure_and_partition_commands(capsys):
    code, out, _ = run(["measure", "--beta", "2.0", "--depth", "3", "--reproducible"], capsys)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "word,mass" and lines[-1].startswith("residual_1^3,")
    code, out, _ = run(["partition", "--beta", "2.0", "--level-cap", "4", "--reproducible"],
                       capsys)
    assert code == 0 and out.splitlines()[0] == "n,Z,partial_M"


def test_check_commands(capsys):
    code, out, _ = run(["rep-check", "--beta", "4.0", "--level-cap", "8", "--reproducible",
                        "--format", "json"], capsys)
    assert code == 0
    checks = json.loads(out)["rows"]
    assert {c["check"] for c in checks} >= {"cuntz_completeness", "isometry_interior", "isometry_boundary_zero"}
    assert all(c["pass"] for c in checks)
    assert set(checks[0]) == {"check", "N", "beta", "lambda", "residual", "pass"}
    code, out, _ = run(["kms-check", "--beta", "4.0", "--level-cap", "6", "--pairs", "5",
                        "--quadrature", "8", "--reproducible"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "check,N,beta,lambda,residual,pass"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "o2kms", "classify", "--beta", "4.0",
                           "--reproducible"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "CircleSimplex" in proc.stdout
