from __future__ import annotations

import csv
import io
import subprocess
import sys

import pytest

from fsairy.airy import ai
from fsairy.cli import main
from fsairy.fredholm import tracy_widom_gue


def call(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(text.splitlines()))


def test_airy_eval_and_zeros():
    code, out = call("airy", "eval", "--x", "-1,0,2.5")
    assert code == 0
    r = rows(out)
    assert float(r[2]["ai"]) == pytest.approx(float(ai(2.5)), rel=1e-14)
    code, out = call("airy", "zeros", "--count", "3")
    assert code == 0
    assert [row["k"] for row in rows(out)] == ["1", "2", "3"]
    assert float(rows(out)[0]["omega"]) == pytest.approx(2.338107410459767, rel=1e-12)


def test_basis_commands():
    code, out = call("basis", "phi", "--k", "2", "--x", "0,1")
    assert code == 0 and float(rows(out)[0]["phi"]) == 0.0
    code, out = call("basis", "drift", "--coords", "1,2")
    assert code == 0 and len(out.strip().split(",")) == 2
    assert call("basis", "drift", "--coords", "2,1")[0] == 2


def test_kernel_eval_multiple_points():
    code, out = call("kernel", "eval", "--kind", "rescaled", "--m", "8", "--points", "-1,0,0,0;0,0.5,1,0")
    assert code == 0
    assert len(rows(out)) == 2
    assert call("kernel", "eval", "--kind", "rescaled", "--m", "8", "--points", "1,2,3")[0] == 2


def test_fredholm_commands():
    code, out = call("fredholm", "tw2", "--s-grid", "-2:0:3")
    assert code == 0
    r = rows(out)
    assert float(r[0]["F2"]) == pytest.approx(tracy_widom_gue(-2.0), abs=1e-14)
    code, out = call("fredholm", "gap", "--m", "8", "--cutoffs", "0")
    assert code == 0
    assert set(rows(out)[0]) == {"value", "quadrature_error_estimate", "truncation_budget"}
    code, out = call("fredholm", "gap", "--m", "2", "--unscaled", "--cutoffs", "3")
    assert code == 0 and 0 < float(rows(out)[0]["value"]) < 1


def test_sample_commands():
    code, out = call("sample", "dpp", "--m", "3", "--n", "5", "--seed", "1")
    assert code == 0 and len(rows(out)) == 5
    code2, out2 = call("sample", "dpp", "--m", "3", "--n", "5", "--seed", "1")
    assert out2 == out
    code, out = call("sample", "sde", "--m", "2", "--t-end", "0.01", "--dt", "1e-3", "--x0", "0.5,1.0")
    assert code == 0 and len(rows(out)) == 11


def test_rw_commands():
    code, out = call("rw", "marginal", "--n", "3", "--lambda", "0.5", "--h-max", "8")
    assert code == 0
    assert sum(float(r["prob"]) for r in rows(out)) == pytest.approx(1.0)
    code, out = call("rw", "scaled-cdf", "--n-list", "100,200", "--s-grid", "0:4:5")
    assert code == 0 and len(rows(out)) == 10


def test_negative_values_parse_as_values():
    code, out = call("fredholm", "tw2", "--s-grid", "-3,-1")
    assert code == 0 and len(rows(out)) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["nonsense"],
        ["airy", "eval"],
        ["airy", "eval", "--x", "a,b"],
        ["airy", "zeros", "--count", "0"],
        ["rw", "marginal", "--n", "3", "--lambda", "-1"],
        ["fredholm", "gap", "--m", "4", "--cutoffs", "-9"],
        ["sample", "sde", "--m", "1", "--t-end", "1", "--dt", "0.01"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert call(*argv)[0] == 2


def test_numeric_failure_exits_3():
    code, _ = call("kernel", "eval", "--kind", "airy_extended", "--points", "0,0,0,0.0005")
    assert code == 3


def test_study_run_and_overrides(tmp_path):
    cfg = tmp_path / "tw2.cfg"
    cfg.write_text(f"kind = tw2-table\ns_grid = -1:1:3\noutput_dir = {tmp_path / 'a'}\n")
    code, out = call("study", "run", str(cfg))
    assert code == 0 and "wrote" in out
    code, out = call("study", "run", str(cfg), "--set", "s_grid=-2:0:2", "--set", f"output_dir={tmp_path / 'b'}")
    assert code == 0
    text = (tmp_path / "b" / "tw2_table.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in text[2:]] == ["-2.0", "0.0"]


def test_study_errors(tmp_path):
    cfg = tmp_path / "t1.cfg"
    cfg.write_text(f"kind = theorem1\nm_list =\noutput_dir = {tmp_path / 'out'}\n")
    assert call("study", "run", str(cfg))[0] == 2
    assert not (tmp_path / "out").exists()
    assert call("study", "run", str(cfg), "--set", "m_list")[0] == 2
    assert call("study", "run", str(tmp_path / "missing.cfg"))[0] == 2
    cfg.write_text(f"kind = theorem1\nm_list = 2\ns_grid = -8\noutput_dir = {tmp_path / 'out'}\n")
    code, out = call("study", "run", str(cfg))
    assert code == 3 and "1 row(s) failed" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fsairy.cli", "airy", "zeros", "--count", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("k,omega,deriv")
