"""End-to-end command-line checks via subprocess."""

import json
import subprocess
import sys

import numpy as np
import pytest

LOG2 = np.log(2.0)


def run_cli(*args, check=False):
    proc = subprocess.run(
        [sys.executable, "-m", "greendyn.cli", *map(str, args)],
        capture_output=True, text=True,
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}):\n{proc.stderr}")
    return proc


# ----------------------------------------------------------------- sampling


def test_sample_writes_csv_and_summary(tmp_path):
    run_cli("sample", "--family", "power", "--d", 2, "--count", 200,
            "--chains", 4, "--seed", 7, "--out", tmp_path, check=True)
    csv = (tmp_path / "sample.csv").read_text().splitlines()
    header = [l for l in csv if l.startswith("#")]
    data = [l for l in csv if not l.startswith("#")]
    assert any(l.startswith("# config = ") for l in header)
    assert any(l.startswith("# config_hash = ") for l in header)
    assert data[0] == "re,im,chart,chain,step"
    assert len(data) == 1 + 200  # column row + samples
    summary = json.loads((tmp_path / "sample_summary.json").read_text())
    assert summary["count"] == 200
    assert summary["chains"] == 4
    assert summary["seed"] == 7
    assert "config" in summary and "config_hash" in summary
    assert "run.threads" not in summary["config"]


def test_verify_accepts_untouched_outputs(tmp_path):
    run_cli("sample", "--family", "power", "--d", 2, "--count", 100,
            "--chains", 4, "--out", tmp_path, check=True)
    proc = run_cli("verify", tmp_path)
    assert proc.returncode == 0
    out = json.loads(proc.stdout)
    assert out["ok"] is True
    assert {r["status"] for r in out["files"]} == {"OK"}


def test_verify_flags_tampered_files(tmp_path):
    run_cli("sample", "--family", "power", "--d", 2, "--count", 100,
            "--chains", 4, "--out", tmp_path, check=True)
    csv = tmp_path / "sample.csv"
    text = csv.read_text().replace("# config = ", "# config = map.family=evil;", 1)
    csv.write_text(text)
    proc = run_cli("verify", tmp_path)
    assert proc.returncode == 1
    statuses = {r["file"].split("/")[-1]: r["status"]
                for r in json.loads(proc.stdout)["files"]}
    assert statuses["sample.csv"] == "MISMATCH"
    assert statuses["sample_summary.json"] == "OK"


def test_verify_reports_missing_hashes(tmp_path):
    (tmp_path / "stray.json").write_text("{}")
    proc = run_cli("verify", tmp_path)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["files"][0]["status"] == "NO_HASH"


# ------------------------------------------------------------ error handling


def test_unknown_family_is_a_usage_error(tmp_path):
    proc = run_cli("sample", "--family", "nosuch", "--count", 100, "--out", tmp_path)
    assert proc.returncode == 2
    err = json.loads(proc.stderr)
    assert err["type"] == "ValueError"
    assert "nosuch" in err["error"]


def test_degenerate_map_is_a_domain_error(tmp_path):
    proc = run_cli("lattes-make", "--g2", 3, "--g3", 1, "--out", tmp_path)
    assert proc.returncode == 1
    err = json.loads(proc.stderr)
    assert err["type"] == "DegenerateMap"


def test_no_arguments_is_a_usage_error():
    proc = run_cli()
    assert proc.returncode == 2
    # argparse prints its usage text first; the JSON error is the last line
    last = proc.stderr.strip().splitlines()[-1]
    assert json.loads(last)["type"] == "UsageError"


def test_help_exits_cleanly():
    proc = run_cli("--help")
    assert proc.returncode == 0
    assert "sample" in proc.stdout


# ------------------------------------------------------------- configuration


def test_config_file_with_flag_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\ncount = 300\nseed = 9\n\n[map]\nfamily = power\nd = 2\n")
    run_cli("sample", "--config", ini, "--count", 200, "--out", tmp_path,
            check=True)
    summary = json.loads((tmp_path / "sample_summary.json").read_text())
    assert "run.count=200" in summary["config"]  # flag wins
    assert "run.seed=9" in summary["config"]     # file beats default
    assert summary["count"] == 200


# ----------------------------------------------------------------- commands


def test_lyapunov_output_schema(tmp_path):
    run_cli("lyapunov", "--family", "quadratic", "--c", 0.25, "--count", 3000,
            "--chains", 10, "--out", tmp_path, check=True)
    rep = json.loads((tmp_path / "lyapunov.json").read_text())
    assert rep["quantity"] == "lyapunov"
    assert rep["value"] == pytest.approx(LOG2, abs=0.05)
    assert rep["stderr"] > 0
    assert rep["verdicts"] == ["LOWER_BOUND_OK"]
    assert rep["n_samples"] == 3000


def test_dimension_output_schema(tmp_path):
    run_cli("dimension", "--family", "quadratic", "--c", 0.25, "--count", 10000,
            "--chains", 10, "--subsample", 2000, "--out", tmp_path, check=True)
    rep = json.loads((tmp_path / "dimension.json").read_text())
    assert rep["quantity"] == "correlation_dimension"
    assert 0.8 <= rep["value"] <= 1.1
    assert rep["verdicts"] == ["DIMENSION_BOUND_PASS"]
    assert rep["bound_check"]["verdict"] == "PASS"
    assert rep["bound_check"]["ceiling"] == pytest.approx(1.0, abs=0.05)


def test_lindiag_outputs(tmp_path):
    run_cli("lindiag", "--family", "power", "--d", 2, "--count", 500,
            "--chains", 5, "--nmax", 8, "--out", tmp_path, check=True)
    summary = json.loads((tmp_path / "lindiag_summary.json").read_text())
    assert summary["ratio_slope"] == pytest.approx(-0.5 * LOG2, abs=0.01)
    assert summary["n_max"] == 8
    assert set(summary["fraction_max_ratio_leq"]) == {"1.0", "2.0", "5.0", "10.0"}
    rows = [l for l in (tmp_path / "lindiag.csv").read_text().splitlines()
            if not l.startswith("#")]
    assert rows[0] == "family,rho,tau,nu,r0,box,n,fraction,ci_half_width,count"
    families = {r.split(",")[0] for r in rows[1:]}
    assert families == {"bn", "dn", "vn", "recurrence"}


def test_lattes_make_round_trip(tmp_path):
    run_cli("lattes-make", "--g2", 4, "--g3", 0, "--out", tmp_path, check=True)
    info = json.loads((tmp_path / "lattes_make.json").read_text())
    assert info["degree"] == 4
    assert info["postcritical_stabilized"] is True
    spec_text = (tmp_path / "lattes_map.txt").read_text()
    assert spec_text.startswith("family = explicit")
    # the written spec is a valid input for other commands
    run_cli("sample", "--coeffs-file", tmp_path / "lattes_map.txt",
            "--count", 100, "--chains", 4, "--out", tmp_path / "resampled",
            check=True)
    resum = json.loads((tmp_path / "resampled" / "sample_summary.json").read_text())
    assert resum["map_hash"] == info["map_hash"]


def test_report_verdict_for_a_generic_map(tmp_path):
    run_cli("report", "--family", "quadratic", "--c", 0.25, "--count", 10000,
            "--chains", 10, "--subsample", 2000, "--nmax", 12,
            "--out", tmp_path, check=True)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["verdict"] == "GENERIC"
    assert rep["lyapunov"]["minimal_exponent"] is False
    assert rep["bound_check"]["verdict"] == "PASS"
    assert set(rep["thresholds"]) == {"dim_min", "ratio_slope_min",
                                      "exponent_sigmas"}


# -------------------------------------------------------------- determinism


def test_outputs_do_not_depend_on_thread_cap(tmp_path):
    for threads, sub in ((1, "a"), (8, "b")):
        run_cli("sample", "--family", "chebyshev", "--d", 2, "--count", 200,
                "--chains", 4, "--seed", 3, "--threads", threads,
                "--out", tmp_path / sub, check=True)
    for name in ("sample.csv", "sample_summary.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, name
