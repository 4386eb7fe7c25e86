import math
import os
import shutil
import subprocess
import sys

import pytest

PI = math.pi


def run_cli(*args, env_extra=None, cwd=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "twinprobe.cli", *args],
        capture_output=True,
        text=True,
        env=env,
        cwd=cwd,
    )


def stdout_value(proc, key):
    for line in proc.stdout.splitlines():
        if line.startswith(key + " ") or line.startswith(key + "="):
            return float(line.split("=", 1)[1])
    raise AssertionError(f"{key!r} not found in output:\n{proc.stdout}")


def test_entangle_reports_ratio_and_verdict():
    proc = run_cli("entangle", "--coupling-chi", "1.5", "--n-th", "0")
    assert proc.returncode == 0
    assert stdout_value(proc, "relative mode frequency") == pytest.approx(2.0)
    assert stdout_value(proc, "squeeze ratio") == pytest.approx(2.0)
    assert "entangled               = yes" in proc.stdout


def test_entangle_thermal_verdicts():
    proc = run_cli("entangle", "--r", "2", "--n-th", "20")
    assert proc.returncode == 0
    assert "entangled               = no" in proc.stdout
    proc = run_cli("entangle", "--r", "50", "--n-th", "1000")
    assert proc.returncode == 0
    assert "entangled               = yes" in proc.stdout


def test_entangle_rejects_conflicting_parametrizations():
    proc = run_cli("entangle", "--r", "2", "--coupling-chi", "1.5")
    assert proc.returncode == 2
    assert "config error" in proc.stderr


def test_entangle_full_model_converges():
    proc = run_cli(
        "entangle", "--r", "2", "--n-th", "20", "--delta", "100", "--full-model"
    )
    assert proc.returncode == 0
    line = next(l for l in proc.stdout.splitlines() if "full-model deviation" in l)
    deviation = float(line.split("=")[1].split("(")[0])
    assert deviation < 0.02


def test_fmin_frozen_point():
    proc = run_cli(
        "fmin", "--tau-scaled", repr(PI / 2), "--r", "10", "--n-th", "20"
    )
    assert proc.returncode == 0
    assert stdout_value(proc, "f_min") == pytest.approx(1.09465202275978547, rel=1e-9)
    assert stdout_value(proc, "f_sql") == pytest.approx(1.28490585296626357, rel=1e-9)
    assert stdout_value(proc, "phi") == pytest.approx(-PI / 4, rel=1e-9)


def test_fmin_explicit_phi_overrides_opt():
    proc = run_cli("fmin", "--tau-scaled", repr(PI / 2), "--r", "10", "--phi", "0")
    assert proc.returncode == 0
    assert stdout_value(proc, "phi") == 0.0


def test_optimize_kappa_command():
    proc = run_cli(
        "optimize-kappa", "--tau-scaled", repr(PI / 2), "--r", "10", "--n-th", "20"
    )
    assert proc.returncode == 0
    assert stdout_value(proc, "kappa_opt") == pytest.approx(0.935932260872577, rel=1e-4)
    assert stdout_value(proc, "f_min") == pytest.approx(1.09113300329450691, rel=1e-6)


def test_fig1_csv_layout(tmp_path):
    out = tmp_path / "curve.csv"
    proc = run_cli("fig1", "--points", "16", "--out", str(out))
    assert proc.returncode == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "axis,r,phi_opt,signal,noise,f_min,f_sql"
    assert len(lines) == 1 + 16 * 3
    first = lines[1].split(",")
    assert len(first) == 7
    assert float(first[0]) == pytest.approx(0.05)
    assert float(lines[-1].split(",")[0]) == pytest.approx(2 * PI)


def test_fig1_without_sql_emits_nan(tmp_path):
    out = tmp_path / "curve.csv"
    proc = run_cli("fig1", "--points", "4", "--no-include-sql", "--out", str(out))
    assert proc.returncode == 0
    for line in out.read_text().splitlines()[1:]:
        assert line.split(",")[-1] == "nan"


def test_fig2_is_log_spaced(tmp_path):
    out = tmp_path / "curve.csv"
    proc = run_cli("fig2", "--points", "5", "--r-list", "1", "--out", str(out))
    assert proc.returncode == 0
    axis = [float(l.split(",")[0]) for l in out.read_text().splitlines()[1:]]
    ratios = [b / a for a, b in zip(axis, axis[1:])]
    assert max(ratios) - min(ratios) < 1e-9
    assert axis[0] == pytest.approx(0.05) and axis[-1] == pytest.approx(5.0)


def test_fig1_gnuplot_script(tmp_path):
    out = tmp_path / "curve.csv"
    script = tmp_path / "curve.gp"
    proc = run_cli(
        "fig1", "--points", "4", "--out", str(out), "--gnuplot", str(script)
    )
    assert proc.returncode == 0
    text = script.read_text()
    assert "plot" in text and "curve.csv" in text


def test_csv_determinism(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run_cli("fig1", "--points", "32", "--out", str(a)).returncode == 0
    assert run_cli("fig1", "--points", "32", "--jobs", "3", "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_env_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa = 2.0\ntau-scaled = 1.0  # dashes map to underscores\n")
    base = run_cli("dump-config", "--config", str(cfg))
    assert base.returncode == 0
    assert stdout_value(base, "kappa") == 2.0
    assert stdout_value(base, "tau_scaled") == 1.0
    env = run_cli("dump-config", "--config", str(cfg), env_extra={"TWINPROBE_KAPPA": "3"})
    assert stdout_value(env, "kappa") == 3.0
    flag = run_cli(
        "dump-config", "--config", str(cfg), "--kappa", "4",
        env_extra={"TWINPROBE_KAPPA": "3"},
    )
    assert stdout_value(flag, "kappa") == 4.0


def test_config_file_via_environment(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_th = 7\n")
    proc = run_cli("dump-config", env_extra={"TWINPROBE_CONFIG": str(cfg)})
    assert proc.returncode == 0
    assert stdout_value(proc, "n_th") == 7.0


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("warp_factor = 9\n")
    proc = run_cli("dump-config", "--config", str(cfg))
    assert proc.returncode == 2
    assert "unknown key" in proc.stderr


def test_malformed_config_line_rejected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa\n")
    proc = run_cli("dump-config", "--config", str(cfg))
    assert proc.returncode == 2


def test_unknown_environment_variable_rejected():
    proc = run_cli("dump-config", env_extra={"TWINPROBE_WARP": "9"})
    assert proc.returncode == 2
    assert "unknown environment variable" in proc.stderr


def test_dump_config_round_trips(tmp_path):
    first = run_cli("dump-config", "--kappa", "2.5", "--n-th", "3")
    assert first.returncode == 0
    cfg = tmp_path / "dumped.cfg"
    cfg.write_text(first.stdout)
    second = run_cli("dump-config", "--config", str(cfg))
    assert second.stdout == first.stdout


def test_domain_error_exit_codes():
    proc = run_cli("entangle", "--coupling-chi", "-0.9")
    assert proc.returncode == 3
    assert "domain error" in proc.stderr
    proc = run_cli("fmin", "--tau-scaled", "0")
    assert proc.returncode == 3


def test_missing_entangler_parameters_is_config_error():
    proc = run_cli("entangle")
    assert proc.returncode == 2


def test_verify_passes_and_tight_tolerance_fails():
    proc = run_cli("verify")
    assert proc.returncode == 0
    assert "VERIFY: pass" in proc.stdout
    proc = run_cli("verify", "--tolerance", "1e-14")
    assert proc.returncode == 4
    assert "VERIFY: FAIL" in proc.stdout


def test_verify_printed_signal_is_informational_only():
    proc = run_cli("verify", "--include-printed-signal")
    assert proc.returncode == 0
    assert "readout-signal-printed" in proc.stdout
    assert "informational" in proc.stdout
    assert "VERIFY: pass" in proc.stdout


def test_budget_feasibility_examples():
    proc = run_cli(
        "budget", "--gamma-mech", "1e-6", "--n-th", "20",
        "--phi", repr(PI / 4), "--tau-scaled", repr(PI / 2),
    )
    assert proc.returncode == 0
    assert stdout_value(proc, "coherence budget") == pytest.approx(5e4)
    assert stdout_value(proc, "time used") == pytest.approx(3 * PI / 4)
    assert "feasible = yes" in proc.stdout
    proc = run_cli(
        "budget", "--gamma-mech", "0.1", "--n-th", "20",
        "--phi", repr(PI / 4), "--tau-scaled", repr(PI / 2),
    )
    assert "feasible = no" in proc.stdout


def test_temperature_overrides_occupation():
    proc = run_cli("fmin", "--temperature", "0.5", "--omega", "1")
    assert proc.returncode == 0
    assert stdout_value(proc, "n_th") == pytest.approx(1.15651764274966565, rel=1e-9)


@pytest.mark.skipif(shutil.which("twinprobe") is None, reason="script not on PATH")
def test_console_script_entry_point():
    proc = subprocess.run(
        ["twinprobe", "fmin", "--tau-scaled", "1.0"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "f_min" in proc.stdout
