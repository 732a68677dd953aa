"""End-to-end command line runs through subprocess.

Exit codes are part of the contract: 0 for success, 1 for a failed
--check, 2 for unusable arguments. The hidden TICKBENCH_SELFTEST_PERTURB
variable shifts reported values so the self-checks can be shown to trip.
"""
import json
import os
import subprocess
import sys

import pytest

from tickbench import classical, quantum


def run_cli(*args, cwd, perturb=None, threads=None):
    env = {k: v for k, v in os.environ.items()
           if k not in ("TICKBENCH_SELFTEST_PERTURB", "TICKBENCH_THREADS")}
    if perturb is not None:
        env["TICKBENCH_SELFTEST_PERTURB"] = str(perturb)
    if threads is not None:
        env["TICKBENCH_THREADS"] = str(threads)
    cmd = [sys.executable, "-m", "tickbench.cli", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=env, cwd=cwd)


def csv_rows(path):
    header, *rows = path.read_text().strip().splitlines()
    return header, [r.split(",") for r in rows]


def test_ladder_check_writes_table(tmp_path):
    proc = run_cli("ladder", "--d", "1..4", "--check", "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "check ok" in proc.stdout
    header, rows = csv_rows(tmp_path / "o" / "ladder_table.csv")
    assert header == "d,R1,R2_over_2,R3_over_3"
    assert [r[0] for r in rows] == ["1", "2", "3", "4"]
    assert float(rows[3][1]) == pytest.approx(4.0, rel=1e-6)


def test_dimension_list_parsing(tmp_path):
    proc = run_cli("ladder", "--d", "2,5", "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0
    _, rows = csv_rows(tmp_path / "o" / "ladder_table.csv")
    assert [r[0] for r in rows] == ["2", "5"]

    bad = run_cli("ladder", "--d", "", "--out", "o", cwd=tmp_path)
    assert bad.returncode == 2
    worse = run_cli("ladder", "--d", "abc", "--out", "o", cwd=tmp_path)
    assert worse.returncode == 2


def test_classical_sweep_check(tmp_path):
    proc = run_cli("classical-sweep", "--d", "6", "--trials", "60", "--check",
                   "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    header, rows = csv_rows(tmp_path / "o" / "classical_sweep.csv")
    assert header == "index,R_raw,R_canonical"
    assert len(rows) == 60
    assert all(float(r[2]) >= float(r[1]) - 1e-9 for r in rows)

    empty = run_cli("classical-sweep", "--d", "6", "--trials", "0", "--out", "e",
                    cwd=tmp_path)
    assert empty.returncode == 0
    _, rows = csv_rows(tmp_path / "e" / "classical_sweep.csv")
    assert rows == []


def test_canonicalize_accepts_clock_config(tmp_path):
    clock = classical.random_clock(4, seed=9)
    cfg = tmp_path / "clock.json"
    cfg.write_text(json.dumps({"clock": json.loads(classical.to_json(clock))}))
    proc = run_cli("canonicalize", "--config", str(cfg), "--check", "--out", "o",
                   cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    stored = classical.from_json((tmp_path / "o" / "canonical_clock.json").read_text())
    report = classical.validate(stored)
    assert report.ok, report.violations


def test_quantum_r_small_dims(tmp_path):
    proc = run_cli("quantum-r", "--d", "2,4", "--check", "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    header, rows = csv_rows(tmp_path / "o" / "quantum_r.csv")
    assert header == "d,sigma0,eta,R1,mu,sigma"
    assert len(rows) == 2
    theader, trows = csv_rows(tmp_path / "o" / "quantum_r_timing.csv")
    assert theader == "d,runtime_ms" and len(trows) == 2


def test_fig2a_orderings_hold(tmp_path):
    proc = run_cli("fig2a", "--check", "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    header, rows = csv_rows(tmp_path / "o" / "fig2a.csv")
    assert header == "t,DeltaC_quasi_sqrt_d,DeltaC_quasi_1p8,DeltaC_swp"
    assert len(rows) == 8 * 13 + 1


def test_fig2b_small_pair(tmp_path):
    proc = run_cli("fig2b", "--d", "2,16", "--check", "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    _, rows = csv_rows(tmp_path / "o" / "fig2b.csv")
    at16 = {int(r[0]): (float(r[1]), float(r[2])) for r in rows}[16]
    assert at16[0] > at16[1]


def test_mc_check_and_summary(tmp_path):
    proc = run_cli("mc-check", "--trials", "4000", "--check", "--out", "o",
                   cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    summary = json.loads((tmp_path / "o" / "mc_summary.json").read_text())
    assert summary["classical"]["trials"] == 4000
    assert summary["quantum"]["trials"] == 4000
    header, rows = csv_rows(tmp_path / "o" / "mc_classical_samples.csv")
    assert header == "trial,tick_index,time"
    assert len(rows) >= 4000


def test_optimize_with_config_budget(tmp_path):
    cfg = tmp_path / "opt.json"
    cfg.write_text(json.dumps({"budget": 240, "restarts": 2}))
    proc = run_cli("optimize", "--d", "2", "--check", "--config", str(cfg),
                   "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    spec = quantum.spec_from_json((tmp_path / "o" / "optimize.json").read_text())
    assert spec.dim == 2
    r = quantum.quantum_accuracy(spec).moments.accuracy
    assert r >= 3.8


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": "3"}))
    from_cfg = run_cli("ladder", "--config", str(cfg), "--out", "a", cwd=tmp_path)
    assert from_cfg.returncode == 0
    _, rows = csv_rows(tmp_path / "a" / "ladder_table.csv")
    assert [r[0] for r in rows] == ["3"]

    flag_wins = run_cli("ladder", "--config", str(cfg), "--d", "2", "--out", "b",
                        cwd=tmp_path)
    assert flag_wins.returncode == 0
    _, rows = csv_rows(tmp_path / "b" / "ladder_table.csv")
    assert [r[0] for r in rows] == ["2"]


def test_svg_artifact(tmp_path):
    proc = run_cli("ladder", "--d", "1..3", "--svg", "--out", "o", cwd=tmp_path)
    assert proc.returncode == 0
    text = (tmp_path / "o" / "ladder_table.svg").read_text()
    assert text.lstrip().startswith("<svg")


def test_unreadable_config_is_usage_error(tmp_path):
    proc = run_cli("ladder", "--config", str(tmp_path / "missing.json"),
                   "--out", "o", cwd=tmp_path)
    assert proc.returncode == 2
    not_object = tmp_path / "list.json"
    not_object.write_text("[1, 2]")
    proc = run_cli("ladder", "--config", str(not_object), "--out", "o", cwd=tmp_path)
    assert proc.returncode == 2


def test_threads_do_not_change_artifacts(tmp_path):
    blobs = []
    for threads in (1, 2, 4):
        out = f"t{threads}"
        proc = run_cli("mc-check", "--trials", "3000", "--threads", str(threads),
                       "--out", out, cwd=tmp_path)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        blobs.append(tuple(
            (tmp_path / out / name).read_bytes()
            for name in ("mc_classical_samples.csv", "mc_quantum_samples.csv")
        ))
    assert blobs[0] == blobs[1] == blobs[2]


@pytest.mark.parametrize(
    "args,shift",
    [
        (("ladder", "--d", "1..3"), 10.0),
        (("quantum-r", "--d", "16"), -30.0),
        (("mc-check", "--trials", "4000"), 1.0),
    ],
    ids=["ladder", "quantum-r", "mc-check"],
)
def test_perturbed_values_trip_checks(tmp_path, args, shift):
    proc = run_cli(*args, "--check", "--out", "o", cwd=tmp_path, perturb=shift)
    assert proc.returncode == 1, proc.stdout + proc.stderr
    assert "check failed" in proc.stdout


def test_perturbed_optimizer_trips_check(tmp_path):
    cfg = tmp_path / "opt.json"
    cfg.write_text(json.dumps({"budget": 240, "restarts": 2}))
    proc = run_cli("optimize", "--d", "2", "--check", "--config", str(cfg),
                   "--out", "o", cwd=tmp_path, perturb=-10.0)
    assert proc.returncode == 1
    assert "check failed" in proc.stdout
