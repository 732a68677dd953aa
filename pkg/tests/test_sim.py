"""Monte-Carlo samplers: determinism, moment recovery, error handling."""
import numpy as np
import pytest

from tickbench import classical, quantum, sim
from tickbench.cli import D2_PRESET_DIAG


def _ladder(d: int) -> classical.ClassicalClock:
    return classical.ladder_clock(d)


def test_same_seed_reproduces_exactly():
    kw = dict(trials=2000, dt=1e-2, seed=7)
    a = sim.sample_classical(_ladder(3), **kw)
    b = sim.sample_classical(_ladder(3), **kw)
    np.testing.assert_array_equal(a.times, b.times)
    assert (a.dead, a.truncated) == (b.dead, b.truncated)


def test_thread_count_does_not_change_draws():
    kw = dict(trials=3000, dt=1e-2, seed=11)
    one = sim.sample_classical(_ladder(4), threads=1, **kw)
    four = sim.sample_classical(_ladder(4), threads=4, **kw)
    np.testing.assert_array_equal(one.times, four.times)

    spec = quantum.ClockSpec(dim=2, sigma0=0.0, potential_kind="diag",
                             potential_values=D2_PRESET_DIAG)
    qkw = dict(trials=3000, dt=spec.period / 256.0, seed=11)
    qa = sim.sample_quantum(spec, threads=1, **qkw)
    qb = sim.sample_quantum(spec, threads=4, **qkw)
    np.testing.assert_array_equal(qa.times, qb.times)


def test_ladder_recovers_analytic_moments():
    res = sim.sample_classical(_ladder(4), trials=20_000, dt=1e-3, seed=1)
    tick = sim.summarize(res)["per_tick"][0]
    assert tick["count"] == 20_000
    assert abs(tick["mean"] - 4.0) <= 3.0 * tick["se_mean"]
    assert abs(tick["std"] - 2.0) <= 3.0 * tick["se_std"]


def test_later_ticks_scale_linearly():
    res = sim.sample_classical(_ladder(3), trials=20_000, dt=1e-3, seed=2, ticks=2)
    first, second = sim.summarize(res)["per_tick"]
    bound = 3.0 * (second["se_mean"] + 2.0 * first["se_mean"])
    assert abs(second["mean"] - 2.0 * first["mean"]) <= bound


def test_quantum_one_level_is_exponential():
    spec = quantum.ClockSpec(dim=1, sigma0=0.0, potential_kind="diag",
                             potential_values=(0.8,))
    res = sim.sample_quantum(spec, trials=20_000, dt=1e-3, seed=3)
    tick = sim.summarize(res)["per_tick"][0]
    assert abs(tick["mean"] - 0.625) <= 3.0 * tick["se_mean"] + res.dt
    assert abs(tick["std"] - 0.625) <= 3.0 * tick["se_std"] + res.dt


def test_halving_dt_stays_within_statistical_error():
    coarse = sim.sample_classical(_ladder(4), trials=20_000, dt=2e-3, seed=4)
    fine = sim.sample_classical(_ladder(4), trials=20_000, dt=1e-3, seed=4)
    a = sim.summarize(coarse)["per_tick"][0]
    b = sim.summarize(fine)["per_tick"][0]
    combined = np.hypot(a["se_mean"], b["se_mean"])
    assert abs(a["mean"] - b["mean"]) < combined


def test_summary_exposes_counts_and_uncertainties():
    res = sim.sample_classical(_ladder(2), trials=1500, dt=1e-2, seed=5)
    out = sim.summarize(res)
    assert out["dead"] == 0
    assert set(out["per_tick"][0]) == {
        "tick_index", "count", "mean", "std", "se_mean", "se_std",
        "accuracy", "se_accuracy",
    }
    assert out["per_tick"][0]["tick_index"] == 1


def test_short_horizon_marks_trials_truncated():
    res = sim.sample_classical(_ladder(4), trials=500, dt=1e-2, seed=6, t_max=1.0)
    assert res.truncated > 0
    assert np.isnan(res.times).sum() == res.truncated
    assert sim.summarize(res)["per_tick"][0]["count"] == 500 - res.truncated


def test_input_validation():
    with pytest.raises(ValueError):
        sim.sample_classical(_ladder(2), trials=0, dt=1e-2, seed=0)
    spec = quantum.ClockSpec(dim=1, sigma0=0.0, potential_kind="diag",
                             potential_values=(0.8,))
    with pytest.raises(ValueError):
        sim.sample_quantum(spec, trials=10, dt=1.0, seed=0)
