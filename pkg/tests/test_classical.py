"""Classical generator-pair clocks: exact moments, sequences, canonical form.

Oracle values come from the Erlang closed forms (the biased chain's delay is
a d-stage Erlang) and from scipy's gamma distribution, computed without the
module under test.
"""
import numpy as np
import pytest
from scipy import stats

from tickbench import classical, delay
from tickbench.classical import DegenerateClock, ladder_clock, random_clock
from tickbench.delay import ZeroMass


@pytest.mark.parametrize("d", [1, 2, 5, 64])
def test_ladder_exact_moments(d):
    m = classical.first_tick_moments(ladder_clock(d))
    assert m.mass == pytest.approx(1.0, rel=1e-12)
    assert m.mean == pytest.approx(float(d), rel=1e-12)
    assert m.variance == pytest.approx(float(d), rel=1e-10)
    assert m.accuracy == pytest.approx(float(d), rel=1e-10)


def test_ladder_density_matches_gamma_pdf():
    clock = ladder_clock(3)
    grid = classical.suggested_grid(clock, sigmas=20.0)
    got = classical.first_tick_delay(clock, grid)
    want = stats.gamma(a=3, scale=1.0).pdf(grid)
    assert np.abs(got.values - want).max() < 1e-9


def test_silent_evolution_frozen_point():
    # chain of 3 at t = 0.7: populations e^-t * (1, t, t^2/2)
    v = classical.evolve_no_tick(ladder_clock(3), 0.7)
    np.testing.assert_allclose(v, [0.4965853, 0.34760971, 0.1216634], atol=1e-7)


def test_validate_flags_structure_violations():
    good = ladder_clock(3)
    assert classical.validate(good).ok
    bad_n = classical.ClassicalClock(
        np.array([[-1.0, -0.2], [1.0, -1.0]]), np.zeros((2, 2)), np.array([1.0, 0.0])
    )
    report = classical.validate(bad_n)
    assert not report.ok and any("off-diagonal" in v for v in report.violations)
    gains = classical.ClassicalClock(
        np.array([[-1.0, 0.0], [2.0, -1.0]]),
        np.zeros((2, 2)),
        np.array([0.5, 0.5]),
    )
    report = classical.validate(gains)
    assert not report.ok and any("gains population" in v for v in report.violations)


def test_leaky_clock_passes_validation():
    # strictly dissipative column is allowed, mass just leaks
    n_gen = np.array([[-2.0]])
    t_gen = np.array([[1.0]])
    clock = classical.ClassicalClock(n_gen, t_gen, np.array([1.0]))
    assert classical.validate(clock).ok
    m = classical.first_tick_moments(clock)
    assert m.mass == pytest.approx(0.5)
    assert m.accuracy == pytest.approx(1.0)


def test_degenerate_and_zero_mass_errors():
    silent_forever = classical.ClassicalClock(
        np.zeros((1, 1)), np.zeros((1, 1)), np.array([1.0])
    )
    with pytest.raises(DegenerateClock):
        classical.first_tick_moments(silent_forever)
    never_ticks = classical.ClassicalClock(
        np.array([[-1.0]]), np.zeros((1, 1)), np.array([1.0])
    )
    with pytest.raises(ZeroMass):
        classical.first_tick_moments(never_ticks)


def test_tick_sequence_scaling_and_convolution_equivalence():
    clock = ladder_clock(3)
    grid = classical.suggested_grid(clock, ticks=3, sigmas=30.0)
    seq = classical.tick_sequence_delays(clock, 3, grid)
    for j, s in enumerate(seq, start=1):
        assert delay.moments(s).accuracy == pytest.approx(3.0 * j, rel=1e-6)
    # reset clock: second tick is the self-convolution of the first
    conv = delay.convolve(seq[0], seq[0])
    n = min(conv.values.size, seq[1].values.size)
    assert np.abs(conv.values[:n] - seq[1].values[:n]).max() < 1e-6 * seq[1].values.max()


def test_row_shift_invariance():
    # permuting tick rows moves where ticks land, not when they happen
    rng = np.random.default_rng(7)
    for seed in range(10):
        clock = random_clock(4, seed)
        perm = rng.permutation(4)
        shifted = classical.ClassicalClock(clock.no_tick, clock.tick[perm], clock.initial)
        grid = classical.suggested_grid(clock, sigmas=8.0, points_per_std=40)
        a = classical.first_tick_delay(clock, grid)
        b = classical.first_tick_delay(shifted, grid)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_random_clock_is_deterministic_and_valid():
    a = random_clock(5, 123)
    b = random_clock(5, 123)
    np.testing.assert_array_equal(a.no_tick, b.no_tick)
    np.testing.assert_array_equal(a.tick, b.tick)
    assert classical.validate(a).ok
    col = (a.no_tick + a.tick).sum(axis=0)
    np.testing.assert_allclose(col, 0.0, atol=1e-12)
    assert not np.array_equal(a.no_tick, random_clock(5, 124).no_tick)


def test_canonicalize_structure_and_gain():
    for seed in range(25):
        clock = random_clock(5, seed)
        raw = classical.first_tick_moments(clock).accuracy
        form = classical.canonicalize_to_reset(clock)
        assert form.accuracy >= raw - 1e-9
        assert form.accuracy <= 5.0 + 1e-9
        # reset form: every tick column is proportional to the initial state
        canon = form.clock
        support = np.flatnonzero(canon.tick.any(axis=1))
        assert support.tolist() == [form.source_state]
        assert canon.initial[form.source_state] == 1.0
        assert form.accuracy == pytest.approx(form.accuracy_table.max(), rel=1e-12)
        # canonicalizing a reset clock cannot improve it further
        again = classical.canonicalize_to_reset(canon)
        assert again.accuracy <= form.accuracy * (1.0 + 1e-9) + 1e-12


def test_canonicalize_needs_tick_mass():
    clock = classical.ClassicalClock(
        np.array([[-1.0]]), np.zeros((1, 1)), np.array([1.0])
    )
    with pytest.raises(DegenerateClock):
        classical.canonicalize_to_reset(clock)


def test_suggested_grid_contract():
    clock = ladder_clock(4)
    grid = classical.suggested_grid(clock, ticks=2)
    assert grid[0] == 0.0
    assert np.allclose(np.diff(grid), grid[1] - grid[0])
    assert grid[-1] >= 2.0 * 4.0  # at least the two-tick mean


def test_json_round_trip():
    clock = random_clock(3, 42)
    back = classical.from_json(classical.to_json(clock))
    np.testing.assert_allclose(back.no_tick, clock.no_tick, rtol=1e-15)
    np.testing.assert_allclose(back.tick, clock.tick, rtol=1e-15)
    np.testing.assert_allclose(back.initial, clock.initial, rtol=1e-15)
