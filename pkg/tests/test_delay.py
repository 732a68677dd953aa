"""Delay-algebra unit tests against independently computed closed forms.

The expected numbers are frozen from textbook formulas (gamma/Erlang moment
identities, incomplete-gamma partial masses), not from the implementation.
"""
import math

import numpy as np
import pytest

from tickbench import delay
from tickbench.delay import (
    Erlang,
    Exponential,
    GridOverflow,
    Moments,
    NormExceeded,
    Sampled,
    ZeroMass,
)


# -- moments of the analytic kinds --------------------------------------------

@pytest.mark.parametrize(
    "shape,mean,second", [(2, 2.0, 6.0), (4, 4.0, 20.0), (8, 8.0, 72.0), (64, 64.0, 4160.0)]
)
def test_erlang_moments_match_gamma_closed_form(shape, mean, second):
    m = delay.moments(Erlang(shape, 1.0))
    assert m.mass == 1.0
    assert m.mean == pytest.approx(mean, rel=1e-12)
    assert m.second_moment == pytest.approx(second, rel=1e-12)
    assert m.accuracy == pytest.approx(float(shape), rel=1e-12)


def test_erlang_weight_scales_mass_only():
    m = delay.moments(Erlang(3, 2.0, weight=0.25))
    assert m.mass == 0.25
    assert m.mean == pytest.approx(1.5)
    assert m.accuracy == pytest.approx(3.0)


def test_exponential_base_case_is_exact():
    # density 0.5 * exp(-t): mass 1/2, normalized mean 1, second moment 2
    m = delay.moments(Exponential(1.0, 0.5))
    assert m.mass == 0.5
    assert m.mean == 1.0
    assert m.second_moment == 2.0
    assert m.accuracy == 1.0


def test_exponential_sampled_within_1e6():
    s = delay.as_sampled(Exponential(1.0, 0.5))
    m = delay.moments(s)
    assert m.mass == pytest.approx(0.5, rel=1e-6)
    assert m.mean == pytest.approx(1.0, rel=1e-6)
    assert m.second_moment == pytest.approx(2.0, rel=1e-6)
    assert m.accuracy == pytest.approx(1.0, rel=1e-6)


def test_zero_mass_raises():
    with pytest.raises(ZeroMass):
        delay.moments(Sampled(0.1, np.zeros(32)))
    with pytest.raises(ZeroMass):
        delay.moments(Erlang(2, 1.0, weight=0.0))


def test_invalid_parameters_raise():
    with pytest.raises(ValueError):
        Exponential(0.0)
    with pytest.raises(ValueError):
        Erlang(0, 1.0)
    with pytest.raises(ValueError):
        Sampled(-0.1, np.ones(8))
    with pytest.raises(ValueError):
        Sampled(0.1, np.ones(1))


def test_accuracy_conventions():
    assert Moments(1.0, 1.0, 1.0).accuracy == math.inf  # zero variance
    assert Moments(1.0, math.inf, math.inf).accuracy == 0.0  # divergent mean


# -- convolution ----------------------------------------------------------------

def test_convolve_same_rate_stays_analytic():
    c = delay.convolve(Erlang(2, 1.5, 0.5), Erlang(3, 1.5, 0.8))
    assert isinstance(c, Erlang)
    assert c.shape == 5 and c.rate == 1.5
    assert c.weight == pytest.approx(0.4)


def test_convolve_exponentials_give_erlang():
    c = delay.convolve(Exponential(2.0), Exponential(2.0))
    assert isinstance(c, Erlang)
    assert c.shape == 2 and c.rate == 2.0
    assert c.weight == pytest.approx(0.25)  # (amp/rate)^2


def test_convolve_mixed_rates_adds_means_and_variances():
    # default grids stop at 12 sigma, so identities hold to ~1e-5 there;
    # the analytic path above covers the exact statement
    a, b = Erlang(2, 1.0), Erlang(3, 2.0)
    c = delay.convolve(a, b)
    assert isinstance(c, Sampled)
    ma, mb, mc = delay.moments(a), delay.moments(b), delay.moments(c)
    assert mc.mass == pytest.approx(ma.mass * mb.mass, rel=1e-5)
    assert mc.mean == pytest.approx(ma.mean + mb.mean, rel=1e-5)
    assert mc.variance == pytest.approx(ma.variance + mb.variance, rel=1e-5)


def test_convolve_grid_cap():
    # unflagged inputs refuse to truncate
    a = delay.as_sampled(Erlang(2, 1.0), t_max=60.0)
    assert not a.tail_flag
    with pytest.raises(GridOverflow):
        delay.convolve(a, a, max_points=64)
    # flagged inputs are allowed to truncate instead
    s = delay.as_sampled(Erlang(2, 1.0))
    flagged = Sampled(s.grid_step, s.values, tail_flag=True)
    out = delay.convolve(flagged, flagged, max_points=512)
    assert isinstance(out, Sampled) and out.tail_flag
    assert out.values.size == 512


# -- mixtures -------------------------------------------------------------------

def test_mix_merges_matching_erlangs():
    out = delay.mix([Erlang(3, 1.0, 0.3), Erlang(3, 1.0, 0.4)])
    assert isinstance(out, Erlang)
    assert out.weight == pytest.approx(0.7)


def test_mix_two_branch_closed_form():
    # branches: Erlang(1, 2, w=.9) and Erlang(1, 0.05, w=.1)
    # normalized mixture moments from the closed forms of each branch
    mu = 0.9 * 0.5 + 0.1 * 20.0
    chi = 0.9 * 0.5 + 0.1 * 800.0
    out = delay.mix([Erlang(1, 2.0, 0.9), Erlang(1, 0.05, 0.1)])
    m = delay.moments(out)
    assert m.mass == pytest.approx(1.0, rel=1e-4)
    assert m.mean == pytest.approx(mu, rel=1e-3)
    assert m.accuracy == pytest.approx(mu**2 / (chi - mu**2), rel=5e-3)


def test_mix_rejects_excess_mass():
    with pytest.raises(NormExceeded):
        delay.mix([Exponential(1.0, 1.0), Exponential(1.0, 0.5)])


# -- rescaling and partial norms --------------------------------------------------

def test_rescale_analytic_fields():
    e = delay.rescale(Exponential(1.0, 0.5), 10.0)
    assert isinstance(e, Exponential) and e.rate == 10.0 and e.amplitude == 5.0
    g = delay.rescale(Erlang(4, 2.0, 0.7), 0.5)
    assert isinstance(g, Erlang) and g.rate == 1.0 and g.weight == 0.7


def test_rescale_sampled_keeps_accuracy():
    s = delay.as_sampled(Erlang(4, 1.0))
    r = delay.rescale(s, 10.0)
    assert delay.moments(r).accuracy == pytest.approx(delay.moments(s).accuracy, rel=1e-9)
    assert delay.moments(r).mean == pytest.approx(delay.moments(s).mean / 10.0, rel=1e-9)


def test_partial_norm_erlang_frozen_value():
    # regularized lower incomplete gamma: P(2, 1) = 1 - 2/e
    assert delay.partial_norm(Erlang(2, 1.0), 1.0) == pytest.approx(
        1.0 - 2.0 / math.e, abs=1e-12
    )
    assert delay.partial_norm(Erlang(2, 1.0), 0.0) == 0.0


def test_partial_norm_monotone_with_mass_limit():
    for d in (Exponential(0.7, 0.6), Erlang(3, 1.2, 0.8), delay.as_sampled(Erlang(2, 1.0))):
        mass = delay.moments(d).mass
        ts = np.linspace(0.1, 60.0, 40)
        vals = [delay.partial_norm(d, float(t)) for t in ts]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(mass, rel=1e-5)


# -- grids and serialization -------------------------------------------------------

def test_sample_grid_shape_and_cap():
    g = delay.sample_grid(0.5, 2.0)
    assert g[0] == 0.0 and g[-1] >= 2.0
    assert np.allclose(np.diff(g), 0.5)
    with pytest.raises(GridOverflow):
        delay.sample_grid(1e-9, 1e3)


def test_json_round_trip():
    for d in (Exponential(1.3, 0.4), Erlang(5, 0.8, 0.9)):
        back = delay.from_json(delay.to_json(d))
        assert back == d


def test_csv_round_trip(tmp_path):
    s = delay.as_sampled(Erlang(3, 1.0))
    path = str(tmp_path / "delay.csv")
    delay.write_csv(s, path)
    back = delay.read_csv(path)
    assert back.grid_step == pytest.approx(s.grid_step, rel=1e-12)
    np.testing.assert_allclose(back.values, s.values, rtol=1e-10)
