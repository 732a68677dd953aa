"""Algebra of tick-delay densities.

A delay function ``tau(t)`` is a non-negative density on ``[0, inf)`` whose
total mass ``Q = int tau dt`` is at most 1 (mass below 1 means the tick may
never arrive).  Statistics are always taken with respect to the normalized
density ``tau / Q``:

.. math::

    \\mu = \\frac{1}{Q}\\int t\\,\\tau(t)\\,dt, \\qquad
    \\chi = \\frac{1}{Q}\\int t^2\\,\\tau(t)\\,dt, \\qquad
    \\sigma^2 = \\chi - \\mu^2.

The figure of merit throughout the package is the per-tick accuracy
``mu**2 / sigma**2``, the squared inverse coefficient of variation.

Three representations are supported: two analytic kinds (exponential and
Erlang, closed under the operations where possible) and a sampled kind on a
uniform grid starting at t = 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid, simpson
from scipy.special import gammainc, gammaln

__all__ = [
    "Exponential",
    "Erlang",
    "Sampled",
    "Delay",
    "Moments",
    "ZeroMass",
    "GridOverflow",
    "NormExceeded",
    "moments",
    "convolve",
    "mix",
    "rescale",
    "partial_norm",
    "as_sampled",
    "sample_grid",
    "to_json",
    "from_json",
    "write_csv",
    "read_csv",
]

TOL_NORM = 1e-6
TOL_ZERO = 1e-12
MAX_GRID_POINTS = 4_000_000


class ZeroMass(ValueError):
    """Raised when a delay carries no usable mass (Q below threshold)."""


class GridOverflow(ValueError):
    """Raised when an operation would need a grid longer than the configured cap."""


class NormExceeded(ValueError):
    """Raised when combined delay mass would exceed 1 beyond tolerance."""


@dataclass(frozen=True)
class Exponential:
    """Density ``amplitude * exp(-rate * t)``; total mass is amplitude / rate."""

    rate: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.rate <= 0 or self.amplitude < 0:
            raise ValueError("exponential delay needs rate > 0 and amplitude >= 0")


@dataclass(frozen=True)
class Erlang:
    """Erlang density with integer shape and unit-free rate.

    ``weight`` scales the normalized density, so the total mass equals
    ``weight``.  This keeps sub-normalized components (for example one branch
    of a mixture) inside the analytic kind.
    """

    shape: int
    rate: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.shape < 1 or self.rate <= 0 or self.weight < 0:
            raise ValueError("erlang delay needs shape >= 1, rate > 0, weight >= 0")


@dataclass(frozen=True)
class Sampled:
    """Density samples on the uniform grid ``t_k = k * grid_step``.

    ``tail_flag`` records that mass beyond the grid end was truncated, so
    downstream consumers know moments are computed from the covered part only.
    """

    grid_step: float
    values: NDArray[np.float64]
    tail_flag: bool = False

    def __post_init__(self) -> None:
        if self.grid_step <= 0:
            raise ValueError("grid_step must be positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("values must be a 1-d array with at least 2 samples")

    @property
    def times(self) -> NDArray[np.float64]:
        return self.grid_step * np.arange(self.values.size)


Delay = Exponential | Erlang | Sampled


@dataclass(frozen=True)
class Moments:
    """First three moments of a delay, normalized by its mass.

    ``mass`` is Q, ``mean`` and ``second_moment`` are taken under tau / Q.
    """

    mass: float
    mean: float
    second_moment: float

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @property
    def std(self) -> float:
        v = self.variance
        return math.sqrt(v) if v > 0 else 0.0

    @property
    def accuracy(self) -> float:
        """Squared mean over variance; 0 when the mean is not finite."""
        if not (math.isfinite(self.mean) and math.isfinite(self.second_moment)):
            return 0.0
        v = self.variance
        if v <= 0:
            return math.inf
        return self.mean**2 / v


def moments(delay: Delay) -> Moments:
    """Mass and normalized first/second moments of a delay function.

    Analytic kinds use closed forms; sampled kinds use composite Simpson
    quadrature on the stored grid.

    Raises
    ------
    ZeroMass
        If the total mass is below the zero threshold.
    """
    if isinstance(delay, Exponential):
        q = delay.amplitude / delay.rate
        if q < TOL_ZERO:
            raise ZeroMass("exponential delay has vanishing amplitude")
        return Moments(q, 1.0 / delay.rate, 2.0 / delay.rate**2)
    if isinstance(delay, Erlang):
        if delay.weight < TOL_ZERO:
            raise ZeroMass("erlang delay has vanishing weight")
        d, lam = delay.shape, delay.rate
        return Moments(delay.weight, d / lam, d * (d + 1) / lam**2)
    values = delay.values
    dt = delay.grid_step
    q = float(simpson(values, dx=dt))
    if q < TOL_ZERO:
        raise ZeroMass("sampled delay carries no mass on its grid")
    t = delay.times
    first = float(simpson(t * values, dx=dt))
    second = float(simpson(t * t * values, dx=dt))
    return Moments(q, first / q, second / q)


def sample_grid(step: float, t_max: float) -> NDArray[np.float64]:
    """Uniform grid from 0 to at least t_max (inclusive) with the given step."""
    n = int(math.ceil(t_max / step)) + 1
    if n > MAX_GRID_POINTS:
        raise GridOverflow(f"grid of {n} points exceeds cap {MAX_GRID_POINTS}")
    return step * np.arange(n)


def _density_on(delay: Exponential | Erlang, t: NDArray[np.float64]) -> NDArray[np.float64]:
    if isinstance(delay, Exponential):
        return delay.amplitude * np.exp(-delay.rate * t)
    d, lam, w = delay.shape, delay.rate, delay.weight
    out = np.zeros_like(t)
    pos = t > 0
    # log-space evaluation keeps large shapes finite
    log_pdf = d * math.log(lam) + (d - 1) * np.log(t[pos]) - lam * t[pos] - gammaln(d)
    out[pos] = w * np.exp(log_pdf)
    if d == 1:
        out[t == 0] = w * lam
    return out


def _auto_horizon(delay: Exponential | Erlang, sigmas: float = 40.0) -> float:
    m = moments(delay)
    return m.mean + sigmas * max(m.std, m.mean * 0.1)


def as_sampled(delay: Delay, step: float | None = None, t_max: float | None = None) -> Sampled:
    """Resolve any delay kind to the sampled representation.

    For analytic kinds the default horizon extends far enough past the mean
    that truncated mass is negligible at double precision.
    """
    if isinstance(delay, Sampled):
        if step is None or step == delay.grid_step:
            return delay
        # linear resampling onto the requested step
        t_new = sample_grid(step, t_max if t_max is not None else delay.times[-1])
        vals = np.interp(t_new, delay.times, delay.values, left=0.0, right=0.0)
        return Sampled(step, vals, tail_flag=delay.tail_flag)
    horizon = t_max if t_max is not None else _auto_horizon(delay)
    if step is None:
        m = moments(delay)
        step = max(m.std, horizon * 1e-3) / 200.0
    t = sample_grid(step, horizon)
    return Sampled(step, _density_on(delay, t))


def _conv_trapezoid(a: NDArray, b: NDArray, dt: float, n_out: int) -> NDArray:
    # direct discrete convolution with trapezoid end-point weights
    full = np.convolve(a, b)[:n_out]
    corr = np.zeros(n_out)
    nb = min(n_out, b.size)
    na = min(n_out, a.size)
    corr[:nb] += 0.5 * a[0] * b[:nb]
    corr[:na] += 0.5 * b[0] * a[:na]
    return (full - corr) * dt


def convolve(a: Delay, b: Delay, *, max_points: int = MAX_GRID_POINTS) -> Delay:
    """Delay of two ticks in sequence (density convolution).

    Same-rate analytic inputs stay analytic (sums of shapes); anything else
    is resolved onto a common grid and convolved directly in O(n*m).

    The identities mass(a*b) = mass(a)*mass(b) and mean(a*b) = mean(a)+mean(b)
    hold exactly for the analytic path and to quadrature accuracy otherwise.
    """
    if isinstance(a, (Exponential, Erlang)) and isinstance(b, (Exponential, Erlang)):
        ea, eb = _as_erlang(a), _as_erlang(b)
        if ea.rate == eb.rate:
            return Erlang(ea.shape + eb.shape, ea.rate, ea.weight * eb.weight)
    sa = as_sampled(a)
    sb = as_sampled(b, step=sa.grid_step)
    if sa.grid_step != sb.grid_step:
        sb = as_sampled(sb, step=sa.grid_step, t_max=sb.times[-1])
    n_out = sa.values.size + sb.values.size - 1
    truncated = False
    if n_out > max_points:
        if not (sa.tail_flag or sb.tail_flag):
            raise GridOverflow(
                f"convolution support needs {n_out} points (cap {max_points}); "
                "set tail_flag on an input to allow truncation"
            )
        n_out = max_points
        truncated = True
    vals = _conv_trapezoid(sa.values, sb.values, sa.grid_step, n_out)
    np.clip(vals, 0.0, None, out=vals)
    return Sampled(sa.grid_step, vals, tail_flag=sa.tail_flag or sb.tail_flag or truncated)


def _as_erlang(d: Exponential | Erlang) -> Erlang:
    if isinstance(d, Erlang):
        return d
    return Erlang(1, d.rate, d.amplitude / d.rate)


def mix(components: list[Delay]) -> Delay:
    """Pointwise sum of sub-normalized branch delays.

    Raises
    ------
    NormExceeded
        If the branch masses sum beyond 1 + TOL_NORM.
    """
    if not components:
        raise ValueError("mix needs at least one component")
    total = sum(moments(c).mass for c in components)
    if total > 1.0 + TOL_NORM:
        raise NormExceeded(f"mixture mass {total} exceeds 1")
    analytic = [c for c in components if isinstance(c, (Exponential, Erlang))]
    if len(analytic) == len(components):
        erls = [_as_erlang(c) for c in analytic]
        first = erls[0]
        if all(e.shape == first.shape and e.rate == first.rate for e in erls):
            return Erlang(first.shape, first.rate, sum(e.weight for e in erls))
    sampled = [as_sampled(c) for c in components]
    step = min(s.grid_step for s in sampled)
    horizon = max(s.times[-1] for s in sampled)
    t = sample_grid(step, horizon)
    vals = np.zeros_like(t)
    tail = False
    for s in sampled:
        vals += np.interp(t, s.times, s.values, left=0.0, right=0.0)
        tail = tail or s.tail_flag
    return Sampled(step, vals, tail_flag=tail)


def rescale(delay: Delay, factor: float) -> Delay:
    """Time rescaling tau'(t) = factor * tau(factor * t).

    Leaves the mass and the accuracy invariant while dividing the mean by
    the factor.
    """
    if factor <= 0:
        raise ValueError("rescale factor must be positive")
    if isinstance(delay, Exponential):
        return Exponential(delay.rate * factor, delay.amplitude * factor)
    if isinstance(delay, Erlang):
        return Erlang(delay.shape, delay.rate * factor, delay.weight)
    return Sampled(delay.grid_step / factor, factor * delay.values, tail_flag=delay.tail_flag)


def partial_norm(delay: Delay, t: float) -> float:
    """Mass accumulated up to time t, an increasing function of t with limit Q."""
    if t <= 0:
        return 0.0
    if isinstance(delay, Exponential):
        return delay.amplitude / delay.rate * (1.0 - math.exp(-delay.rate * t))
    if isinstance(delay, Erlang):
        return delay.weight * float(gammainc(delay.shape, delay.rate * t))
    cum = cumulative_trapezoid(delay.values, dx=delay.grid_step, initial=0.0)
    return float(np.interp(t, delay.times, cum, right=cum[-1]))


# -- serialization ----------------------------------------------------------

def to_json(delay: Exponential | Erlang) -> str:
    """Serialize an analytic delay kind to a JSON object string."""
    if isinstance(delay, Exponential):
        payload = {"kind": "exponential", "rate": delay.rate, "amplitude": delay.amplitude}
    elif isinstance(delay, Erlang):
        payload = {"kind": "erlang", "shape": delay.shape, "rate": delay.rate, "weight": delay.weight}
    else:
        raise TypeError("sampled delays serialize to CSV, not JSON")
    return json.dumps(payload)


def from_json(text: str) -> Exponential | Erlang:
    obj = json.loads(text)
    kind = obj.get("kind")
    if kind == "exponential":
        return Exponential(obj["rate"], obj.get("amplitude", 1.0))
    if kind == "erlang":
        return Erlang(obj["shape"], obj["rate"], obj.get("weight", 1.0))
    raise ValueError(f"unknown delay kind {kind!r}")


def write_csv(delay: Sampled, path: str) -> None:
    """Write a sampled delay as ``t,density`` rows with 12 significant digits."""
    with open(path, "w") as fh:
        fh.write("t,density\n")
        for t, v in zip(delay.times, delay.values):
            fh.write(f"{t:.12g},{v:.12g}\n")


def read_csv(path: str) -> Sampled:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("expected two columns: t,density")
    t, vals = data[:, 0], data[:, 1]
    step = float(t[-1]) / (t.size - 1)
    # tolerance covers the writer's 12-digit rounding at large t
    if t[0] != 0.0 or step <= 0 or np.abs(t - step * np.arange(t.size)).max() > 0.01 * step:
        raise ValueError("sampled delays need a uniform grid starting at t = 0")
    return Sampled(step, vals)
