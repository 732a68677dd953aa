"""Classical ticking clocks: population dynamics split into silent and tick moves.

A clock of dimension d is a pair of real d x d generators acting on a
population column vector v:

* ``no_tick`` (N): non-negative off-diagonal, non-positive diagonal; moves
  that do not emit a tick.
* ``tick`` (T): elementwise non-negative; moves that emit a tick.

Together they must be dissipative, column sums of N + T at most zero (zero
for a norm-preserving clock).  Conditioned on no tick having fired, the
population evolves as ``v(t) = expm(N t) @ v(0)`` and the density of the
first tick time is ``tau(t) = || T v(t) ||_1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .delay import Moments, Sampled, ZeroMass, TOL_ZERO, sample_grid

__all__ = [
    "ClassicalClock",
    "ValidationReport",
    "CanonicalForm",
    "DegenerateClock",
    "validate",
    "ladder_clock",
    "evolve_no_tick",
    "first_tick_delay",
    "first_tick_moments",
    "suggested_grid",
    "tick_sequence_delays",
    "canonicalize_to_reset",
    "random_clock",
    "to_json",
    "from_json",
]

_COLSUM_SLACK = 1e-9


class DegenerateClock(ValueError):
    """Raised when a clock cannot produce usable tick statistics."""


@dataclass(frozen=True)
class ClassicalClock:
    no_tick: NDArray[np.float64]
    tick: NDArray[np.float64]
    initial: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "no_tick", np.asarray(self.no_tick, dtype=np.float64))
        object.__setattr__(self, "tick", np.asarray(self.tick, dtype=np.float64))
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.no_tick.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: list[str]


def validate(clock: ClassicalClock) -> ValidationReport:
    """Check generator-pair structure; leaky (strictly dissipative) clocks pass.

    Returns a report rather than raising, so callers can surface all
    violations at once.
    """
    n_gen, t_gen, v0 = clock.no_tick, clock.tick, clock.initial
    bad: list[str] = []
    d = n_gen.shape[0]
    if n_gen.shape != (d, d) or t_gen.shape != (d, d):
        bad.append(f"generator shapes differ: {n_gen.shape} vs {t_gen.shape}")
        return ValidationReport(False, bad)
    if v0.shape != (d,):
        bad.append(f"initial state has shape {v0.shape}, expected ({d},)")
    off = n_gen - np.diag(np.diag(n_gen))
    if off.min(initial=0.0) < -_COLSUM_SLACK:
        i, j = np.unravel_index(np.argmin(off), off.shape)
        bad.append(f"no_tick off-diagonal negative at ({i},{j}): {off[i, j]}")
    if np.diag(n_gen).max(initial=0.0) > _COLSUM_SLACK:
        j = int(np.argmax(np.diag(n_gen)))
        bad.append(f"no_tick diagonal positive at ({j},{j}): {n_gen[j, j]}")
    if t_gen.min(initial=0.0) < -_COLSUM_SLACK:
        i, j = np.unravel_index(np.argmin(t_gen), t_gen.shape)
        bad.append(f"tick generator negative at ({i},{j}): {t_gen[i, j]}")
    col = (n_gen + t_gen).sum(axis=0)
    if col.max(initial=0.0) > _COLSUM_SLACK:
        j = int(np.argmax(col))
        bad.append(f"column {j} of no_tick + tick sums to {col[j]} > 0 (gains population)")
    if v0.shape == (d,):
        if v0.min(initial=0.0) < -_COLSUM_SLACK:
            bad.append("initial state has negative entries")
        if abs(v0.sum() - 1.0) > 1e-9:
            bad.append(f"initial state sums to {v0.sum()}, expected 1")
    return ValidationReport(not bad, bad)


def ladder_clock(d: int) -> ClassicalClock:
    """Unit-rate chain of d states; the last state ticks back to the first.

    The first-tick density is the d-stage Erlang, so the accuracy equals d
    exactly, and the clock is already in reset form.
    """
    if d < 1:
        raise ValueError("need at least one state")
    n_gen = -np.eye(d)
    n_gen[np.arange(1, d), np.arange(d - 1)] = 1.0
    t_gen = np.zeros((d, d))
    t_gen[0, d - 1] = 1.0
    v0 = np.zeros(d)
    v0[0] = 1.0
    return ClassicalClock(n_gen, t_gen, v0)


def evolve_no_tick(clock: ClassicalClock, t: float) -> NDArray[np.float64]:
    """Population at time t conditioned on silence, expm(N t) @ initial."""
    return expm(clock.no_tick * t) @ clock.initial


def _uniform_step(grid: NDArray[np.float64]) -> float:
    t = np.asarray(grid, dtype=np.float64)
    if t.ndim != 1 or t.size < 3 or t[0] != 0.0:
        raise ValueError("grid must be 1-d, start at 0, and have at least 3 points")
    steps = np.diff(t)
    dt = steps[0]
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniformly spaced")
    return float(dt)


def first_tick_delay(clock: ClassicalClock, grid: NDArray[np.float64]) -> Sampled:
    """First-tick density || T expm(N t) v0 ||_1 sampled on a uniform grid.

    Propagation uses one matrix exponential of N*dt applied repeatedly, so
    the values are exact up to expm round-off, not a time-stepping scheme.
    """
    dt = _uniform_step(grid)
    n = np.asarray(grid).size
    step = expm(clock.no_tick * dt)
    rates = clock.tick.sum(axis=0)
    v = clock.initial.astype(np.float64).copy()
    vals = np.empty(n)
    vals[0] = rates @ v
    for k in range(1, n):
        v = step @ v
        vals[k] = rates @ v
    np.clip(vals, 0.0, None, out=vals)
    return Sampled(dt, vals)


def _resolvent_powers(clock: ClassicalClock) -> tuple[NDArray, NDArray, NDArray]:
    n_gen = clock.no_tick
    eigs = np.linalg.eigvals(n_gen)
    if eigs.real.max() > -1e-12:
        raise DegenerateClock(
            "no-tick generator is not strictly decaying; first-tick moments diverge"
        )
    eye = np.eye(clock.dim)
    x1 = np.linalg.solve(-n_gen, eye)
    x2 = x1 @ x1
    x3 = x2 @ x1
    return x1, x2, x3


def first_tick_moments(clock: ClassicalClock) -> Moments:
    """Exact first-tick moments by resolvent solves (no grid, no quadrature).

    Uses int_0^inf t^k expm(N t) dt = k! (-N)^(-k-1), valid whenever N is
    strictly decaying; raises DegenerateClock otherwise.
    """
    x1, x2, x3 = _resolvent_powers(clock)
    rates = clock.tick.sum(axis=0)
    v0 = clock.initial
    q = float(rates @ (x1 @ v0))
    if q < TOL_ZERO:
        raise ZeroMass("clock never ticks from its initial state")
    first = float(rates @ (x2 @ v0))
    second = 2.0 * float(rates @ (x3 @ v0))
    return Moments(q, first / q, second / q)


def suggested_grid(
    clock: ClassicalClock,
    ticks: int = 1,
    *,
    sigmas: float = 12.0,
    points_per_std: int = 200,
) -> NDArray[np.float64]:
    """Uniform grid sized from the exact first-tick moments.

    Horizon is ticks * mean + sigmas * sqrt(ticks) * std; the default
    12-sigma horizon is fine for plotting but leaves a small truncation
    bias, so high-precision callers should request a larger ``sigmas``.
    """
    m = first_tick_moments(clock)
    spread = max(m.std, 0.05 * m.mean)
    t_max = ticks * m.mean + sigmas * np.sqrt(ticks) * spread
    dt = spread / points_per_std
    return sample_grid(dt, t_max)


def tick_sequence_delays(
    clock: ClassicalClock, count: int, grid: NDArray[np.float64] | None = None
) -> list[Sampled]:
    """Densities of ticks 1..count on a shared grid.

    Solves the silent-evolution cascade dV_j/dt = N V_j + T V_{j-1} as one
    block-bidiagonal linear system, which is the recursive convolution
    integral in closed form.  For a reset clock the j-th density equals the
    j-fold self-convolution of the first.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if grid is None:
        grid = suggested_grid(clock, ticks=count)
    dt = _uniform_step(grid)
    n = np.asarray(grid).size
    d = clock.dim
    big = np.zeros((count * d, count * d))
    for j in range(count):
        big[j * d : (j + 1) * d, j * d : (j + 1) * d] = clock.no_tick
        if j:
            big[j * d : (j + 1) * d, (j - 1) * d : j * d] = clock.tick
    step = expm(big * dt)
    rates = clock.tick.sum(axis=0)
    w = np.zeros(count * d)
    w[:d] = clock.initial
    vals = np.empty((count, n))
    vals[:, 0] = w.reshape(count, d) @ rates
    for k in range(1, n):
        w = step @ w
        vals[:, k] = w.reshape(count, d) @ rates
    np.clip(vals, 0.0, None, out=vals)
    return [Sampled(dt, vals[j]) for j in range(count)]


@dataclass(frozen=True)
class CanonicalForm:
    """Reset-form clock selected from the best single tick sub-event.

    ``accuracy_table[j, i]`` is the accuracy of the delay for "tick lands in
    row j, starting from basis state i"; the selected pair maximizes it.
    """

    clock: ClassicalClock
    source_state: int
    tick_row: int
    accuracy: float
    accuracy_table: NDArray[np.float64]


def canonicalize_to_reset(clock: ClassicalClock) -> CanonicalForm:
    """Reduce a clock to reset form without losing per-tick accuracy.

    Every (initial basis state i, tick row j) pair defines a sub-event delay
    nu_ij(t) = [T expm(N t)]_{j,i}.  The original first-tick delay is a
    mixture of these, so the best pair's accuracy is at least the original
    accuracy.  The returned clock keeps only row j* of T, shifted to row i*
    (a row shift leaves column sums, hence delays, unchanged) so that every
    tick repopulates the initial state.
    """
    x1, x2, x3 = _resolvent_powers(clock)
    t_gen = clock.tick
    mass = t_gen @ x1
    first = t_gen @ x2
    second = 2.0 * (t_gen @ x3)
    usable = mass > TOL_ZERO
    if not usable.any():
        raise DegenerateClock("all tick sub-events carry zero mass")
    acc = np.full_like(mass, -np.inf)
    mean = first[usable] / mass[usable]
    var = second[usable] / mass[usable] - mean**2
    with np.errstate(divide="ignore"):
        acc[usable] = np.where(var > 0, mean**2 / np.maximum(var, 1e-300), np.inf)
    j_star, i_star = np.unravel_index(int(np.argmax(acc)), acc.shape)
    t_new = np.zeros_like(t_gen)
    t_new[i_star, :] = t_gen[j_star, :]
    v0 = np.zeros(clock.dim)
    v0[i_star] = 1.0
    canon = ClassicalClock(clock.no_tick.copy(), t_new, v0)
    table = np.where(np.isfinite(acc), acc, 0.0)
    return CanonicalForm(canon, int(i_star), int(j_star), float(acc[j_star, i_star]), table)


def random_clock(d: int, seed: int, density: float = 1.0) -> ClassicalClock:
    """Deterministic random norm-preserving clock.

    Off-diagonal silent rates are U(0,1), tick rates U(0,1) scaled by 0.3,
    each kept with probability ``density``; diagonals are set so the column
    sums of N + T vanish.  Columns that end up with no rate at all get a
    small tick entry so every state eventually ticks.
    """
    if d < 1:
        raise ValueError("need at least one state")
    key = np.array([seed, 0xC10C4A11], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    n_gen = rng.random((d, d)) * (rng.random((d, d)) < density)
    np.fill_diagonal(n_gen, 0.0)
    t_gen = 0.3 * rng.random((d, d)) * (rng.random((d, d)) < density)
    stuck = (n_gen.sum(axis=0) + t_gen.sum(axis=0)) <= 0.0
    t_gen[0, stuck] = 0.15
    if t_gen.sum() <= 0.0:
        t_gen[0, d - 1] = 0.15
    np.fill_diagonal(n_gen, -(n_gen.sum(axis=0) + t_gen.sum(axis=0)))
    v0 = np.zeros(d)
    v0[0] = 1.0
    return ClassicalClock(n_gen, t_gen, v0)


def to_json(clock: ClassicalClock) -> str:
    import json

    return json.dumps(
        {
            "d": clock.dim,
            "N": clock.no_tick.flatten().tolist(),
            "T": clock.tick.flatten().tolist(),
            "initial": clock.initial.tolist(),
        }
    )


def from_json(text: str) -> ClassicalClock:
    import json

    obj = json.loads(text)
    d = int(obj["d"])
    return ClassicalClock(
        np.asarray(obj["N"], dtype=np.float64).reshape(d, d),
        np.asarray(obj["T"], dtype=np.float64).reshape(d, d),
        np.asarray(obj["initial"], dtype=np.float64),
    )
