"""Monte-Carlo tick sampling, independent of the analytic machinery.

Trials are simulated as explicit jump processes on a fixed time lattice:
per step, a classical trial in state j ticks with probability
``dt * ||T e_j||_1`` (the column sum), hops silently with ``dt * N[i, j]``,
leaks with the column deficit, and otherwise stays.  A quantum trial ticks
with ``2 dt <psi|V|psi>`` and otherwise evolves by the no-tick map
``exp(-i dt H_C) sqrt(1 - 2 dt V)`` followed by renormalization.  Tick
times are recorded at step midpoints.

Trials are split into fixed blocks of 1024; each block draws from its own
counter-based stream keyed by (seed, block index) and blocks are merged in
index order, so results are byte-identical for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .classical import ClassicalClock, first_tick_moments
from .quantum import ClockSpec, effective_hamiltonian, initial_state, potential_diag, quantum_accuracy, time_basis

__all__ = ["SimResult", "sample_classical", "sample_quantum", "summarize"]

BLOCK = 1024
_CLASSICAL_TAG = 0x5C * 2**32
_QUANTUM_TAG = 0x51 * 2**32


def _stream(seed: int, block_index: int, tag: int) -> np.random.Generator:
    key = np.array([seed, tag + block_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SimResult:
    """Tick times per trial; NaN marks a tick that never happened.

    ``dead`` counts trials absorbed by a leak, ``truncated`` those still
    pending at the horizon.
    """

    times: NDArray[np.float64]  # (trials, ticks)
    dt: float
    seed: int
    dead: int
    truncated: int

    @property
    def trials(self) -> int:
        return self.times.shape[0]

    @property
    def ticks(self) -> int:
        return self.times.shape[1]


class _CentralMoments:
    """Mergeable running central moments up to order four.

    Merging is exact regardless of grouping, so block-wise accumulation in
    index order gives the same bytes no matter how many workers ran.
    """

    def __init__(self) -> None:
        self.n = 0.0
        self.mean = 0.0
        self.m2 = 0.0
        self.m3 = 0.0
        self.m4 = 0.0

    def add(self, xs: NDArray[np.float64]) -> None:
        xs = xs[np.isfinite(xs)]
        if xs.size == 0:
            return
        other = _CentralMoments()
        other.n = float(xs.size)
        other.mean = float(xs.mean())
        dx = xs - other.mean
        other.m2 = float(np.sum(dx**2))
        other.m3 = float(np.sum(dx**3))
        other.m4 = float(np.sum(dx**4))
        self.merge(other)

    def merge(self, o: "_CentralMoments") -> None:
        if o.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2, self.m3, self.m4 = o.n, o.mean, o.m2, o.m3, o.m4
            return
        n1, n2 = self.n, o.n
        n = n1 + n2
        d = o.mean - self.mean
        m2 = self.m2 + o.m2 + d**2 * n1 * n2 / n
        m3 = (
            self.m3 + o.m3
            + d**3 * n1 * n2 * (n1 - n2) / n**2
            + 3.0 * d * (n1 * o.m2 - n2 * self.m2) / n
        )
        m4 = (
            self.m4 + o.m4
            + d**4 * n1 * n2 * (n1**2 - n1 * n2 + n2**2) / n**3
            + 6.0 * d**2 * (n1**2 * o.m2 + n2**2 * self.m2) / n**2
            + 4.0 * d * (n1 * o.m3 - n2 * self.m3) / n
        )
        self.mean += d * n2 / n
        self.n, self.m2, self.m3, self.m4 = n, m2, m3, m4


def summarize(result: SimResult) -> dict:
    """Per-tick-index sample statistics with delta-method accuracy errors."""
    out: dict = {
        "trials": result.trials,
        "dt": result.dt,
        "seed": result.seed,
        "dead": result.dead,
        "truncated": result.truncated,
        "per_tick": [],
    }
    for j in range(result.ticks):
        acc = _CentralMoments()
        for s in range(0, result.trials, BLOCK):
            acc.add(result.times[s : s + BLOCK, j])
        n = acc.n
        if n < 2:
            out["per_tick"].append({"tick_index": j + 1, "count": int(n)})
            continue
        var = acc.m2 / n
        mean = acc.mean
        m3 = acc.m3 / n
        m4 = acc.m4 / n
        se_mean = math.sqrt(var / n)
        se_std = math.sqrt(max(m4 - var**2, 0.0) / (4.0 * var * n)) if var > 0 else math.inf
        accuracy = mean**2 / var if var > 0 else math.inf
        # delta method on (mean, variance) including their covariance
        g_mu = 2.0 * mean / var
        g_var = -(mean**2) / var**2
        var_acc = (
            g_mu**2 * var / n
            + g_var**2 * max(m4 - var**2, 0.0) / n
            + 2.0 * g_mu * g_var * m3 / n
        )
        out["per_tick"].append(
            {
                "tick_index": j + 1,
                "count": int(n),
                "mean": mean,
                "std": math.sqrt(var),
                "se_mean": se_mean,
                "se_std": se_std,
                "accuracy": accuracy,
                "se_accuracy": math.sqrt(max(var_acc, 0.0)),
            }
        )
    return out


def _classical_tables(clock: ClassicalClock, dt: float):
    d = clock.dim
    n_gen, t_gen = clock.no_tick, clock.tick
    leak = np.maximum(-(n_gen + t_gen).sum(axis=0), 0.0)
    # per-state event probabilities in one step: d tick landings, d silent moves, leak
    probs = np.zeros((d, 2 * d + 1))
    probs[:, :d] = dt * t_gen.T
    moves = n_gen.T.copy()
    np.fill_diagonal(moves, 0.0)
    probs[:, d : 2 * d] = dt * moves
    probs[:, 2 * d] = dt * leak
    p_event = probs.sum(axis=1)
    if p_event.max() >= 1.0:
        raise ValueError(f"dt too coarse: per-step event probability reaches {p_event.max():.3g}")
    cond = np.zeros_like(probs)
    busy = p_event > 0
    cond[busy] = probs[busy] / p_event[busy, None]
    cum = np.cumsum(cond, axis=1)
    cum[:, -1] = 1.0
    return p_event, cum


def _classical_block(clock, dt, ticks, n_steps, size, rng) -> tuple[NDArray, int, int]:
    # The lattice walk decomposes exactly into a geometric number of silent
    # steps followed by one categorical event, so we jump hop to hop instead
    # of iterating every step.
    d = clock.dim
    p_event, cum = _classical_tables(clock, dt)
    init_cum = np.cumsum(clock.initial)
    state = np.searchsorted(init_cum, rng.random(size), side="right").astype(np.int64)
    state = np.minimum(state, d - 1)
    times = np.full((size, ticks), np.nan)
    done_ticks = np.zeros(size, dtype=np.int64)
    steps_used = np.zeros(size, dtype=np.int64)
    active = np.ones(size, dtype=bool)
    dead = 0
    truncated = 0
    while active.any():
        a = np.flatnonzero(active)
        pe = p_event[state[a]]
        stuck = pe <= 0
        if stuck.any():
            truncated += int(stuck.sum())
            active[a[stuck]] = False
            a = a[~stuck]
            pe = pe[~stuck]
            if a.size == 0:
                continue
        wait = rng.geometric(pe)
        steps_used[a] += wait
        r = rng.random(a.size)
        ev = (r[:, None] > cum[state[a]]).sum(axis=1)
        beyond = steps_used[a] > n_steps
        if beyond.any():
            truncated += int(beyond.sum())
            active[a[beyond]] = False
            a, ev = a[~beyond], ev[~beyond]
        ticked = ev < d
        if ticked.any():
            rows = a[ticked]
            times[rows, done_ticks[rows]] = (steps_used[rows] - 0.5) * dt
            done_ticks[rows] += 1
            state[rows] = ev[ticked]
            finished = done_ticks[rows] >= ticks
            active[rows[finished]] = False
        leaked = ev == 2 * d
        if leaked.any():
            dead += int(leaked.sum())
            active[a[leaked]] = False
        moved = (ev >= d) & (ev < 2 * d)
        state[a[moved]] = ev[moved] - d
    return times, dead, truncated


def sample_classical(
    clock: ClassicalClock,
    *,
    trials: int,
    dt: float,
    seed: int,
    ticks: int = 1,
    t_max: float | None = None,
    threads: int | None = None,
) -> SimResult:
    """Jump-process sampler for tick times of a classical clock."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if t_max is None:
        m = first_tick_moments(clock)
        t_max = ticks * m.mean + 50.0 * math.sqrt(ticks) * max(m.std, 0.1 * m.mean)
    n_steps = int(math.ceil(t_max / dt))
    blocks = range(0, trials, BLOCK)

    def work(start: int):
        size = min(BLOCK, trials - start)
        rng = _stream(seed, start // BLOCK, _CLASSICAL_TAG)
        return _classical_block(clock, dt, ticks, n_steps, size, rng)

    parts = _run_blocks(work, blocks, threads)
    times = np.concatenate([p[0] for p in parts], axis=0)
    dead = sum(p[1] for p in parts)
    truncated = sum(p[2] for p in parts)
    return SimResult(times, dt, seed, dead, truncated)


def _quantum_block(step_mat, u_conj, v_diag, psi0, dt, ticks, n_steps, size, rng):
    times = np.full((size, ticks), np.nan)
    psi = np.tile(psi0, (size, 1))
    done_ticks = np.zeros(size, dtype=np.int64)
    idx = np.arange(size)
    for k in range(n_steps):
        if idx.size == 0:
            break
        w2 = np.abs(psi @ u_conj) ** 2
        p_tick = 2.0 * dt * (w2 @ v_diag)
        r = rng.random(idx.size)
        ticked = r < p_tick
        if ticked.any():
            rows = idx[ticked]
            times[rows, done_ticks[rows]] = (k + 0.5) * dt
            done_ticks[rows] += 1
            psi[ticked] = psi0  # reset after the tick fires
        silent = ~ticked
        if silent.any():
            upd = psi[silent] @ step_mat.T
            norm = np.sqrt(np.einsum("ij,ij->i", upd, upd.conj()).real)
            psi[silent] = upd / norm[:, None]
        keep = done_ticks[idx] < ticks
        if not keep.all():
            idx = idx[keep]
            psi = psi[keep]
    return times, 0, int(idx.size)


def sample_quantum(
    spec: ClockSpec,
    *,
    trials: int,
    dt: float,
    seed: int,
    ticks: int = 1,
    t_max: float | None = None,
    threads: int | None = None,
) -> SimResult:
    """Jump/no-jump sampler for a quantum reset clock.

    The no-tick map uses the exact square-root damping, so the per-step
    tick probability equals the lost norm and the scheme conserves
    probability by construction.
    """
    d = spec.dim
    v_diag = potential_diag(spec)
    if 2.0 * dt * v_diag.max() >= 1.0:
        raise ValueError("dt too coarse: no-tick damping would go negative")
    u = time_basis(d)
    h_c = np.diag(np.exp(-1j * spec.omega * np.arange(d) * dt))
    m0 = (u * np.sqrt(1.0 - 2.0 * dt * v_diag)) @ u.conj().T
    step_mat = h_c @ m0
    psi0 = initial_state(spec)
    if t_max is None:
        m = quantum_accuracy(spec).moments
        t_max = ticks * m.mean + 50.0 * math.sqrt(ticks) * max(m.std, 0.05 * m.mean)
    n_steps = int(math.ceil(t_max / dt))
    blocks = range(0, trials, BLOCK)

    def work(start: int):
        size = min(BLOCK, trials - start)
        rng = _stream(seed, start // BLOCK, _QUANTUM_TAG)
        return _quantum_block(step_mat, u.conj(), v_diag, psi0, dt, ticks, n_steps, size, rng)

    parts = _run_blocks(work, blocks, threads)
    times = np.concatenate([p[0] for p in parts], axis=0)
    truncated = sum(p[2] for p in parts)
    return SimResult(times, dt, seed, 0, truncated)


def _run_blocks(work, starts, threads: int | None):
    starts = list(starts)
    if threads is None or threads <= 1 or len(starts) == 1:
        return [work(s) for s in starts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, starts))
