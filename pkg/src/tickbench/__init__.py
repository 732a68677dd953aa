"""Tick statistics of stochastic and open-quantum clocks.

The package answers one question in several guises: given a clock that
emits ticks at random times, how regular are those ticks?  Regularity is
measured by the per-tick accuracy mean^2 / variance of the tick-delay
density.
"""
from .delay import (
    Delay,
    Erlang,
    Exponential,
    GridOverflow,
    Moments,
    NormExceeded,
    Sampled,
    ZeroMass,
    convolve,
    mix,
    moments,
    partial_norm,
    rescale,
)
from .classical import (
    CanonicalForm,
    ClassicalClock,
    DegenerateClock,
    canonicalize_to_reset,
    first_tick_delay,
    first_tick_moments,
    ladder_clock,
    random_clock,
    tick_sequence_delays,
    validate,
)
from .quantum import (
    ClockSpec,
    OptResult,
    StepSizeUnderflow,
    TailNotConverged,
    lindblad_first_tick,
    optimize_potential,
    quantum_accuracy,
    quasi_ideal_state,
    time_basis,
    time_basis_spread,
)
from .sim import SimResult, sample_classical, sample_quantum, summarize

__version__ = "0.1.0"
