"""Proper-time effects on harmonically trapped two-level clocks.

Simulates clock x motion dynamics in a truncated Fock space and collects the
closed-form shift and visibility predictions they are checked against.
"""

from .closed_forms import ShiftResult
from .dynamics import (
    BlockHamiltonian,
    ClockParams,
    ClockReducedState,
    CompositeState,
    Propagator,
    PropagatorSet,
    build_hamiltonian,
    diagonal_sods_propagator,
    evolve,
    exact_propagator,
    mixed_state_evolution,
    oracle_propagator,
    perturbative_propagator,
    reduce_to_clock,
)
from .errors import ProperTimeError, TruncationOverflow, UnwrapFailure
from .fock import MotionalDensity, MotionalState, Operator
from .protocols import Prep, ProtocolResult, QsodsConfig, RamseyConfig, run_qsods_protocol, run_ramsey

__version__ = "0.1.0"

__all__ = [
    "BlockHamiltonian", "ClockParams", "ClockReducedState", "CompositeState", "MotionalDensity",
    "MotionalState", "Operator", "Prep", "Propagator", "PropagatorSet", "ProperTimeError",
    "ProtocolResult", "QsodsConfig", "RamseyConfig", "ShiftResult", "TruncationOverflow",
    "UnwrapFailure", "build_hamiltonian", "diagonal_sods_propagator", "evolve", "exact_propagator",
    "mixed_state_evolution", "oracle_propagator", "perturbative_propagator", "reduce_to_clock",
    "run_qsods_protocol", "run_ramsey",
]
