"""Quantum model of a double-gap reflex klystron amplifying entangled photon pairs."""

from qklyst.quantum_state import (
    Bell,
    DensityMatrix4,
    TwoPhotonState,
    WernerConvention,
    WernerSpec,
    amplify_channel,
    bell_state,
    concurrence,
    density_matrix,
    partial_trace_environment,
    werner_p,
    werner_state,
)
from qklyst.klystron_model import KlystronParams, RateBreakdown, gain_factor, rate_total
from qklyst.design_solver import DesignReport, design_for, peak_gain, sweep_gain, sweep_rates
from qklyst.errors import ModelRangeError, PhysicalValidityError

__version__ = "0.1.0"

__all__ = [
    "Bell",
    "DensityMatrix4",
    "DesignReport",
    "KlystronParams",
    "ModelRangeError",
    "PhysicalValidityError",
    "RateBreakdown",
    "TwoPhotonState",
    "WernerConvention",
    "WernerSpec",
    "amplify_channel",
    "bell_state",
    "concurrence",
    "density_matrix",
    "design_for",
    "gain_factor",
    "partial_trace_environment",
    "peak_gain",
    "rate_total",
    "sweep_gain",
    "sweep_rates",
    "werner_p",
    "werner_state",
]
