"""Controlled-phase gate on two four-level rf SQUIDs coupled through a resonator."""

from cpgate.dynamics import GateParams, ModelKind
from cpgate.protocol import (
    apply_gate,
    build_schedule,
    gate_time,
    ideal_gate_unitary,
    run_truth_table,
)

__all__ = [
    "GateParams",
    "ModelKind",
    "apply_gate",
    "build_schedule",
    "gate_time",
    "ideal_gate_unitary",
    "run_truth_table",
]
__version__ = "0.1.0"
