"""Five-step controlled-phase schedule on two four-level SQUIDs and a resonator.

SQUID a is resonant with the resonator on its 2<->3 transition; SQUID b is
detuned by ``delta_c``. The schedule is seven sequential segments:

====== ================================================ ===============
label  action                                           duration
====== ================================================ ===============
i      drive a (1,3), phase pi                          pi / (2 omega_13)
i      wait (a exchanges with resonator)                pi / (2 g_a)
ii     drive a (0,2) phase pi/2 + b (1,2) phase -pi/2   pi / (2 omega_02)
iii    wait (dispersive phase on b)                     pi delta_c / g_b^2
iv     drive a (0,2) phase -pi/2 + b (1,2) phase pi/2   pi / (2 omega_02)
v      wait                                             pi / (2 g_a)
v      drive a (1,3), phase pi                          pi / (2 omega_13)
====== ================================================ ===============
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cpgate.dynamics import (
    Dispersive,
    Drive,
    GateParams,
    HamiltonianSum,
    JCDetuned,
    JCResonant,
    ModelKind,
    Term,
    propagator,
    realize,
)
from cpgate.hilbert import (
    OperatorMatrix,
    StateVector,
    basis_index,
    matexp_hermitian,
    system_dims,
)

COMPUTATIONAL = ("00", "01", "10", "11")
STEP_LABELS = ("i", "ii", "iii", "iv", "v")


@dataclass(frozen=True)
class Segment:
    """A constant-Hamiltonian interval; no drives means free evolution."""

    duration: float
    drives: tuple[Drive, ...] = ()
    label: str | None = None

    def __post_init__(self):
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"segment duration must be finite and >= 0, got {self.duration}")
        object.__setattr__(self, "drives", tuple(self.drives))

    @property
    def is_wait(self) -> bool:
        return not self.drives


@dataclass(frozen=True)
class Schedule:
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def duration(self) -> float:
        return math.fsum(seg.duration for seg in self.segments)


def step_durations(p: GateParams) -> dict[str, float]:
    return {
        "t1": math.pi / (2 * p.omega_13),
        "t1_prime": math.pi / (2 * p.g_a),
        "t2": math.pi / (2 * p.omega_02),
        "t3": math.pi * p.delta_c / p.g_b**2,
    }


def gate_time(p: GateParams) -> float:
    """Total gate duration ``pi/g_a + pi delta_c/g_b^2 + pi/omega_13 + pi/omega_02``."""
    return math.fsum(
        (
            math.pi / p.g_a,
            math.pi * p.delta_c / p.g_b**2,
            math.pi / p.omega_13,
            math.pi / p.omega_02,
        )
    )


def build_schedule(p: GateParams) -> Schedule:
    if not math.isclose(p.omega_02, p.omega_12, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(
            f"omega_02 ({p.omega_02}) must equal omega_12 ({p.omega_12}): "
            "the simultaneous pulses share one duration"
        )
    t = step_durations(p)
    half_pi = math.pi / 2
    pulse_13 = Drive("a", 1, 3, p.omega_13, math.pi)
    return Schedule(
        (
            Segment(t["t1"], (pulse_13,), "i"),
            Segment(t["t1_prime"], (), "i"),
            Segment(
                t["t2"],
                (Drive("a", 0, 2, p.omega_02, half_pi), Drive("b", 1, 2, p.omega_12, -half_pi)),
                "ii",
            ),
            Segment(t["t3"], (), "iii"),
            Segment(
                t["t2"],
                (Drive("a", 0, 2, p.omega_02, -half_pi), Drive("b", 1, 2, p.omega_12, half_pi)),
                "iv",
            ),
            Segment(t["t1_prime"], (), "v"),
            Segment(t["t1"], (pulse_13,), "v"),
        )
    )


def segment_hamiltonian(
    seg: Segment, p: GateParams, model: ModelKind = ModelKind.IDEAL
) -> HamiltonianSum:
    """Hamiltonian acting during ``seg`` under the chosen error model.

    Ideal: pulses act alone; waits carry SQUID a's resonant exchange and
    SQUID b's effective dispersive shift (each is dark on the other's
    populated states). Full: both SQUID-resonator couplings, with b's in
    its un-expanded detuned form, stay on in every segment.
    """
    model = ModelKind(model)
    terms: list[Term] = list(seg.drives)
    if model is ModelKind.FULL:
        terms += [JCResonant("a", p.g_a), JCDetuned("b", p.g_b, p.delta_c)]
    elif seg.is_wait:
        terms += [JCResonant("a", p.g_a), Dispersive("b", p.g_b, p.delta_c)]
    return HamiltonianSum(tuple(terms))


def schedule_segments(
    schedule: Schedule, p: GateParams, model: ModelKind = ModelKind.IDEAL
) -> list[tuple[HamiltonianSum, float]]:
    return [(segment_hamiltonian(seg, p, model), seg.duration) for seg in schedule]


def schedule_propagator(
    schedule: Schedule, p: GateParams, model: ModelKind = ModelKind.IDEAL
) -> OperatorMatrix:
    return propagator(schedule_segments(schedule, p, model), p.n_max)


def trajectory(
    state: StateVector,
    schedule: Schedule,
    p: GateParams,
    model: ModelKind = ModelKind.IDEAL,
) -> list[StateVector]:
    """States after each segment (the input state is not included)."""
    out = []
    for spec, duration in schedule_segments(schedule, p, model):
        state = matexp_hermitian(realize(spec, p.n_max), duration) @ state
        out.append(state)
    return out


def state_after_step(
    state: StateVector,
    schedule: Schedule,
    p: GateParams,
    step: str,
    model: ModelKind = ModelKind.IDEAL,
) -> StateVector:
    """State at the end of the last segment labelled ``step``."""
    states = trajectory(state, schedule, p, model)
    hits = [i for i, seg in enumerate(schedule) if seg.label == step]
    if not hits:
        raise KeyError(f"schedule has no step {step!r}")
    return states[hits[-1]]


def computational_indices(n_max: int) -> np.ndarray:
    """Flat indices of ``|kl>|0>_c`` for ``kl`` in 00, 01, 10, 11."""
    return np.array([basis_index(int(s[0]), int(s[1]), 0, n_max) for s in COMPUTATIONAL])


def embed_qubits(amplitudes: Sequence[complex], n_max: int = 2) -> StateVector:
    """Place a two-qubit amplitude 4-vector on ``computational (x) |0>_c``."""
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.shape != (4,):
        raise ValueError("two-qubit input needs exactly four amplitudes")
    dims = system_dims(n_max)
    full = np.zeros(int(np.prod(dims)), dtype=complex)
    full[computational_indices(n_max)] = amps
    return StateVector(dims, full)


def project_qubits(state: StateVector) -> np.ndarray:
    return np.array(state.amplitudes[computational_indices(state.dims[2] - 1)])


def ideal_gate_unitary() -> np.ndarray:
    """The controlled-phase target ``diag(1, 1, 1, -1)`` on 00, 01, 10, 11."""
    return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class TruthTableRow:
    label: str
    output: StateVector
    qubit_amplitudes: np.ndarray
    phase: float
    leakage: float


@dataclass(frozen=True)
class TruthTable:
    rows: tuple[TruthTableRow, ...]
    model: ModelKind

    def matrix(self) -> np.ndarray:
        """4x4 map restricted to ``computational (x) |0>_c``; column = input."""
        return np.column_stack([r.qubit_amplitudes for r in self.rows])

    def __getitem__(self, label: str) -> TruthTableRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


def run_truth_table(
    p: GateParams,
    model: ModelKind = ModelKind.IDEAL,
    schedule: Schedule | None = None,
) -> TruthTable:
    """Propagate each computational input with the resonator in vacuum.

    Phases are those of the diagonal element of each row, measured relative
    to the ``00`` row.
    """
    model = ModelKind(model)
    schedule = build_schedule(p) if schedule is None else schedule
    u = schedule_propagator(schedule, p, model).entries
    idx = computational_indices(p.n_max)
    dims = system_dims(p.n_max)
    ref_phase = np.angle(u[idx[0], idx[0]])
    rows = []
    for k, (label, col) in enumerate(zip(COMPUTATIONAL, idx)):
        out = u[:, col]
        qubit = out[idx]
        phase = float(np.angle(np.exp(1j * (np.angle(qubit[k]) - ref_phase))))
        leakage = max(0.0, 1.0 - float(np.sum(np.abs(qubit) ** 2)))
        rows.append(TruthTableRow(label, StateVector(dims, out), qubit, phase, leakage))
    return TruthTable(tuple(rows), model)


@dataclass(frozen=True)
class GateResult:
    state: StateVector
    qubit_amplitudes: np.ndarray
    ideal: np.ndarray

    @property
    def overlap(self) -> complex:
        """``<psi_ideal|psi>`` with the ideal output placed on the vacuum."""
        return complex(np.vdot(self.ideal, self.qubit_amplitudes))

    @property
    def fidelity(self) -> float:
        return abs(self.overlap) ** 2


def apply_gate(
    amplitudes: Sequence[complex],
    p: GateParams,
    model: ModelKind = ModelKind.IDEAL,
    schedule: Schedule | None = None,
    norm_tol: float = 1e-10,
) -> GateResult:
    amps = np.asarray(amplitudes, dtype=complex)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(f"input amplitudes are not normalized (norm = {norm:.12g})")
    schedule = build_schedule(p) if schedule is None else schedule
    u = schedule_propagator(schedule, p, model)
    out = u @ embed_qubits(amps, p.n_max)
    return GateResult(out, project_qubits(out), ideal_gate_unitary() @ amps)
