"""Hamiltonians for the SQUID-resonator system and piecewise-constant propagation.

All generators live in the rotating/interaction frame, so every segment
Hamiltonian is time independent. Frequencies are angular, hbar = 1, and the
natural unit is the SQUID-b coupling ``g_b``.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence, Union

import numpy as np

from cpgate.hilbert import (
    SQUID_LEVELS,
    OperatorMatrix,
    StateVector,
    basis_index,
    embed,
    fock_ops,
    matexp_hermitian,
    projector,
    system_dims,
)

Squid = Literal["a", "b"]
_SLOT = {"a": 0, "b": 1}


class ModelKind(str, enum.Enum):
    """Which couplings act in each protocol segment.

    ``IDEAL`` keeps only the wanted interaction per segment (closed-form
    maps); ``FULL`` keeps SQUID a's resonant coupling and SQUID b's detuned
    coupling switched on throughout, including under the pulses.
    """

    IDEAL = "ideal"
    FULL = "full"


class DispersiveRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GateParams:
    g_a: float = 1.0
    g_b: float = 1.0
    delta_c: float = 10.0
    omega_13: float = 10.0
    omega_02: float = 10.0
    omega_12: float = 10.0
    n_max: int = 2

    def __post_init__(self):
        for name in ("g_a", "g_b", "delta_c", "omega_13", "omega_02", "omega_12"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if self.delta_c < 5 * self.g_b:
            warnings.warn(
                f"delta_c = {self.delta_c} < 5 g_b: dispersive approximation is poor",
                DispersiveRegimeWarning,
                stacklevel=3,
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return system_dims(self.n_max)

    @property
    def dispersive_shift(self) -> float:
        """``s = g_b**2 / delta_c``."""
        return self.g_b**2 / self.delta_c


# --- Hamiltonian specifications -------------------------------------------


@dataclass(frozen=True)
class JCResonant:
    squid: Squid
    g: float


@dataclass(frozen=True)
class Dispersive:
    squid: Squid
    g: float
    delta: float


@dataclass(frozen=True)
class JCDetuned:
    squid: Squid
    g: float
    delta: float


@dataclass(frozen=True)
class Drive:
    squid: Squid
    low: int
    high: int
    rabi: float
    phase: float

    def __post_init__(self):
        if self.squid not in _SLOT:
            raise ValueError(f"unknown squid {self.squid!r}")
        if self.low == self.high:
            raise ValueError("drive level pair must be distinct")
        for lvl in (self.low, self.high):
            if not 0 <= lvl < SQUID_LEVELS:
                raise ValueError(f"level {lvl} outside 0..{SQUID_LEVELS - 1}")


@dataclass(frozen=True)
class DetunedDrive:
    """Photon-conditioned Rabi detuning ``(s/2)(|l><l| - |h><h|) (x) c+c``."""

    squid: Squid
    low: int
    high: int
    detuning: float


@dataclass(frozen=True)
class HamiltonianSum:
    terms: tuple["Term", ...]


Term = Union[JCResonant, Dispersive, JCDetuned, Drive, DetunedDrive]
HamiltonianSpec = Union[Term, HamiltonianSum]


def _squid_op(op: OperatorMatrix, squid: Squid, dims) -> OperatorMatrix:
    return embed(op, _SLOT[squid], dims)


def _mode_ops(n_max: int):
    dims = system_dims(n_max)
    create, annihilate = fock_ops(n_max)
    return dims, embed(create, 2, dims), embed(annihilate, 2, dims)


def jc_resonant(g: float, squid: Squid, n_max: int = 2) -> OperatorMatrix:
    """Resonant Jaynes-Cummings term ``g (c+ |2><3| + c |3><2|)`` on ``squid``."""
    dims, cp, c = _mode_ops(n_max)
    lower = _squid_op(projector(SQUID_LEVELS, 2, 3), squid, dims)
    h = g * (cp @ lower)
    return h + h.dag()


def dispersive(g: float, delta: float, squid: Squid, n_max: int = 2) -> OperatorMatrix:
    """Effective dispersive term ``(g^2/delta)(|3><3| - |2><2|) c+c``."""
    if delta == 0:
        raise ValueError("dispersive coupling needs nonzero detuning")
    dims, cp, c = _mode_ops(n_max)
    diff = _squid_op(
        projector(SQUID_LEVELS, 3, 3) - projector(SQUID_LEVELS, 2, 2), squid, dims
    )
    return (g * g / delta) * (diff @ (cp @ c))


def jc_detuned(g: float, delta: float, squid: Squid, n_max: int = 2) -> OperatorMatrix:
    """Off-resonant JC coupling ``delta |3><3| + g (c+ |2><3| + h.c.)``."""
    dims = system_dims(n_max)
    return delta * _squid_op(projector(SQUID_LEVELS, 3, 3), squid, dims) + jc_resonant(
        g, squid, n_max
    )


def drive(
    omega: float, phi: float, pair: tuple[int, int], squid: Squid, n_max: int = 2
) -> OperatorMatrix:
    """Classical drive ``omega (e^{i phi} |l><h| + e^{-i phi} |h><l|)``.

    Over a time ``t`` the pair ``{|l>, |h>}`` evolves as
    ``cos(omega t) I - i sin(omega t)(e^{i phi}|l><h| + h.c.)``; at
    ``omega t = pi/2`` and ``phi = pi`` this sends ``|1>`` to ``i|3>``.
    """
    low, high = pair
    if low == high:
        raise ValueError("drive level pair must be distinct")
    dims = system_dims(n_max)
    h = (omega * cmath.exp(1j * phi)) * _squid_op(
        projector(SQUID_LEVELS, low, high), squid, dims
    )
    return h + h.dag()


def _detuned_drive(term: DetunedDrive, n_max: int) -> OperatorMatrix:
    dims, cp, c = _mode_ops(n_max)
    diff = _squid_op(
        projector(SQUID_LEVELS, term.low, term.low)
        - projector(SQUID_LEVELS, term.high, term.high),
        term.squid,
        dims,
    )
    return (0.5 * term.detuning) * (diff @ (cp @ c))


def realize(spec: HamiltonianSpec, n_max: int = 2) -> OperatorMatrix:
    """Turn a Hamiltonian specification into its matrix on the full space."""
    if isinstance(spec, HamiltonianSum):
        dims = system_dims(n_max)
        total = OperatorMatrix(dims, np.zeros((int(np.prod(dims)),) * 2))
        for term in spec.terms:
            total = total + realize(term, n_max)
        return total
    if isinstance(spec, JCResonant):
        return jc_resonant(spec.g, spec.squid, n_max)
    if isinstance(spec, Dispersive):
        return dispersive(spec.g, spec.delta, spec.squid, n_max)
    if isinstance(spec, JCDetuned):
        return jc_detuned(spec.g, spec.delta, spec.squid, n_max)
    if isinstance(spec, Drive):
        return drive(spec.rabi, spec.phase, (spec.low, spec.high), spec.squid, n_max)
    if isinstance(spec, DetunedDrive):
        return _detuned_drive(spec, n_max)
    raise TypeError(f"not a Hamiltonian specification: {spec!r}")


# --- closed-form oracles ---------------------------------------------------


def evolve_closed_resonant(state: StateVector, g: float, t: float) -> StateVector:
    """Closed-form resonant exchange ``|3>_a|n> <-> |2>_a|n+1>`` on SQUID a.

    Each coupled pair rotates by ``cos(sqrt(n+1) g t)``, ``-i sin(...)``;
    the one-excitation pair reproduces the textbook quarter-period map
    ``|3>_a|0>_c -> -i |2>_a|1>_c``. Components outside the pairs are dark.
    """
    n_max = state.dims[2] - 1
    amps = np.array(state.amplitudes)
    out = amps.copy()
    for l in range(SQUID_LEVELS):
        for n in range(n_max):
            i3 = basis_index(3, l, n, n_max)
            i2 = basis_index(2, l, n + 1, n_max)
            theta = math.sqrt(n + 1) * g * t
            cs, sn = math.cos(theta), math.sin(theta)
            out[i3] = cs * amps[i3] - 1j * sn * amps[i2]
            out[i2] = cs * amps[i2] - 1j * sn * amps[i3]
    return StateVector(state.dims, out)


def evolve_closed_dispersive(
    state: StateVector, g: float, delta: float, t: float, squid: Squid = "b"
) -> StateVector:
    """Closed-form dispersive phases: ``|2>|n> *= e^{i n s t}``, ``|3>|n> *= e^{-i n s t}``."""
    n_max = state.dims[2] - 1
    s = g * g / delta
    amps = np.array(state.amplitudes)
    for other in range(SQUID_LEVELS):
        for n in range(1, n_max + 1):
            for level, sign in ((2, 1.0), (3, -1.0)):
                k, l = (level, other) if squid == "a" else (other, level)
                amps[basis_index(k, l, n, n_max)] *= cmath.exp(1j * sign * n * s * t)
    return StateVector(state.dims, amps)


# --- propagation ------------------------------------------------------------


def propagate(
    state: StateVector,
    segments: Iterable[tuple[HamiltonianSpec, float]],
) -> StateVector:
    """Apply ``exp(-i H_k t_k)`` for each segment in order."""
    n_max = state.dims[2] - 1
    out = state
    for spec, duration in segments:
        if duration < 0:
            raise ValueError(f"segment duration must be nonnegative, got {duration}")
        out = matexp_hermitian(realize(spec, n_max), duration) @ out
    return out


def propagator(
    segments: Sequence[tuple[HamiltonianSpec, float]], n_max: int = 2
) -> OperatorMatrix:
    """Total time-ordered propagator of a segment list."""
    dims = system_dims(n_max)
    u = OperatorMatrix(dims, np.eye(int(np.prod(dims))))
    for spec, duration in segments:
        if duration < 0:
            raise ValueError(f"segment duration must be nonnegative, got {duration}")
        u = matexp_hermitian(realize(spec, n_max), duration) @ u
    return u
