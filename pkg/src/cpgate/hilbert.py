"""Hilbert-space plumbing: states, operators, tensor products, Fock operators.

Layout convention for the two-SQUID + resonator system is fixed as
``[squid a (4), squid b (4), resonator (n_max + 1)]`` so the flat index of
``|k>_a |l>_b |n>_c`` is ``(k * 4 + l) * (n_max + 1) + n``. Units: hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
SQUID_LEVELS = 4


class NonHermitianError(ValueError):
    """Raised when a generator handed to the propagator is not Hermitian."""

    def __init__(self, asymmetry: float):
        super().__init__(f"generator is not Hermitian: max|H - H^dag| = {asymmetry:.3e}")
        self.asymmetry = asymmetry


@dataclass(frozen=True)
class StateVector:
    dims: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (int(np.prod(self.dims)),):
            raise ValueError(f"amplitude length {amps.shape} does not match dims {self.dims}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __getitem__(self, index):
        return self.amplitudes[index]


@dataclass(frozen=True)
class OperatorMatrix:
    dims: tuple[int, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        m = np.asarray(self.entries, dtype=complex)
        n = int(np.prod(self.dims))
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __add__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_dims(self.dims, other.dims)
        return OperatorMatrix(self.dims, self.entries + other.entries)

    def __sub__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_dims(self.dims, other.dims)
        return OperatorMatrix(self.dims, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> OperatorMatrix:
        return OperatorMatrix(self.dims, scalar * self.entries)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            _check_dims(self.dims, other.dims)
            return StateVector(self.dims, self.entries @ other.amplitudes)
        _check_dims(self.dims, other.dims)
        return OperatorMatrix(self.dims, self.entries @ other.entries)

    def dag(self) -> OperatorMatrix:
        return OperatorMatrix(self.dims, self.entries.conj().T)

    def hermiticity_error(self) -> float:
        m = self.entries
        return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def _check_dims(a: tuple[int, ...], b: tuple[int, ...]) -> None:
    if tuple(a) != tuple(b):
        raise ValueError(f"dimension mismatch: {tuple(a)} vs {tuple(b)}")


def identity(dim: int) -> OperatorMatrix:
    return OperatorMatrix((dim,), np.eye(dim))


def projector(dim: int, i: int, j: int) -> OperatorMatrix:
    """Single-subsystem outer product ``|i><j|``."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return OperatorMatrix((dim,), m)


def tensor(*ops: OperatorMatrix) -> OperatorMatrix:
    """Kronecker product with the subsystem dims concatenated in order."""
    if not ops:
        raise ValueError("tensor needs at least one operand")
    return reduce(
        lambda x, y: OperatorMatrix(x.dims + y.dims, np.kron(x.entries, y.entries)), ops
    )


def fock_ops(n_max: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Return ``(create, annihilate)`` on the Fock space truncated at ``n_max``.

    The creation operator maps ``|n_max>`` to zero.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    n_max = int(n_max)
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)
    dim = (n_max + 1,)
    return OperatorMatrix(dim, a.T.copy()), OperatorMatrix(dim, a)


def matexp_hermitian(h: OperatorMatrix, t: float) -> OperatorMatrix:
    """Propagator ``exp(-i h t)`` via eigendecomposition of a Hermitian ``h``."""
    asym = h.hermiticity_error()
    if asym > HERMITIAN_TOL:
        raise NonHermitianError(asym)
    herm = 0.5 * (h.entries + h.entries.conj().T)
    w, v = np.linalg.eigh(herm)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return OperatorMatrix(h.dims, u)


def overlap(x: StateVector, y: StateVector) -> complex:
    """Inner product ``<x|y>``, conjugate-linear in ``x``."""
    _check_dims(x.dims, y.dims)
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def system_dims(n_max: int) -> tuple[int, int, int]:
    return (SQUID_LEVELS, SQUID_LEVELS, n_max + 1)


def basis_index(k: int, l: int, n: int, n_max: int) -> int:
    return (k * SQUID_LEVELS + l) * (n_max + 1) + n


def basis_state(k: int, l: int, n: int, n_max: int) -> StateVector:
    """``|k>_a |l>_b |n>_c`` in the canonical layout."""
    dims = system_dims(n_max)
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[basis_index(k, l, n, n_max)] = 1.0
    return StateVector(dims, amps)


def embed(op: OperatorMatrix, slot: int, dims: tuple[int, ...]) -> OperatorMatrix:
    """Lift a single-subsystem operator into the product space at ``slot``."""
    if op.dims != (dims[slot],):
        raise ValueError(f"operator dims {op.dims} do not fit slot {slot} of {dims}")
    factors = [identity(d) for d in dims]
    factors[slot] = op
    return tensor(*factors)
