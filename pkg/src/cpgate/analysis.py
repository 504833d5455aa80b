"""Closed-form error and fidelity estimates, and their numerical counterparts.

The analytic model attributes the gate error to SQUID b's dispersive shift
``s = g_b**2 / delta_c`` acting while it is being driven in steps ii and iv
(photon present). That turns each of those pulses into a detuned Rabi
rotation, giving the fidelity ``F(x)`` as a quadratic in ``x = |theta|**2``,
the population of ``|11>``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from cpgate.dynamics import (
    DetunedDrive,
    DispersiveRegimeWarning,
    GateParams,
    HamiltonianSum,
    ModelKind,
    propagator,
)
from cpgate.protocol import (
    build_schedule,
    computational_indices,
    gate_time,
    ideal_gate_unitary,
    schedule_propagator,
    segment_hamiltonian,
    step_durations,
)

BUDGET_KEYS = ("p3", "analytic_infidelity", "full_residual", "relaxation_exposure")


@dataclass(frozen=True)
class FidelityTerms:
    omega12: float
    s: float
    phi: float
    p: float
    q: float
    r: float


def occupation_p3(g: float, delta: float) -> float:
    """Population of SQUID b's level 3 during the dispersive wait."""
    if not delta > 0:
        raise ValueError(f"detuning must be positive, got {delta}")
    return 4 * g * g / (4 * g * g + delta * delta)


def terms_from_shift(omega12: float, s: float) -> FidelityTerms:
    if not omega12 > 0:
        raise ValueError(f"omega12 must be positive, got {omega12}")
    if s < 0:
        raise ValueError(f"dispersive shift must be >= 0, got {s}")
    gen_rabi = math.hypot(omega12, s / 2)
    phi = math.pi * gen_rabi / (2 * omega12)
    sin_phi = math.sin(phi)
    return FidelityTerms(
        omega12=omega12,
        s=s,
        phi=phi,
        p=math.cos(phi),
        q=(s / 2) / gen_rabi * sin_phi,
        r=omega12 / gen_rabi * sin_phi,
    )


def fidelity_terms(omega12: float, g_b: float, delta_c: float) -> FidelityTerms:
    """Terms for Rabi frequency ``omega12`` and shift ``g_b**2 / delta_c``.

    ``delta_c = inf`` (or ``g_b = 0``) gives the unperturbed limit ``s = 0``.
    """
    if not delta_c > 0:
        raise ValueError(f"delta_c must be positive, got {delta_c}")
    return terms_from_shift(omega12, g_b * g_b / delta_c)


def fidelity_F(x, t: FidelityTerms):
    """State fidelity for an input with ``|11>`` population ``x``."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)):
        raise ValueError("x must lie in [0, 1]")
    p2, q2, r2 = t.p**2, t.q**2, t.r**2
    lin = 1 + p2 - q2 - r2
    quad = (1 - q2 - r2) ** 2 + 2 * p2 * (1 + q2 - r2) + p2 * p2
    f = 1 - 2 * xa * lin + xa * xa * quad
    return float(f) if np.ndim(x) == 0 else f


def average_fidelity(t: FidelityTerms) -> float:
    """Closed-form average of ``fidelity_F`` over ``x`` uniform on [0, 1]."""
    p2, q2, r2 = t.p**2, t.q**2, t.r**2
    return (
        1 + p2 * p2 + q2 * q2 + r2 + r2 * r2 + p2 * (-1 + 2 * q2 - 2 * r2) + q2 * (1 + 2 * r2)
    ) / 3


def average_fidelity_quadrature(t: FidelityTerms, intervals: int = 10_000) -> float:
    """Composite Simpson integral of ``fidelity_F`` over [0, 1]."""
    x = np.linspace(0.0, 1.0, intervals + 1)
    return float(simpson(fidelity_F(x, t), x=x))


def sweep_average_fidelity(
    grid: Sequence[float], g_b: float, delta_c: float
) -> list[tuple[float, float]]:
    grid = [float(v) for v in grid]
    if any(v <= 0 for v in grid):
        raise ValueError("sweep grid values must be positive")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("sweep grid must be ascending")
    return [(om, average_fidelity(fidelity_terms(om, g_b, delta_c))) for om in grid]


def two_level_oracle_fidelity(omega12: float, s: float, theta: complex) -> float:
    """Brute-force fidelity with a detuned SQUID-b drive in steps ii and iv.

    Propagates the full three-body state: every segment is ideal, except
    that the two simultaneous-drive segments also carry a photon-conditioned
    Rabi detuning ``s`` on SQUID b's (1, 2) pair. The other three inputs
    share the remaining weight ``1 - |theta|**2`` equally.
    """
    x = abs(theta) ** 2
    if x > 1 + 1e-12:
        raise ValueError("|theta| must not exceed 1")
    rest = math.sqrt(max(0.0, 1 - x) / 3)
    amps = np.array([rest, rest, rest, theta], dtype=complex)
    delta_c = 1 / s if s > 0 else 10.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DispersiveRegimeWarning)
        p = GateParams(omega_02=omega12, omega_12=omega12, delta_c=delta_c)
    segments = []
    for seg in build_schedule(p):
        h = segment_hamiltonian(seg, p, ModelKind.IDEAL)
        if any(d.squid == "b" for d in seg.drives):
            h = HamiltonianSum(h.terms + (DetunedDrive("b", 1, 2, s),))
        segments.append((h, seg.duration))
    u = propagator(segments, p.n_max).entries
    idx = computational_indices(p.n_max)
    out = u[:, idx] @ amps
    ideal = ideal_gate_unitary() @ amps
    return abs(np.vdot(ideal, out[idx])) ** 2


def random_qubit_states(samples: int, seed: int = 0) -> np.ndarray:
    """Uniform points on the unit sphere of C^4 (real 7-sphere), one per row."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, 4)) + 1j * rng.standard_normal((samples, 4))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def full_model_average_fidelity(
    p: GateParams,
    samples: int = 200,
    seed: int = 0,
    model: ModelKind = ModelKind.FULL,
) -> tuple[float, float]:
    """Monte-Carlo mean of ``|<psi_ideal|psi(tau)>|^2`` and its standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    u = schedule_propagator(build_schedule(p), p, model).entries
    idx = computational_indices(p.n_max)
    block = u[np.ix_(idx, idx)]
    states = random_qubit_states(samples, seed)
    out = states @ block.T
    ideal = states @ ideal_gate_unitary().T
    fid = np.abs(np.sum(ideal.conj() * out, axis=1)) ** 2
    stderr = float(fid.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(fid.mean()), stderr


def error_budget(
    p: GateParams,
    gamma3_inv: float | None = None,
    samples: int = 200,
    seed: int = 0,
    shift: float | None = None,
) -> dict[str, float | None]:
    """Labelled error contributions at parameter point ``p``.

    ``full_residual`` is the full-model Monte-Carlo infidelity minus the
    analytic one; it is dominated by SQUID a's resonant coupling acting
    under the pulses. ``relaxation_exposure`` is ``(t1 + t1') / gamma3_inv``.
    ``shift`` replaces ``g_b**2 / delta_c`` in the analytic entry only.
    """
    if gamma3_inv is not None and not gamma3_inv > 0:
        raise ValueError(f"gamma3_inv must be positive, got {gamma3_inv}")
    s = p.dispersive_shift if shift is None else shift
    analytic = 1 - average_fidelity(terms_from_shift(p.omega_12, s))
    full_mean, _ = full_model_average_fidelity(p, samples, seed)
    t = step_durations(p)
    return {
        "p3": occupation_p3(p.g_b, p.delta_c),
        "analytic_infidelity": analytic,
        "full_residual": (1 - full_mean) - analytic,
        "relaxation_exposure": None
        if gamma3_inv is None
        else (t["t1"] + t["t1_prime"]) / gamma3_inv,
    }


@dataclass(frozen=True)
class FidelityReport:
    x: np.ndarray
    fidelity: np.ndarray
    avg_analytic: float
    avg_quadrature: float
    p3: float
    tau: float
    avg_full: float
    avg_full_stderr: float
    budget: dict


def fidelity_report(
    p: GateParams,
    points: int = 11,
    samples: int = 200,
    seed: int = 0,
    gamma3_inv: float | None = None,
) -> FidelityReport:
    terms = fidelity_terms(p.omega_12, p.g_b, p.delta_c)
    x = np.linspace(0.0, 1.0, points)
    full_mean, full_err = full_model_average_fidelity(p, samples, seed)
    return FidelityReport(
        x=x,
        fidelity=fidelity_F(x, terms),
        avg_analytic=average_fidelity(terms),
        avg_quadrature=average_fidelity_quadrature(terms),
        p3=occupation_p3(p.g_b, p.delta_c),
        tau=gate_time(p),
        avg_full=full_mean,
        avg_full_stderr=full_err,
        budget=error_budget(p, gamma3_inv, samples, seed),
    )


# --- sweep output -------------------------------------------------------------


def _full_point(args):
    base, omega12, samples, seed = args
    return full_model_average_fidelity(
        replace(base, omega_02=omega12, omega_12=omega12), samples, seed
    )


def sweep_rows(
    grid: Sequence[float],
    base: GateParams,
    full: bool = False,
    samples: int = 200,
    seed: int = 0,
    jobs: int = 1,
) -> list[tuple[float, ...]]:
    """Rows of ``(omega12/g_b, avg_analytic[, avg_full, stderr])`` in grid order.

    The full-model column ties ``omega_02`` to the swept ``omega12``.
    """
    rows = [
        (om / base.g_b, fbar)
        for om, fbar in sweep_average_fidelity(grid, base.g_b, base.delta_c)
    ]
    if not full:
        return rows
    tasks = [(base, om, samples, seed) for om in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            full_cols = list(pool.map(_full_point, tasks))
    else:
        full_cols = [_full_point(t) for t in tasks]
    return [row + col for row, col in zip(rows, full_cols)]


def sweep_csv(rows: Sequence[tuple[float, ...]], full: bool = False) -> str:
    header = ["omega12_over_gb", "avg_fidelity_analytic"]
    if full:
        header += ["avg_fidelity_full", "stderr"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, ".12g") for v in row])
    return buf.getvalue()
