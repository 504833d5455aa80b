"""rf-SQUID spectrum from a finite-difference solve in flux space.

The Hamiltonian ``Q^2/2C + (Phi - Phi_x)^2/2L - E_J cos(2 pi Phi/Phi_0)``
is quantized with ``Q = -i hbar d/dPhi``. We work in the reduced flux
``phi = Phi/Phi_0`` and angular-frequency units (energy / hbar), so the
discretized operator is a symmetric tridiagonal matrix with hard walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import e as E_CHARGE
from scipy.constants import h as PLANCK
from scipy.constants import hbar as HBAR
from scipy.linalg import eigh_tridiagonal

PHI0 = PLANCK / (2 * E_CHARGE)

CONVERGENCE_TOL = 1e-3
EDGE_MASS_TOL = 1e-6
EDGE_FRACTION = 0.05


class DeviceError(ValueError):
    pass


class WindowTooSmallError(DeviceError):
    pass


class NotConvergedError(RuntimeError):
    """Grid doubling moved a level by more than the tolerance."""

    def __init__(self, coarse: np.ndarray, fine: np.ndarray, rel_change: np.ndarray):
        super().__init__(
            "eigenlevels not converged under grid doubling: "
            f"max relative change {float(np.max(rel_change)):.3e}"
        )
        self.coarse = coarse
        self.fine = fine
        self.rel_change = rel_change


@dataclass(frozen=True)
class SquidParams:
    capacitance_C: float
    inductance_L: float
    critical_current_Ic: float
    bias_flux_Phix: float  # webers

    def __post_init__(self):
        if not self.capacitance_C > 0 or not self.inductance_L > 0:
            raise DeviceError("capacitance and inductance must be positive")
        if not self.critical_current_Ic >= 0:
            raise DeviceError("critical current must be nonnegative")

    @classmethod
    def from_phi0_fraction(cls, C: float, L: float, Ic: float, phix_fraction: float):
        return cls(C, L, Ic, phix_fraction * PHI0)

    @property
    def josephson_energy(self) -> float:
        """``E_J = I_c Phi_0 / 2 pi`` in joules."""
        return self.critical_current_Ic * PHI0 / (2 * math.pi)

    @property
    def beta_L(self) -> float:
        return 2 * math.pi * self.inductance_L * self.critical_current_Ic / PHI0

    @property
    def plasma_frequency(self) -> float:
        """``1/sqrt(LC)``, the level spacing of the harmonic (I_c = 0) limit."""
        return 1 / math.sqrt(self.inductance_L * self.capacitance_C)


@dataclass(frozen=True)
class GridConfig:
    window_phi0: float = 0.5
    points: int = 2001

    def __post_init__(self):
        if self.points < 201 or self.points % 2 == 0:
            raise DeviceError(f"grid_points must be odd and >= 201, got {self.points}")
        if not self.window_phi0 > 0:
            raise DeviceError("window_phi0 must be positive")

    def doubled(self) -> GridConfig:
        return GridConfig(self.window_phi0, 2 * self.points - 1)


@dataclass(frozen=True)
class LevelStructure:
    """Lowest energies (rad/s) measured from the ground level."""

    energies: np.ndarray
    wavefunctions: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    well_bottom: float = 0.0  # ground-state energy above the potential minimum
    convergence: float = math.nan  # max relative change under grid doubling

    def omega(self, i: int, j: int) -> float:
        """Transition frequency ``E_j - E_i``."""
        return float(self.energies[j] - self.energies[i])


def squid_potential(p: SquidParams, flux):
    """``(Phi - Phi_x)^2/2L - E_J cos(2 pi Phi/Phi_0)`` in joules."""
    flux = np.asarray(flux, dtype=float)
    u = (flux - p.bias_flux_Phix) ** 2 / (2 * p.inductance_L) - p.josephson_energy * np.cos(
        2 * math.pi * flux / PHI0
    )
    return float(u) if u.ndim == 0 else u


def _reduced_potential(p: SquidParams, phi: np.ndarray) -> np.ndarray:
    """Potential over ``phi = Phi/Phi_0`` in rad/s."""
    phix = p.bias_flux_Phix / PHI0
    e_l = PHI0**2 / (2 * p.inductance_L * HBAR)
    e_j = p.josephson_energy / HBAR
    return e_l * (phi - phix) ** 2 - e_j * np.cos(2 * math.pi * phi)


def potential_minimum(p: SquidParams, samples: int = 200_001) -> float:
    """Reduced flux of the global potential minimum (dense sampled search)."""
    phix = p.bias_flux_Phix / PHI0
    reach = math.sqrt(p.beta_L) / math.pi + 0.5
    offsets = np.linspace(-reach, reach, samples)
    u = _reduced_potential(p, phix + offsets)
    return phix + float(offsets[int(np.argmin(u))])


def _solve(p: SquidParams, g: GridConfig, k: int, center: float):
    phi = center + np.linspace(-g.window_phi0, g.window_phi0, g.points)
    step = phi[1] - phi[0]
    kin = HBAR / (2 * p.capacitance_C * PHI0**2) / step**2
    v = _reduced_potential(p, phi)
    vmin = float(v.min())
    diag = 2 * kin + (v - vmin)
    off = np.full(g.points - 1, -kin)
    w, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    return phi, w, vecs / math.sqrt(step)


def eigenlevels(
    p: SquidParams,
    g: GridConfig = GridConfig(),
    k: int = 4,
    check_convergence: bool = True,
) -> LevelStructure:
    """The ``k`` lowest levels of the SQUID Hamiltonian.

    Raises ``WindowTooSmallError`` when the highest requested state has
    more than 1e-6 of its probability in the outer 5% of the window, and
    ``NotConvergedError`` when doubling the grid moves any of the four
    lowest levels (measured from the potential minimum) by 0.1% or more.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    center = potential_minimum(p)
    phi, w, psi = _solve(p, g, k, center)
    step = phi[1] - phi[0]
    edge = max(1, int(EDGE_FRACTION * g.points))
    top = psi[:, -1] ** 2 * step
    edge_mass = float(top[:edge].sum() + top[-edge:].sum())
    if edge_mass > EDGE_MASS_TOL:
        raise WindowTooSmallError(
            f"level {k - 1} has {edge_mass:.2e} probability in the outer "
            f"{EDGE_FRACTION:.0%} of a +/-{g.window_phi0} Phi_0 window"
        )
    rel = math.nan
    if check_convergence:
        _, w_fine, _ = _solve(p, g.doubled(), k, center)
        m = min(k, 4)
        change = np.abs(w[:m] - w_fine[:m]) / np.abs(w_fine[:m])
        rel = float(change.max())
        if rel >= CONVERGENCE_TOL:
            raise NotConvergedError(w - w[0], w_fine - w_fine[0], change)
    return LevelStructure(
        energies=w - w[0],
        wavefunctions=psi,
        grid=phi,
        well_bottom=float(w[0]),
        convergence=rel,
    )


def transition_table(ls: LevelStructure) -> np.ndarray:
    """Antisymmetric table with entry ``[i, j] = E_j - E_i``.

    Note the index order: ``table[1, 3]`` is the 1 -> 3 transition
    frequency, i.e. the quantity usually written omega_31.
    """
    e = np.asarray(ls.energies, dtype=float)
    return e[None, :] - e[:, None]


# --- config files -------------------------------------------------------------

CONFIG_KEYS = {
    "capacitance_f": float,
    "inductance_h": float,
    "critical_current_a": float,
    "bias_flux_phi0_fraction": float,
    "grid_points": int,
    "window_phi0": float,
}
REQUIRED_KEYS = ("capacitance_f", "inductance_h", "critical_current_a", "bias_flux_phi0_fraction")


class ConfigError(DeviceError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


def parse_device_config(text: str) -> tuple[SquidParams, GridConfig]:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    values: dict[str, float | int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        try:
            values[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: invalid value for {key}: {value!r}", key) from None
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", key)
    try:
        params = SquidParams.from_phi0_fraction(
            values["capacitance_f"],
            values["inductance_h"],
            values["critical_current_a"],
            values["bias_flux_phi0_fraction"],
        )
        grid = GridConfig(
            values.get("window_phi0", GridConfig.window_phi0),
            values.get("grid_points", GridConfig.points),
        )
    except DeviceError as exc:
        raise ConfigError(str(exc)) from None
    return params, grid


def load_device_config(path: str | Path) -> tuple[SquidParams, GridConfig]:
    return parse_device_config(Path(path).read_text(encoding="utf-8"))
