import json
import math
from pathlib import Path

import numpy as np
import pytest

from cpgate import device
from cpgate.device import (
    PHI0,
    ConfigError,
    GridConfig,
    NotConvergedError,
    SquidParams,
    WindowTooSmallError,
    eigenlevels,
    parse_device_config,
    squid_potential,
    transition_table,
)

DATA = Path(__file__).parent / "data"
PKG_DATA = Path(device.__file__).parent / "data"

L, C = 100e-12, 100e-15
HARMONIC = SquidParams.from_phi0_fraction(C, L, 0.0, 0.5)


def ic_for_beta(beta, inductance=L):
    return beta * PHI0 / (2 * math.pi * inductance)


REPRESENTATIVE = SquidParams.from_phi0_fraction(C, L, 3.94927174170544e-06, 0.499)


class TestPotential:
    def test_harmonic_minimum(self):
        assert squid_potential(HARMONIC, HARMONIC.bias_flux_Phix) == 0

    def test_inductive_term(self):
        u = squid_potential(HARMONIC, HARMONIC.bias_flux_Phix + PHI0)
        assert u == pytest.approx(PHI0**2 / (2 * L), rel=1e-14)

    def test_double_well(self):
        # brute-force scan: count sign changes of the sampled derivative
        p = SquidParams.from_phi0_fraction(C, L, ic_for_beta(1.2), 0.5)
        flux = p.bias_flux_Phix + np.linspace(-0.5, 0.5, 20001) * PHI0
        du = np.diff(squid_potential(p, flux))
        minima = np.count_nonzero((du[:-1] < 0) & (du[1:] >= 0))
        assert minima == 2

    def test_single_well_below_threshold(self):
        p = SquidParams.from_phi0_fraction(C, L, ic_for_beta(0.8), 0.5)
        flux = p.bias_flux_Phix + np.linspace(-0.5, 0.5, 20001) * PHI0
        du = np.diff(squid_potential(p, flux))
        assert np.count_nonzero((du[:-1] < 0) & (du[1:] >= 0)) == 1


class TestParams:
    def test_beta_and_josephson_energy(self):
        assert REPRESENTATIVE.beta_L == pytest.approx(1.2, rel=1e-12)
        assert REPRESENTATIVE.josephson_energy > 0

    @pytest.mark.parametrize("args", [(0, L, 1e-6, 0), (C, -L, 1e-6, 0), (C, L, -1e-6, 0)])
    def test_rejects_nonpositive(self, args):
        with pytest.raises(device.DeviceError):
            SquidParams(*args)

    def test_grid_must_be_odd(self):
        with pytest.raises(device.DeviceError):
            GridConfig(0.5, 2000)
        with pytest.raises(device.DeviceError):
            GridConfig(0.5, 199)


class TestHarmonicLimit:
    def test_spacing(self):
        ls = eigenlevels(HARMONIC)
        spacing = np.diff(ls.energies)
        assert HARMONIC.plasma_frequency == pytest.approx(3.162e11, rel=1e-3)
        np.testing.assert_allclose(spacing, HARMONIC.plasma_frequency, rtol=1e-3)

    def test_transition_ratio(self):
        table = transition_table(eigenlevels(HARMONIC))
        assert table[1, 3] == pytest.approx(2 * table[2, 3], rel=1e-3)


@pytest.fixture(scope="module")
def levels():
    return eigenlevels(REPRESENTATIVE)


class TestRepresentative:
    def test_strictly_increasing(self, levels):
        assert np.all(np.diff(levels.energies) > 0)
        assert levels.energies[0] == 0

    def test_anharmonic_spacings(self, levels):
        w10, w21, w32 = np.diff(levels.energies)
        for a, b in ((w10, w21), (w21, w32), (w10, w32)):
            assert abs(a - b) / max(a, b) > 0.01

    def test_converged(self, levels):
        assert levels.convergence < 1e-3

    def test_orthonormal_on_grid(self, levels):
        step = levels.grid[1] - levels.grid[0]
        gram = levels.wavefunctions.T @ levels.wavefunctions * step
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)

    def test_table_identities(self, levels):
        t = transition_table(levels)
        np.testing.assert_allclose(t, -t.T)
        assert t[1, 3] == pytest.approx(t[2, 3] + t[1, 2], rel=1e-12)
        assert t[0, 2] + t[2, 3] == pytest.approx(t[0, 3], rel=1e-12)
        assert min(t[1, 3], t[0, 2], t[1, 2], t[2, 3]) > 0

    def test_matches_stored_baseline(self, levels):
        baseline = json.loads((DATA / "squid_a_levels.json").read_text())
        np.testing.assert_allclose(levels.energies, baseline["energies_rad_s"], rtol=1e-9)
        np.testing.assert_allclose(
            transition_table(levels), baseline["transition_table_rad_s"], rtol=1e-9, atol=1e-9 * levels.energies[-1]
        )

    def test_shift_by_flux_quantum(self, levels):
        shifted = SquidParams(C, L, REPRESENTATIVE.critical_current_Ic, REPRESENTATIVE.bias_flux_Phix + PHI0)
        moved = eigenlevels(shifted)
        np.testing.assert_allclose(moved.energies[1:], levels.energies[1:], rtol=1e-9)


def test_two_squids_have_different_spectra():
    a, _ = device.load_device_config(PKG_DATA / "squid_a.cfg")
    b, _ = device.load_device_config(PKG_DATA / "squid_b.cfg")
    wa, wb = eigenlevels(a), eigenlevels(b)
    assert abs(wa.omega(2, 3) - wb.omega(2, 3)) / wa.omega(2, 3) > 0.1


def test_window_too_small():
    with pytest.raises(WindowTooSmallError):
        eigenlevels(HARMONIC, GridConfig(0.04, 401))


def test_not_converged_reports_both_sets():
    with pytest.raises(NotConvergedError) as info:
        eigenlevels(HARMONIC, GridConfig(0.5, 201))
    err = info.value
    assert err.coarse.shape == err.fine.shape == (4,)
    assert np.max(err.rel_change) >= 1e-3


def test_default_grid_converges_for_harmonic():
    ls = eigenlevels(HARMONIC)
    assert ls.convergence < 1e-3


class TestConfig:
    GOOD = """
    # harmonic
    capacitance_f = 1e-13
    inductance_h = 1e-10
    critical_current_a = 0
    bias_flux_phi0_fraction = 0.5
    grid_points = 1001
    """

    def test_parse(self):
        params, grid = parse_device_config(self.GOOD)
        assert params.capacitance_C == 1e-13
        assert params.bias_flux_Phix == pytest.approx(0.5 * PHI0)
        assert grid.points == 1001 and grid.window_phi0 == 0.5

    def test_missing_key(self):
        text = self.GOOD.replace("capacitance_f = 1e-13", "")
        with pytest.raises(ConfigError, match="capacitance_f") as info:
            parse_device_config(text)
        assert info.value.key == "capacitance_f"

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_device_config(self.GOOD + "colour = red\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="inductance_h"):
            parse_device_config(self.GOOD.replace("1e-10", "ten"))

    def test_shipped_configs_load(self):
        for name in ("squid_a.cfg", "squid_b.cfg", "harmonic.cfg"):
            device.load_device_config(PKG_DATA / name)
