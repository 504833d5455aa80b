import cmath
import math

import numpy as np
import pytest

from cpgate.dynamics import (
    Dispersive,
    DispersiveRegimeWarning,
    Drive,
    GateParams,
    HamiltonianSum,
    JCDetuned,
    JCResonant,
    dispersive,
    drive,
    evolve_closed_dispersive,
    evolve_closed_resonant,
    jc_detuned,
    jc_resonant,
    propagate,
    realize,
)
from cpgate.hilbert import (
    SQUID_LEVELS,
    StateVector,
    basis_index,
    basis_state,
    embed,
    fock_ops,
    matexp_hermitian,
    projector,
    system_dims,
)

N = 2
DIMS = system_dims(N)


def idx(k, l, n):
    return basis_index(k, l, n, N)


def excitation(squid):
    slot = 0 if squid == "a" else 1
    create, annihilate = fock_ops(N)
    return embed(projector(SQUID_LEVELS, 3, 3), slot, DIMS) + embed(create @ annihilate, 2, DIMS)


def random_state(rng):
    v = rng.normal(size=48) + 1j * rng.normal(size=48)
    return StateVector(DIMS, v / np.linalg.norm(v))


ALL_SPECS = [
    JCResonant("a", 0.8),
    JCResonant("b", 1.3),
    Dispersive("b", 1.0, 10.0),
    JCDetuned("b", 1.0, 7.0),
    Drive("a", 1, 3, 10.0, math.pi),
    Drive("b", 1, 2, 0.6, -math.pi / 2),
    HamiltonianSum((Drive("a", 0, 2, 3.0, 0.4), JCResonant("a", 1.0), JCDetuned("b", 1.0, 10.0))),
]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
def test_realized_hamiltonians_hermitian(spec):
    h = realize(spec, N)
    assert h.hermiticity_error() < 1e-12
    u = matexp_hermitian(h, 1.234).entries
    assert np.max(np.abs(u.conj().T @ u - np.eye(48))) < 1e-10


class TestResonant:
    def test_dark_state(self):
        h = jc_resonant(1.0, "a")
        assert np.allclose((h @ basis_state(2, 0, 0, N)).amplitudes, 0)

    def test_single_matrix_element(self):
        g = 0.7
        out = (jc_resonant(g, "a") @ basis_state(3, 0, 0, N)).amplitudes
        expected = np.zeros(48)
        expected[idx(2, 0, 1)] = g
        np.testing.assert_allclose(out, expected, atol=1e-15)

    @pytest.mark.parametrize("squid", ["a", "b"])
    def test_conserves_excitations(self, squid):
        h, n = jc_resonant(1.1, squid).entries, excitation(squid).entries
        assert np.max(np.abs(h @ n - n @ h)) < 1e-12


class TestDispersive:
    def test_elements(self):
        g, d = 1.0, 10.0
        h = np.diag(dispersive(g, d, "b").entries)
        assert h[idx(0, 2, 1)] == pytest.approx(-g * g / d)
        assert h[idx(0, 3, 0)] == 0
        assert h[idx(0, 2, 2)] == pytest.approx(-2 * g * g / d)

    def test_is_diagonal(self):
        h = dispersive(1.0, 10.0, "b").entries
        assert np.count_nonzero(h - np.diag(np.diag(h))) == 0

    def test_zero_detuning_rejected(self):
        with pytest.raises(ValueError):
            dispersive(1.0, 0.0, "b")


class TestDetuned:
    def test_no_coupling_is_diagonal(self):
        h = jc_detuned(0.0, 4.0, "b").entries
        expected = np.zeros(48)
        for k in range(4):
            for n in range(3):
                expected[idx(k, 3, n)] = 4.0
        np.testing.assert_allclose(h, np.diag(expected))

    def test_two_by_two_block(self):
        g, d = 1.0, 10.0
        h = jc_detuned(g, d, "b").entries
        sel = [idx(0, 3, 0), idx(0, 2, 1)]
        w = np.linalg.eigvalsh(h[np.ix_(sel, sel)])
        root = math.sqrt(d * d + 4 * g * g)
        np.testing.assert_allclose(w, [(d - root) / 2, (d + root) / 2], rtol=1e-14)

    def test_conserves_excitations(self):
        h, n = jc_detuned(1.0, 10.0, "b").entries, excitation("b").entries
        assert np.max(np.abs(h @ n - n @ h)) < 1e-12


def _phase_error_against_dispersive(ratio):
    g, d = 1.0, ratio
    t3 = math.pi * d / g**2
    psi = propagate(basis_state(0, 2, 1, N), [(JCDetuned("b", g, d), t3)])
    ph = cmath.phase(psi[idx(0, 2, 1)])
    return abs(cmath.phase(cmath.exp(1j * (ph - math.pi))))


def test_detuned_phase_matches_two_level_closed_form():
    # Oracle: |2>_b|1>_c couples only to |3>_b|0>_c; 2x2 Rabi solution.
    g, d = 1.0, 10.0
    t = math.pi * d
    lam = math.sqrt(d * d / 4 + g * g)
    expected = cmath.exp(-1j * d * t / 2) * (math.cos(lam * t) + 1j * d / (2 * lam) * math.sin(lam * t))
    psi = propagate(basis_state(0, 2, 1, N), [(JCDetuned("b", g, d), t)])
    assert abs(psi[idx(0, 2, 1)] - expected) < 1e-12


def test_dispersive_limit_converges():
    errors = [_phase_error_against_dispersive(r) for r in (10, 20, 40)]
    # frozen from brute-force propagation
    np.testing.assert_allclose(errors, [0.030205085007, 0.007776172887, 0.001958598154], rtol=1e-8)
    assert errors[0] < 0.1
    assert errors[0] > errors[1] > errors[2]


class TestDrive:
    """Pulse maps used by the gate steps at a quarter Rabi period."""

    def _apply(self, phi, pair, squid, k, l):
        omega = 2.0
        u = matexp_hermitian(drive(omega, phi, pair, squid), math.pi / (2 * omega))
        return (u @ basis_state(k, l, 0, N)).amplitudes

    def test_step_i_pulse(self):
        out = self._apply(math.pi, (1, 3), "a", 1, 0)
        assert out[idx(3, 0, 0)] == pytest.approx(1j)

    def test_step_ii_pulse_on_a(self):
        assert self._apply(math.pi / 2, (0, 2), "a", 2, 0)[idx(0, 0, 0)] == pytest.approx(1)
        assert self._apply(math.pi / 2, (0, 2), "a", 0, 0)[idx(2, 0, 0)] == pytest.approx(-1)

    def test_step_ii_pulse_on_b(self):
        assert self._apply(-math.pi / 2, (1, 2), "b", 0, 1)[idx(0, 2, 0)] == pytest.approx(1)

    def test_step_iv_pulses(self):
        assert self._apply(-math.pi / 2, (0, 2), "a", 0, 0)[idx(2, 0, 0)] == pytest.approx(1)
        assert self._apply(-math.pi / 2, (0, 2), "a", 2, 0)[idx(0, 0, 0)] == pytest.approx(-1)
        assert self._apply(math.pi / 2, (1, 2), "b", 0, 2)[idx(0, 1, 0)] == pytest.approx(1)

    def test_propagator_form(self):
        omega, phi, t = 1.3, 0.7, 0.45
        u = matexp_hermitian(drive(omega, phi, (0, 2), "a"), t).entries
        sel = [idx(0, 0, 0), idx(2, 0, 0)]
        sigma = np.array([[0, cmath.exp(1j * phi)], [cmath.exp(-1j * phi), 0]])
        expected = math.cos(omega * t) * np.eye(2) - 1j * math.sin(omega * t) * sigma
        np.testing.assert_allclose(u[np.ix_(sel, sel)], expected, atol=1e-14)

    def test_other_levels_untouched(self):
        u = matexp_hermitian(drive(3.0, 0.3, (1, 3), "a"), 0.9).entries
        for k in (0, 2):
            for l in range(4):
                for n in range(3):
                    i = idx(k, l, n)
                    assert u[i, i] == pytest.approx(1, abs=1e-14)

    def test_equal_levels_rejected(self):
        with pytest.raises(ValueError):
            drive(1.0, 0.0, (2, 2), "a")
        with pytest.raises(ValueError):
            Drive("a", 1, 1, 1.0, 0.0)


class TestClosedForms:
    def test_resonant_quarter_period(self):
        g = 1.0
        t = math.pi / (2 * g)
        out = evolve_closed_resonant(basis_state(3, 0, 0, N), g, t)
        assert out[idx(2, 0, 1)] == pytest.approx(-1j)
        out = evolve_closed_resonant(basis_state(2, 0, 1, N), g, t)
        assert out[idx(3, 0, 0)] == pytest.approx(-1j)

    def test_resonant_zero_time(self):
        psi = random_state(np.random.default_rng(0))
        np.testing.assert_array_equal(evolve_closed_resonant(psi, 1.0, 0.0).amplitudes, psi.amplitudes)

    def test_dispersive_phase_flip(self):
        g, d = 1.0, 10.0
        t = math.pi * d / g**2
        psi = evolve_closed_dispersive(basis_state(0, 2, 1, N), g, d, t)
        assert psi[idx(0, 2, 1)] == pytest.approx(-1)
        psi = evolve_closed_dispersive(basis_state(0, 0, 1, N), g, d, t)
        assert psi[idx(0, 0, 1)] == 1

    def test_vacuum_components_unchanged(self):
        for l in (2, 3):
            psi = evolve_closed_dispersive(basis_state(1, l, 0, N), 1.0, 10.0, 3.3)
            assert psi[idx(1, l, 0)] == 1


def test_resonant_oracle_random_draws():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        g, t = rng.uniform(0.1, 5), rng.uniform(0, 10)
        psi = random_state(rng)
        numeric = propagate(psi, [(JCResonant("a", g), t)])
        worst = max(worst, np.max(np.abs(numeric.amplitudes - evolve_closed_resonant(psi, g, t).amplitudes)))
    assert worst < 1e-10


def test_dispersive_oracle_random_draws():
    rng = np.random.default_rng(12)
    for _ in range(100):
        g, d, t = rng.uniform(0.1, 2), rng.uniform(1, 50), rng.uniform(0, 100)
        psi = random_state(rng)
        numeric = propagate(psi, [(Dispersive("b", g, d), t)])
        closed = evolve_closed_dispersive(psi, g, d, t)
        assert np.max(np.abs(numeric.amplitudes - closed.amplitudes)) < 1e-12


class TestPropagate:
    def test_empty_schedule(self):
        psi = random_state(np.random.default_rng(1))
        assert propagate(psi, []) is psi

    def test_matches_closed_resonant(self):
        psi = basis_state(3, 0, 0, N)
        out = propagate(psi, [(JCResonant("a", 1.0), math.pi / 2)])
        np.testing.assert_allclose(out.amplitudes, evolve_closed_resonant(psi, 1.0, math.pi / 2).amplitudes, atol=1e-10)

    def test_negative_duration(self):
        with pytest.raises(ValueError):
            propagate(basis_state(0, 0, 0, N), [(JCResonant("a", 1.0), -1.0)])

    def test_norm_preserved(self):
        rng = np.random.default_rng(2)
        psi = random_state(rng)
        out = propagate(psi, [(spec, rng.uniform(0, 5)) for spec in ALL_SPECS])
        assert abs(out.norm - 1) < 1e-9


class TestGateParams:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            GateParams(g_a=0)
        with pytest.raises(ValueError):
            GateParams(n_max=0)

    def test_warns_outside_dispersive_regime(self):
        with pytest.warns(DispersiveRegimeWarning):
            GateParams(delta_c=2.0)

    def test_shift(self):
        assert GateParams(g_b=2.0, delta_c=20.0).dispersive_shift == pytest.approx(0.2)
