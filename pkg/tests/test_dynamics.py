from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from propertime import dynamics
from propertime.dynamics import (
    ClockParams,
    CompositeState,
    Propagator,
    build_hamiltonian,
    carrier_phase,
    diagonal_sods_propagator,
    evolve,
    exact_propagator,
    mixed_state_evolution,
    oracle_propagator,
    perturbative_propagator,
    reduce_to_clock,
)
from propertime.errors import DimensionMismatch, UnphysicalParameters
from propertime.fock import MotionalDensity, fock_state, general_squeezed_vacuum, thermal_density, vacuum
from propertime.validation import check_oracle_equivalence


def test_species_presets_regenerate_eps():
    al = ClockParams.from_species("al+", 20e6)
    assert float(f"{al.eps_m:.3g}") == 3.29e-18
    assert float(f"{al.eps_c:.3g}") == 1.85e-10
    assert al.mass == pytest.approx(26.981 * 1.66053906660e-27)
    b = ClockParams.from_species("b+")
    assert b.eps_c / al.eps_c == pytest.approx(26.981 / 10.013)


@settings(max_examples=50, deadline=None)
@given(mass_u=st.floats(1, 300), wavelength=st.floats(1e-7, 2e-6), trap=st.floats(1e5, 1e8))
def test_parameter_identity(mass_u, wavelength, trap):
    p = ClockParams.physical(mass_u * 1.66053906660e-27, 2 * math.pi * 299792458.0 / wavelength, 2 * math.pi * trap)
    assert abs(p.eps_m * p.omega_c - p.eps_c * p.omega) <= 1e-12 * p.eps_c * p.omega


def test_unphysical_parameters():
    with pytest.raises(UnphysicalParameters):
        ClockParams.dimensionless(1.0)
    with pytest.raises(UnphysicalParameters):
        ClockParams.dimensionless(-0.1)
    with pytest.raises(UnphysicalParameters):
        ClockParams(100.0, 1.0, 0.1, 0.5)  # breaks eps_m omega_c = eps_c omega
    with pytest.raises(UnphysicalParameters):
        ClockParams(1.0, 2.0, 0.1, 0.2)  # omega > omega_c


def test_squeeze_and_rotation_parameters():
    p = ClockParams.dimensionless(0.1, 100)
    assert p.zeta == pytest.approx(-math.log(0.9) / 4)
    assert p.zeta == pytest.approx(0.026340, abs=1e-6)
    assert p.lam == pytest.approx(math.sqrt(0.9))


def test_hamiltonian_matrix_elements():
    p = ClockParams.dimensionless(0.1, 100)
    H = build_hamiltonian(p, 12, frame="lab")
    assert H.excited.matrix[0, 0].real == pytest.approx(100.475)
    assert H.ground.matrix[0, 0].real == pytest.approx(0.5)
    full = H.full()
    assert np.max(np.abs(full - full.conj().T)) < 1e-14
    assert np.all(full[:12, 12:] == 0)
    H0 = build_hamiltonian(ClockParams.dimensionless(0.0, 100), 6, frame="lab")
    np.testing.assert_allclose(H0.excited.matrix, np.diag(100 + np.arange(6) + 0.5))
    rot = build_hamiltonian(p, 12, frame="rotating")
    assert rot.excited.matrix[0, 0].real == pytest.approx(0.475)


def test_hamiltonian_si_units():
    p = ClockParams.from_species("al+")
    H = build_hamiltonian(p, 4, frame="lab", si=True)
    assert H.units == "joule"
    assert H.ground.matrix[0, 0].real == pytest.approx(1.054571817e-34 * p.omega / 2)


@settings(max_examples=20, deadline=None)
@given(eps=st.floats(0, 0.5), ratio=st.floats(2, 1e3), dim=st.integers(2, 30))
def test_hamiltonian_hermitian(eps, ratio, dim):
    H = build_hamiltonian(ClockParams.dimensionless(eps, ratio), dim).full()
    assert np.max(np.abs(H - H.conj().T)) < 1e-14


def test_carrier_phase_large_products():
    ratio, wt = 1.2345678901234567e9, 8.765432109876543e6
    with mpmath.workprec(400):
        ref = mpmath.fmod(mpmath.mpf(ratio) * mpmath.mpf(wt), 2 * mpmath.pi)
    assert carrier_phase(ratio, wt) == pytest.approx(float(ref), abs=1e-14)
    assert carrier_phase(3.0, 0.5) == pytest.approx(1.5)


def test_oracle_basics():
    p = ClockParams.dimensionless(0.05, 100)
    H = build_hamiltonian(p, 32, frame="rotating")
    P0 = oracle_propagator(H, 0.0, p)
    np.testing.assert_allclose(P0.U_e.matrix, np.eye(32), atol=1e-13)
    a, b = oracle_propagator(H, 1.3, p), oracle_propagator(H, 2.1, p)
    ab = oracle_propagator(H, 3.4, p)
    np.testing.assert_allclose(a.U_e.matrix @ b.U_e.matrix, ab.U_e.matrix, atol=1e-10)
    n = np.arange(32)
    np.testing.assert_allclose(a.U_g.matrix, np.diag(np.exp(-1.3j * (n + 0.5))), atol=1e-13)
    assert a.unitarity_error() < 1e-10


def test_ground_branch_never_depends_on_eps():
    ref = exact_propagator(ClockParams.dimensionless(0.0), 4.2, 32).U_g.matrix
    for eps in (1e-3, 0.1, 0.5):
        for variant in dynamics.VARIANTS:
            U_g = Propagator(ClockParams.dimensionless(eps), 32, variant).at(4.2).U_g.matrix
            np.testing.assert_allclose(U_g, ref, atol=1e-12)


def test_exact_reduces_to_free_rotation_at_zero_eps():
    p = ClockParams.dimensionless(0.0, 50)
    n = np.arange(20)
    props = exact_propagator(p, 2.0, 20, frame="lab")
    expected = np.exp(-1j * carrier_phase(50, 2.0)) * np.diag(np.exp(-2j * (n + 0.5)))
    np.testing.assert_allclose(props.U_e.matrix, expected, atol=1e-13)


@pytest.mark.parametrize("eps", [1e-2])
def test_exact_matches_oracle_state_vectors(eps):
    dim = 256
    p = ClockParams.dimensionless(eps, 100)
    oracle = Propagator(p, dim, "oracle")
    exact = Propagator(p, dim, "exact-decomposition")
    states = [vacuum(dim), fock_state(5, dim), general_squeezed_vacuum(1.0, dim=dim)]
    worst = 0.0
    for s in states:
        for wt in np.linspace(0, 50, 20):
            _, oe = oracle.apply_branches(s.amplitudes, s.amplitudes, wt)
            _, xe = exact.apply_branches(s.amplitudes, s.amplitudes, wt)
            worst = max(worst, np.max(np.abs(oe - xe)))
    assert worst < 1e-9


def test_corrupted_squeeze_sign_breaks_oracle_equivalence(monkeypatch):
    assert check_oracle_equivalence(eps_values=(1e-2,), n_times=5, dim=128).passed
    monkeypatch.setattr(dynamics, "squeeze_parameter", lambda eps: math.log1p(-eps) / 4)
    assert not check_oracle_equivalence(eps_values=(1e-2,), n_times=5, dim=128).passed


def test_diagonal_sods_phases():
    p = ClockParams.dimensionless(1e-2, 1e3)
    wt = 3.7
    props = diagonal_sods_propagator(p, wt, 16, frame="lab")
    phase0 = -np.angle(props.U_e.matrix[0, 0])
    expected = p.ratio * wt * (1 - p.eps_m / 4) + 0.5 * wt
    assert (phase0 - expected + math.pi) % (2 * math.pi) - math.pi == pytest.approx(0, abs=1e-10)
    assert np.count_nonzero(props.U_e.matrix - np.diag(np.diag(props.U_e.matrix))) == 0
    # eps_m = 0: pure carrier on top of the trap rotation
    free = diagonal_sods_propagator(ClockParams.dimensionless(0.0, 1e3), wt, 16, frame="lab")
    np.testing.assert_allclose(free.U_e.matrix, np.exp(-1j * carrier_phase(1e3, wt)) * free.U_g.matrix, atol=1e-13)


def test_vacuum_lab_frame_phase():
    p = ClockParams.dimensionless(1e-2, 1e3)
    wt = 2.5
    prop = Propagator(p, 16, "diagonal-sods", frame="lab")
    state = CompositeState(vacuum(16).amplitudes / math.sqrt(2), vacuum(16).amplitudes / math.sqrt(2), "lab")
    red = reduce_to_clock(prop.apply(state, wt))
    expected = -(p.ratio * wt * (1 - p.eps_m / 4))
    assert (red.phase - expected + math.pi) % (2 * math.pi) - math.pi == pytest.approx(0, abs=1e-10)
    assert red.visibility == pytest.approx(1.0)


def test_diagonal_vs_exact_leaks_into_level_two():
    p = ClockParams.dimensionless(1e-2, 1e3)
    worst = 0.0
    for wt in np.linspace(0, 10, 41):
        leak = abs(exact_propagator(p, wt, 64).U_e.matrix[2, 0])
        assert abs(diagonal_sods_propagator(p, wt, 64).U_e.matrix[2, 0]) == 0
        worst = max(worst, leak)
    # |<2|U_e|0>| = sqrt(2) eps |h| / 8 with |h| <= 2
    assert worst <= math.sqrt(2) * 1e-2 * 2 / 8 * 1.01
    assert worst > 0.9 * math.sqrt(2) * 1e-2 * 2 / 8


def test_perturbative_zero_eps_is_diagonal():
    p = ClockParams.dimensionless(0.0, 1e3)
    np.testing.assert_allclose(perturbative_propagator(p, 1.7, 32).U_e.matrix,
                               diagonal_sods_propagator(p, 1.7, 32).U_e.matrix, atol=1e-14)


def test_perturbative_error_is_second_order():
    dev = {}
    for eps in (1e-2, 1e-3):
        p = ClockParams.dimensionless(eps, 1e3)
        dev[eps] = max(np.max(np.abs(perturbative_propagator(p, wt, 64).U_e.matrix[:20, :20]
                                     - exact_propagator(p, wt, 64).U_e.matrix[:20, :20]))
                       for wt in (0.5, 2.0, 5.0))
    assert dev[1e-2] / dev[1e-3] == pytest.approx(100, rel=0.2)


def test_perturbative_level_two_amplitude():
    # composite state (|g> + |e>)|0>/sqrt2: excited block picks up -(eps/8) h(t) on |2>
    for eps in (1e-3, 1e-4):
        p = ClockParams.dimensionless(eps, 1e3)
        lam = p.lam
        for wt in (0.4, 1.9, 6.0):
            state = CompositeState.product(vacuum(16))
            out = Propagator(p, 16, "perturbative").apply(state, wt)
            h = 1 - np.exp(-2j * wt * (1 - eps / 4))
            expected = -(eps / 8) * h * np.exp(-0.5j * lam * wt)
            assert abs(out.block_e[2] - expected) < 5 * eps ** 2


def test_evolve_rules():
    p = ClockParams.dimensionless(1e-2, 1e3)
    dim = 64
    state = CompositeState.product(general_squeezed_vacuum(0.5, dim=dim))
    same = evolve(state, exact_propagator(p, 0.0, dim))
    np.testing.assert_allclose(same.vector(), state.vector(), atol=1e-13)
    two = evolve(evolve(state, exact_propagator(p, 1.1, dim)), exact_propagator(p, 2.2, dim))
    one = evolve(state, exact_propagator(p, 3.3, dim))
    np.testing.assert_allclose(two.vector(), one.vector(), atol=1e-10)
    with pytest.raises(DimensionMismatch):
        evolve(state, exact_propagator(p, 1.0, 32))


def test_norm_drift_over_many_steps():
    p = ClockParams.dimensionless(0.05, 1e3)
    dim = 64
    step = oracle_propagator(build_hamiltonian(p, dim, frame="rotating"), 0.37, p)
    state = CompositeState.product(fock_state(3, dim))
    for _ in range(1000):
        state = evolve(state, step)
    assert abs(state.norm() - 1) < 1e-12


def test_reduce_to_clock_limits():
    v = vacuum(8).amplitudes
    red = reduce_to_clock(CompositeState.product(vacuum(8)))
    assert red.visibility == pytest.approx(1.0)
    ortho = CompositeState(v / math.sqrt(2), fock_state(1, 8).amplitudes / math.sqrt(2))
    assert reduce_to_clock(ortho).visibility == 0.0
    rho = np.trace(red.rho)
    assert rho == pytest.approx(1.0)


def test_reduce_density_matches_pure_and_purity_relation():
    p = ClockParams.dimensionless(0.1, 1e3)
    state = Propagator(p, 128, "exact").apply(CompositeState.product(general_squeezed_vacuum(0.8, dim=128)), 9.0)
    pure = reduce_to_clock(state)
    vec = state.vector()
    mixed = reduce_to_clock(np.outer(vec, vec.conj()))
    np.testing.assert_allclose(mixed.rho, pure.rho, atol=1e-14)
    assert pure.visibility < 1
    assert pure.purity == pytest.approx((1 + pure.visibility ** 2) / 2, abs=1e-12)
    assert np.linalg.eigvalsh(pure.rho).min() > -1e-12


def test_mixed_state_vacuum_limit():
    p = ClockParams.dimensionless(1e-2, 1e3)
    prop = Propagator(p, 32, "exact")
    wt = 7.0
    mixed = mixed_state_evolution(thermal_density(0.0, 32), prop, omega_t=wt)
    pure = reduce_to_clock(prop.apply(CompositeState.product(vacuum(32)), wt))
    assert mixed.rho_eg == pytest.approx(pure.rho_eg, abs=1e-14)


def test_mixed_state_thermal_visibility():
    eps = 0.1
    p = ClockParams.dimensionless(1e-2, 1e3)
    rho = thermal_density(2.0)
    red = mixed_state_evolution(rho, Propagator(p, rho.dim, "diagonal-sods"), omega_t=4 * eps / 1e-2)
    expected = (math.cos(eps) ** 2 + 25 * math.sin(eps) ** 2) ** -0.5
    assert red.visibility == pytest.approx(expected, abs=1e-12)
    assert red.visibility == pytest.approx(0.8983, abs=1e-4)


@pytest.mark.parametrize("variant", dynamics.VARIANTS)
def test_ensemble_and_density_paths_agree(variant):
    p = ClockParams.dimensionless(2e-2, 1e3)
    rho = thermal_density(1.5, 128)
    prop = Propagator(p, 128, variant)
    a = mixed_state_evolution(rho, prop, omega_t=6.0, method="ensemble")
    b = mixed_state_evolution(rho, prop.at(6.0), method="density")
    assert a.rho_eg == pytest.approx(b.rho_eg, abs=1e-12)


def test_non_diagonal_density_uses_full_propagation():
    p = ClockParams.dimensionless(2e-2, 1e3)
    s = general_squeezed_vacuum(0.6, dim=128)
    rho = MotionalDensity(np.outer(s.amplitudes, s.amplitudes.conj()))
    prop = Propagator(p, 128, "exact")
    via_density = mixed_state_evolution(rho, prop, omega_t=5.0)
    via_pure = reduce_to_clock(prop.apply(CompositeState.product(s), 5.0))
    assert via_density.rho_eg == pytest.approx(via_pure.rho_eg, abs=1e-12)
    with pytest.raises(ValueError):
        mixed_state_evolution(rho, prop, omega_t=5.0, method="ensemble")


def test_fock_overlaps_match_dense_product():
    p = ClockParams.dimensionless(5e-2, 1e3)
    for variant in dynamics.VARIANTS:
        prop = Propagator(p, 48, variant)
        props = prop.at(3.3)
        dense = np.diag(props.U_g.matrix.conj().T @ props.U_e.matrix)
        np.testing.assert_allclose(prop.fock_overlaps(3.3), dense, atol=1e-12)


def test_unknown_variant():
    with pytest.raises(ValueError):
        Propagator(ClockParams.dimensionless(0.1), 8, "magic")
