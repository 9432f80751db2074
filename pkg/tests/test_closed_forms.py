from __future__ import annotations

import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from propertime import closed_forms as cf
from propertime.dynamics import ClockParams, CompositeState, Propagator, mixed_state_evolution, reduce_to_clock
from propertime.errors import UnphysicalParameters
from propertime.fock import general_squeezed_vacuum, thermal_density, vacuum
from propertime.protocols import QsodsConfig, run_qsods_protocol


def test_vsods_and_thermal_first_order():
    p = ClockParams.dimensionless(1e-4, 1e3)
    assert cf.vsods(p).fractional_shift == pytest.approx(-p.eps_m / 4)
    assert cf.sods_thermal_first_order(2.0, p).fractional_shift == pytest.approx(-5 * p.eps_m / 4)
    assert cf.shifted_clock_frequency(0, p) == pytest.approx(p.omega_c * (1 - p.eps_m / 4))
    with pytest.raises(UnphysicalParameters):
        cf.sods_thermal_first_order(-1, p)


def test_species_vsods_magnitudes():
    al = ClockParams.from_species("al+")
    assert cf.vsods(al).fractional_shift == pytest.approx(-8.22768e-19, rel=1e-4)


def test_temperature_limit_matches_thermal_at_large_nbar():
    al = ClockParams.from_species("al+")
    nbar = 1e4
    T = nbar * 1.054571817e-34 * al.omega / 1.380649e-23
    assert cf.sods_from_temperature(T, al) == pytest.approx(cf.sods_thermal_first_order(nbar, al).fractional_shift, rel=1e-3)
    with pytest.raises(UnphysicalParameters):
        cf.sods_from_temperature(1.0, ClockParams.dimensionless(0.1))


def test_thermal_exact_examples():
    assert cf.thermal_offdiag_exact(0, 0.0) == pytest.approx(1.0)
    z = cf.thermal_offdiag_exact(1, 0.1)
    assert abs(z) == pytest.approx(0.96237, abs=1e-5)
    assert cmath.phase(z) == pytest.approx(0.292378, abs=1e-6)
    assert cf.thermal_phase_exact(1, 0.1) == pytest.approx(-0.292378, abs=1e-6)


def test_thermal_phase_continuous_past_branch_point():
    eps = np.linspace(0, 3.0, 3001)
    phi = np.array([cf.thermal_phase_exact(2, e) for e in eps])
    assert np.max(np.abs(np.diff(phi))) < 0.05
    assert phi[-1] < -math.pi / 2


@settings(max_examples=40, deadline=None)
@given(nbar=st.floats(0, 20), eps=st.floats(0, 0.3))
def test_thermal_exact_matches_simulation(nbar, eps):
    if nbar > 8:
        nbar = round(nbar)
    rho = thermal_density(nbar)
    eps_c = 1e-2
    red = mixed_state_evolution(rho, Propagator(ClockParams.dimensionless(eps_c, 1e3), rho.dim, "diagonal-sods"),
                                omega_t=4 * eps / eps_c)
    assert abs(2 * red.rho_eg - cf.thermal_offdiag_exact(nbar, eps)) < 1e-8


def test_high_t_limit():
    r = cf.thermal_high_T(50, 0.01)
    assert r.regime == "high-T"
    assert r.visibility == pytest.approx(abs(cf.thermal_offdiag_exact(50, 0.01)), rel=0.02)
    assert r.phase_offset == pytest.approx(cf.thermal_phase_exact(50, 0.01), rel=0.02)
    assert math.isnan(r.fractional_shift)
    assert cf.thermal_high_T(50, 0.01, eps_m=1e-6).fractional_shift < 0
    assert abs(cf.thermal_offdiag_high_T(50, 0.01)) == pytest.approx(r.visibility)


def test_semiclassical_reproduces_first_order_vacuum_phase():
    eps_m, wct = 1e-6, 1e3
    z = cf.semiclassical_offdiag(cf.vacuum_v2_over_c2(eps_m), wct)
    assert -cmath.phase(z) == pytest.approx(-eps_m * wct / 4)
    z2 = cf.semiclassical_offdiag(cf.thermal_v2_over_c2(3, eps_m), wct)
    assert -cmath.phase(z2) == pytest.approx(-7 * eps_m * wct / 4)
    assert abs(z) == pytest.approx(1.0)


def test_squeezed_examples():
    assert cf.squeezed_offdiag_exact(0.0, 0.5) == pytest.approx(cmath.exp(0.125j))
    assert abs(cf.squeezed_offdiag_exact(0.0, 0.5)) == pytest.approx(1.0)
    assert cf.visibility_squeezed(1.0, 0.0) == pytest.approx(1.0)
    assert cf.visibility_squeezed(0.0, 1.0) == pytest.approx(1.0)


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 1.5])
def test_squeezed_exact_matches_simulation(r):
    eps_c = 1e-2
    s = general_squeezed_vacuum(r)
    prop = Propagator(ClockParams.dimensionless(eps_c, 1e3), s.dim, "diagonal-sods")
    for wt in (0.0, 3.0, 40.0, 250.0):
        rho_eg = reduce_to_clock(prop.apply(CompositeState.product(s), wt)).rho_eg
        assert abs(2 * rho_eg - cf.squeezed_offdiag_exact(r, eps_c * wt)) < 1e-8


def test_squeezed_branch_is_continuous():
    thetas = np.linspace(0, 20, 4001)
    z = np.array([cf.squeezed_offdiag_exact(1.5, th) for th in thetas])
    assert np.max(np.abs(np.diff(z))) < 0.05


def test_approx_visibility_small_theta_and_breakdown():
    r, theta = 0.5, 1e-3
    assert 1 - cf.visibility_squeezed(r, theta, "approx") == pytest.approx(1 - cf.visibility_squeezed(r, theta), rel=1e-3)
    with pytest.warns(cf.RegimeWarning):
        v = cf.visibility_squeezed(3.0, 0.5, "approx")
    assert v == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cf.visibility_squeezed(0.5, 0.1, "approx")
    with pytest.raises(ValueError):
        cf.visibility_squeezed(0.5, 0.1, "other")


def test_sqsods_species_numbers():
    al = ClockParams.from_species("al+")
    r = 2.26
    res = cf.sqsods(r, al, t=1.0)
    assert al.theta(1.0) == pytest.approx(0.0232181, abs=1e-7)
    assert res.fractional_shift == pytest.approx(-3.77842e-17, rel=1e-4)
    assert res.visibility == pytest.approx(0.939404, abs=1e-5)
    assert cf.visibility_squeezed(r, al.theta(1.0), "approx") == pytest.approx(0.928978, abs=1e-5)
    assert cf.visibility_squeezed(r, al.theta(1.0), "approx") == pytest.approx(0.93, abs=0.005)
    b = ClockParams.from_species("b+")
    assert cf.sqsods(r, b, t=1.0).visibility == pytest.approx(0.76, abs=0.01)
    assert cf.squeezed_breakdown(r, b.theta(1.0))
    with pytest.warns(cf.RegimeWarning):
        v_b = cf.visibility_squeezed(r, b.theta(1.0), "approx")
    assert abs(v_b - 0.755957) > 0.2


def test_sqsods_reduces_to_vsods():
    p = ClockParams.dimensionless(1e-3, 1e3)
    assert cf.sqsods(0.0, p).fractional_shift == pytest.approx(cf.vsods(p).fractional_shift)


def test_ground_state_full_matches_exact_simulation():
    eps_c = 5e-2
    prop = Propagator(ClockParams.dimensionless(eps_c, 1e3), 64, "exact-decomposition")
    for wt in np.linspace(0, 30, 13):
        rho_eg = reduce_to_clock(prop.apply(CompositeState.product(vacuum(64)), wt)).rho_eg
        assert abs(2 * rho_eg - cf.ground_state_offdiag_full(eps_c, wt)) < 1e-12


def test_ground_state_series_second_order():
    wt = np.linspace(0.1, 20, 50)
    dev = {}
    for eps in (1e-2, 1e-3):
        exact = np.array([cf.ground_state_phase_exact(eps, w) for w in wt])
        dev[eps] = np.max(np.abs(exact - cf.ground_state_phase_series(eps, wt)))
        vis = np.array([abs(cf.ground_state_offdiag_full(eps, w)) for w in wt])
        assert np.max(np.abs(vis - cf.ground_state_visibility_series(eps, wt))) < 5 * eps ** 3
    assert math.log(dev[1e-2] / dev[1e-3]) / math.log(10) == pytest.approx(3, abs=0.3)


def test_ground_state_fractional_shift():
    p = ClockParams.dimensionless(1e-2, 1e3)
    res = cf.ground_state_fractional_shift_full(p.eps_c, p, 10.0)
    expected = -p.eps_m / 4 - p.eps_m * p.eps_c / 16 + p.eps_m * p.eps_c * math.sin(20) / 320
    assert res.fractional_shift == pytest.approx(expected)
    with pytest.raises(ValueError):
        cf.ground_state_fractional_shift_full(p.eps_c, p, 0.0)


def test_displacement_offset_examples():
    assert cf.displacement_arg_offset(0.0) == 0.0
    assert cf.displacement_arg_offset(math.sqrt(2)) == pytest.approx(math.pi / 2)
    assert cf.displacement_arg_offset(2.0) == pytest.approx(math.atan2(4 * math.sqrt(2), -2))


def test_success_probability_examples():
    assert cf.qsods_success_probability(0.0) == pytest.approx(0.5)
    assert cf.qsods_success_probability(2.0) == pytest.approx(1.5 * math.exp(-2))
    assert cf.qsods_success_probability(2.0) == pytest.approx(0.20300, abs=1e-4)
    t = np.linspace(0, 2 * math.pi, 2001)[:-1]
    pw = cf.qsods_success_probability(1.0, 1e-2, "pointwise", t)
    assert np.mean(pw) == pytest.approx(cf.qsods_success_probability(1.0, 1e-2, "averaged"), abs=1e-12)
    with pytest.raises(ValueError):
        cf.qsods_success_probability(1.0, 1e-2, "pointwise")


def test_naive_projection_matches_simulation():
    eps_c = 1e-3
    t = np.linspace(0, 4 * math.pi, 129)
    res = run_qsods_protocol(QsodsConfig(0.0, eps_c, t, projector="02"))
    assert np.max(np.abs(res.phase_unwrapped - cf.naive_projection_phase(eps_c, t))) < 2e-5


def _harmonic_coefficients(beta, eps_c, t):
    res = run_qsods_protocol(QsodsConfig(beta, eps_c, t))
    y = (res.phase_unwrapped - cf.displacement_arg_offset(beta) + eps_c * t / 4) / eps_c
    M = np.column_stack([np.sin(t) ** 2, np.sin(2 * t)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    return coef


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_displaced_phase_harmonic_coefficients(beta):
    t = np.linspace(0, 4 * math.pi, 257)
    a, b = _harmonic_coefficients(beta, 1e-5, t)
    assert a == pytest.approx(-beta / (math.sqrt(2) * (2 + beta ** 2)), abs=1e-4)
    assert b == pytest.approx(beta ** 2 * (1 - beta ** 2 / 2) / (8 * (2 + beta ** 2)), abs=1e-4)
    # a leading 3 in place of 1 in the sin(2 wt) coefficient is excluded
    assert abs(b - beta ** 2 * (3 - beta ** 2 / 2) / (8 * (2 + beta ** 2))) > 0.01


def test_leading_offdiag_phase_matches_protocol_phase():
    t = np.linspace(0, 10, 11)
    z = cf.offdiag_leading_displaced(1.0, 1e-6, t)
    assert np.allclose(-np.angle(z), cf.qsods_protocol_phase(1.0, 1e-6, t), atol=1e-10)


def test_qsods_constant_phase_is_average_of_sin_squared_term():
    a = -1.0 / (math.sqrt(2) * 3)
    assert cf.qsods_constant_phase(1.0, 1e-3) == pytest.approx(a * 1e-3 / 2)


def test_shift_result_validation():
    with pytest.raises(ValueError):
        cf.ShiftResult(0.0, regime="made-up")
    with pytest.raises(ValueError):
        cf.ShiftResult(0.0, visibility=1.5)
