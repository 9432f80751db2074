"""Analytic predictions for frequency shifts, phases and visibilities.

All functions take dimensionless inputs. Off-diagonal elements are returned
as ``2 rho_eg`` in the package convention (see :mod:`propertime.dynamics`):

    2 rho_eg = V exp(-i (omega_c t + phi))

The ``omega_c_t_mod`` argument carries the carrier phase (omega_c t mod 2 pi,
zero in the rotating frame). ``phase_offset`` in a :class:`ShiftResult` is the
clock phase phi, so a redshift gives a negative value growing with time.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import constants
from .dynamics import ClockParams, rotation_factor, squeeze_parameter
from .errors import UnphysicalParameters

REGIMES = ("first-order", "exact", "high-T", "time-averaged")
SQRT2 = math.sqrt(2.0)


class RegimeWarning(UserWarning):
    """An approximate formula is being used outside its range of validity."""


@dataclass(frozen=True)
class ShiftResult:
    fractional_shift: float
    phase_offset: float = 0.0
    visibility: float | None = None
    regime: str = "first-order"

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")
        if self.visibility is not None and not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility {self.visibility} outside [0, 1]")


def _carrier(omega_c_t_mod: float) -> complex:
    return cmath.exp(-1j * omega_c_t_mod)


def _nonneg(name, value):
    if value < 0:
        raise UnphysicalParameters(f"{name} must be >= 0, got {value}")


# -- thermal and vacuum shifts ------------------------------------------------

def shifted_clock_frequency(n: int, params: ClockParams) -> float:
    """omega_c'(n) = omega_c (1 - eps_m (2n + 1)/4)."""
    if n < 0:
        raise ValueError("Fock level must be >= 0")
    return params.omega_c * (1.0 - params.eps_m * (2 * n + 1) / 4)


def sods_thermal_first_order(nbar: float, params: ClockParams) -> ShiftResult:
    """Delta nu / nu = -eps_m (2 nbar + 1)/4."""
    _nonneg("nbar", nbar)
    return ShiftResult(-params.eps_m * (2 * nbar + 1) / 4, regime="first-order")


def vsods(params: ClockParams) -> ShiftResult:
    """Zero-point shift, the nbar = 0 member of the thermal formula."""
    return sods_thermal_first_order(0, params)


def sods_from_temperature(temperature: float, params: ClockParams) -> float:
    """High-temperature classical limit -k_B T / (2 m c^2)."""
    if params.mass is None:
        raise UnphysicalParameters("a physical mass is needed for a temperature-based shift")
    return -constants.K_B * temperature / (2 * params.mass * constants.C_LIGHT ** 2)


def thermal_offdiag_exact(nbar: float, eps: float, omega_c_t_mod: float = 0.0) -> complex:
    """2 rho_eg for a thermal state, eps = eps_c omega t / 4.

    Equal to exp(i atan2((2 nbar + 1) sin eps, cos eps)) / sqrt(cos^2 eps +
    (2 nbar + 1)^2 sin^2 eps) times the carrier.
    """
    _nonneg("nbar", nbar)
    k = 2 * nbar + 1
    return _carrier(omega_c_t_mod) / complex(math.cos(eps), -k * math.sin(eps))


def thermal_phase_exact(nbar: float, eps: float) -> float:
    """Clock phase of the thermal state, continuous in eps from 0."""
    return -math.atan2((2 * nbar + 1) * math.sin(eps), math.cos(eps))


def thermal_offdiag_high_T(nbar: float, eps: float, omega_c_t_mod: float = 0.0) -> complex:
    return _carrier(omega_c_t_mod) * cmath.exp(1j * math.atan(2 * eps * nbar)) / math.sqrt(1 + 4 * (eps * nbar) ** 2)


def thermal_high_T(nbar: float, eps: float, eps_m: float | None = None) -> ShiftResult:
    """Large-nbar limit: V = 1/sqrt(1 + 4 eps^2 nbar^2), phi = -atan(2 eps nbar).

    With ``eps_m`` the instantaneous fractional shift d phi / d(omega_c t) is
    filled in; otherwise it is NaN.
    """
    _nonneg("nbar", nbar)
    x = 2 * eps * nbar
    shift = float("nan") if eps_m is None else -eps_m * nbar / (2 * (1 + x * x))
    return ShiftResult(shift, -math.atan(x), 1.0 / math.sqrt(1 + x * x), "high-T")


# -- semiclassical proper time -----------------------------------------------

def vacuum_v2_over_c2(eps_m: float) -> float:
    """<v^2>/c^2 in the motional ground state (= eps_m <P^2> with <P^2> = 1/2)."""
    return eps_m / 2


def thermal_v2_over_c2(nbar: float, eps_m: float) -> float:
    return eps_m * (2 * nbar + 1) / 2


def semiclassical_offdiag(mean_v2_over_c2: float, omega_c_t: float, omega_c_t_mod: float | None = None) -> complex:
    """2 rho_eg from a classically averaged proper time: exp(-i omega_c t (1 - <v^2>/2c^2)).

    ``omega_c_t`` scales the shift; the carrier uses ``omega_c_t_mod`` when
    given (defaults to 0, the rotating frame).
    """
    _nonneg("<v^2>/c^2", mean_v2_over_c2)
    mod = 0.0 if omega_c_t_mod is None else omega_c_t_mod
    return _carrier(mod) * cmath.exp(0.5j * omega_c_t * mean_v2_over_c2)


# -- squeezed vacuum ----------------------------------------------------------

def squeezed_offdiag_exact(r: float, theta: float, omega_c_t_mod: float = 0.0) -> complex:
    """2 rho_eg for a squeezed vacuum, theta = eps_m omega_c t.

    exp(i theta/4) / sqrt(cosh^2 r - exp(i theta) sinh^2 r), principal root
    (its argument always has real part >= 1, so the root is continuous).
    """
    _nonneg("r", r)
    denom = math.cosh(r) ** 2 - cmath.exp(1j * theta) * math.sinh(r) ** 2
    return _carrier(omega_c_t_mod) * cmath.exp(0.25j * theta) / cmath.sqrt(denom)


def squeezed_breakdown(r: float, theta: float) -> bool:
    """True when the small-theta visibility expansion is no longer trustworthy."""
    return 0.5 * theta * math.cosh(2 * r) >= 1.0


def visibility_squeezed(r: float, theta: float, mode: str = "exact") -> float:
    """|2 rho_eg| for a squeezed vacuum.

    ``mode="approx"`` gives 1 - (theta^2/16) sinh^2(2r), floored at 0, and
    emits :class:`RegimeWarning` when (theta/2) cosh(2r) >= 1.
    """
    _nonneg("r", r)
    if mode == "exact":
        return abs(squeezed_offdiag_exact(r, theta))
    if mode != "approx":
        raise ValueError("mode must be 'exact' or 'approx'")
    if squeezed_breakdown(r, theta):
        warnings.warn(f"visibility expansion breaks down at r={r}, theta={theta}", RegimeWarning, stacklevel=2)
    return max(0.0, 1.0 - theta ** 2 / 16 * math.sinh(2 * r) ** 2)


def sqsods(r: float, params: ClockParams, t: float | None = None) -> ShiftResult:
    """Squeezing-enhanced shift -(eps_m/4) cosh(2r).

    Given a time ``t`` (seconds for physical parameters, units of 1/omega
    for dimensionless ones) the exact visibility and clock phase are filled
    in as well.
    """
    _nonneg("r", r)
    shift = -params.eps_m / 4 * math.cosh(2 * r)
    if t is None:
        return ShiftResult(shift, regime="first-order")
    theta = params.theta(t)
    z = squeezed_offdiag_exact(r, theta)
    return ShiftResult(shift, -cmath.phase(z), min(1.0, abs(z)), "first-order")


# -- exact ground-state evolution --------------------------------------------

def ground_state_offdiag_full(eps_c: float, omega_t: float, omega_c_t_mod: float = 0.0) -> complex:
    """2 rho_eg for the motional ground state under the full propagator."""
    zeta = squeeze_parameter(eps_c)
    lam = rotation_factor(eps_c)
    lam_minus_1 = -eps_c / (1 + lam)
    denom = math.cosh(zeta) ** 2 - cmath.exp(-2j * lam * omega_t) * math.sinh(zeta) ** 2
    return _carrier(omega_c_t_mod) * cmath.exp(-0.5j * omega_t * lam_minus_1) / cmath.sqrt(denom)


def ground_state_visibility_series(eps_c: float, omega_t) -> np.ndarray | float:
    """V = 1 - (eps_c^2/16) sin^2(omega t), to second order."""
    return 1.0 - eps_c ** 2 / 16 * np.sin(omega_t) ** 2


def ground_state_phase_series(eps_c: float, omega_t) -> np.ndarray | float:
    """phi = -eps_c wt/4 - eps_c^2 (wt/16 - sin(2 wt)/32), to second order."""
    return -eps_c * omega_t / 4 - eps_c ** 2 * (omega_t / 16 - np.sin(2 * omega_t) / 32)


def ground_state_phase_exact(eps_c: float, omega_t: float) -> float:
    return -cmath.phase(ground_state_offdiag_full(eps_c, omega_t))


def ground_state_fractional_shift_full(eps_c: float, params: ClockParams, t: float) -> ShiftResult:
    """phi / (omega_c t) to second order in eps_c for the ground state.

    -eps_m/4 - eps_m eps_c/16 + eps_m eps_c sin(2 wt) / (32 wt).
    """
    wt = params.omega * t
    if wt <= 0:
        raise ValueError("t must be positive")
    em = params.eps_m
    shift = -em / 4 - em * eps_c / 16 + em * eps_c * math.sin(2 * wt) / (32 * wt)
    phase = float(ground_state_phase_series(eps_c, wt))
    vis = float(ground_state_visibility_series(eps_c, wt))
    return ShiftResult(shift, phase, vis, "exact")


# -- displacement-and-projection protocol -------------------------------------

def naive_projection_phase(eps_c: float, omega_t):
    """Clock phase after projecting the motion onto (|0> + |2>)/sqrt(2)."""
    return -omega_t * eps_c / 4 + eps_c / (4 * SQRT2) * np.sin(2 * omega_t * (1 - eps_c / 4))


def displacement_arg_offset(beta: float) -> float:
    """arg(2 + 2 sqrt(2) i beta - beta^2): the eps-independent phase of the displaced readout."""
    return cmath.phase(complex(2 - beta * beta, 2 * SQRT2 * beta))


def _qsods_coefficients(beta: float) -> tuple[float, float]:
    # phi = ... + a eps sin^2(wt) + b eps sin(2 wt)
    a = -beta / (SQRT2 * (2 + beta * beta))
    b = beta * beta * (1 - beta * beta / 2) / (8 * (2 + beta * beta))
    return a, b


def qsods_protocol_phase(beta: float, eps_c: float, omega_t):
    """Clock phase after displacement and projection onto (|0> + |1>)/sqrt(2).

    First order in eps_c. The sin(2 wt) coefficient is
    beta^2 (1 - beta^2/2) / (8 (2 + beta^2)), as obtained by expanding the
    projected amplitudes directly.
    """
    _nonneg("beta", beta)
    a, b = _qsods_coefficients(beta)
    return (-omega_t * eps_c / 4 + displacement_arg_offset(beta)
            + a * eps_c * np.sin(omega_t) ** 2 + b * eps_c * np.sin(2 * omega_t))


def qsods_constant_phase(beta: float, eps_c: float) -> float:
    """Time average of the sin^2 term: -beta eps_c / (2 sqrt(2) (2 + beta^2))."""
    _nonneg("beta", beta)
    return -beta * eps_c / (2 * SQRT2 * (2 + beta * beta))


def offdiag_leading_displaced(beta: float, eps_c: float, omega_t, omega_c_t_mod: float = 0.0):
    """2 rho_eg of the conditional clock state to first order in eps_c (1 + i x form)."""
    _nonneg("beta", beta)
    a, b = _qsods_coefficients(beta)
    x = omega_t * eps_c / 4 - a * eps_c * np.sin(omega_t) ** 2 - b * eps_c * np.sin(2 * omega_t)
    return _carrier(omega_c_t_mod) * cmath.exp(-1j * displacement_arg_offset(beta)) * (1 + 1j * x)


def qsods_success_probability(beta: float, eps_c: float = 0.0, mode: str = "leading", omega_t=None):
    """Probability that the motional projection onto (|0> + |1>)/sqrt(2) succeeds.

    ``leading``: (2 + beta^2)/4 exp(-beta^2/2).
    ``pointwise``: adds the first-order correction
        -eps_c exp(-beta^2/2) [beta^2 (1 - beta^2/2) sin^2(wt)/16 + beta sin(2 wt)/(8 sqrt 2)].
    ``averaged``: time average of ``pointwise``.
    """
    _nonneg("beta", beta)
    g = math.exp(-beta * beta / 2)
    p0 = (2 + beta * beta) / 4 * g
    if mode == "leading":
        return p0
    c2 = beta * beta * (1 - beta * beta / 2) / 16
    if mode == "averaged":
        return p0 - eps_c * g * c2 / 2
    if mode != "pointwise":
        raise ValueError("mode must be leading, averaged or pointwise")
    if omega_t is None:
        raise ValueError("pointwise mode needs omega_t")
    return p0 - eps_c * g * (c2 * np.sin(omega_t) ** 2 + beta * np.sin(2 * omega_t) / (8 * SQRT2))
