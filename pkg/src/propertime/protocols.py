"""Ramsey runs and the displacement-and-projection readout.

Ramsey pulses are ideal and instantaneous, so the final readout is the clock
coherence rho_eg itself. Phases in results are the clock phase phi of
``2 rho_eg = V exp(-i (omega_c t + phi))`` (rotating frame), unwrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import FitResult, fit_fractional_shift, unwrap_phase
from .dynamics import (
    ClockParams,
    CompositeState,
    Propagator,
    mixed_state_evolution,
    reduce_to_clock,
    variant_name,
)
from .errors import InsufficientData, InvalidWitnessInput, TruncationOverflow
from .fock import (
    START_DIM,
    TRUNCATION_TOL,
    MotionalDensity,
    MotionalState,
    dim_cap,
    fock_state,
    general_squeezed_vacuum,
    hermitian_expm,
    quadratures,
    tail_weight,
    thermal_density,
    vacuum,
)

PREP_KINDS = ("vacuum", "fock", "thermal", "squeezed")
MIN_SUCCESS_PROB = 1e-6
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Prep:
    """Initial motional state recipe."""

    kind: str = "vacuum"
    k: int = 0
    nbar: float = 0.0
    r: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in PREP_KINDS:
            raise ValueError(f"prep kind must be one of {PREP_KINDS}, got {self.kind!r}")
        if self.k < 0 or self.nbar < 0 or self.r < 0:
            raise ValueError("prep parameters must be non-negative")

    @property
    def pure(self) -> bool:
        return self.kind != "thermal"

    def build(self, dim: int | None = None):
        """MotionalState (pure kinds) or MotionalDensity (thermal)."""
        if self.kind == "thermal":
            return thermal_density(self.nbar, dim)
        if self.kind == "squeezed":
            return general_squeezed_vacuum(self.r, self.theta, dim)
        d = START_DIM if dim is None else dim
        if dim is None:
            while d <= 2 * self.k:
                d *= 2
        return vacuum(d) if self.kind == "vacuum" else fock_state(self.k, d)

    def describe(self) -> str:
        if self.kind == "fock":
            return f"fock(k={self.k})"
        if self.kind == "thermal":
            return f"thermal(nbar={self.nbar})"
        if self.kind == "squeezed":
            return f"squeezed(r={self.r}, theta={self.theta})"
        return "vacuum"


def _check_grid(omega_t) -> np.ndarray:
    t = np.asarray(omega_t, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("omega_t grid must be a non-empty 1-d sequence")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("omega_t grid must be strictly increasing")
    if t[0] < 0:
        raise ValueError("omega_t grid must start at >= 0")
    return t


@dataclass(frozen=True)
class RamseyConfig:
    params: ClockParams
    prep: Prep = field(default_factory=Prep)
    omega_t: tuple = ()
    variant: str = "exact-decomposition"
    dim: int | None = None
    window: int | None = None  # trap periods for the averaged phase

    def __post_init__(self):
        object.__setattr__(self, "omega_t", tuple(float(x) for x in _check_grid(self.omega_t)))
        object.__setattr__(self, "variant", variant_name(self.variant))


@dataclass(frozen=True)
class QsodsConfig:
    beta: float
    eps_c: float
    omega_t: tuple = ()
    projector: object = "01"  # "01", "02" or a normalized MotionalState
    window: int = 1
    variant: str = "exact-decomposition"
    dim: int = 64
    ratio: float = 1e3

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if isinstance(self.projector, str) and self.projector not in ("01", "02"):
            raise ValueError("projector must be '01', '02' or a MotionalState")
        if self.window < 1:
            raise ValueError("averaging window must be at least one trap period")
        v = variant_name(self.variant)
        if v not in ("exact-decomposition", "oracle"):
            raise ValueError("the projection protocol needs the oracle or exact-decomposition propagator")
        object.__setattr__(self, "variant", v)
        object.__setattr__(self, "omega_t", tuple(float(x) for x in _check_grid(self.omega_t)))

    @property
    def params(self) -> ClockParams:
        return ClockParams.dimensionless(self.eps_c, self.ratio)

    def projector_state(self, dim: int) -> MotionalState:
        if isinstance(self.projector, MotionalState):
            if self.projector.dim > dim:
                raise ValueError("custom projector is larger than the protocol dimension")
            v = np.zeros(dim, dtype=complex)
            v[: self.projector.dim] = self.projector.amplitudes
            return MotionalState(v)
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        v[1 if self.projector == "01" else 2] = 1.0
        return MotionalState(v / math.sqrt(2))


@dataclass(frozen=True)
class ProtocolSummary:
    fit: FitResult | None
    averaged_phase: float | None
    mean_success_prob: float
    min_visibility: float
    max_witness: float | None
    flagged_points: int

    def to_dict(self) -> dict:
        return {
            "fit": self.fit.to_dict() if self.fit else None,
            "fractional_shift": self.fit.fractional_shift if self.fit else None,
            "averaged_phase": self.averaged_phase,
            "mean_success_prob": self.mean_success_prob,
            "min_visibility": self.min_visibility,
            "max_witness": self.max_witness,
            "flagged_points": self.flagged_points,
        }


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    omega_t: np.ndarray
    rho_eg: np.ndarray
    visibility: np.ndarray
    phase_unwrapped: np.ndarray
    success_prob: np.ndarray
    flagged: np.ndarray
    summary: ProtocolSummary
    protocol: str = "ramsey"
    pure_prep: bool = True

    def rows(self):
        for i in range(len(self.omega_t)):
            yield (self.omega_t[i], self.rho_eg[i].real, self.rho_eg[i].imag, self.visibility[i],
                   self.phase_unwrapped[i], self.success_prob[i])


def time_average_phase(omega_t, phase, window: int, samples_per_period: int = 32) -> float:
    """Constant part of a clock phase over ``window`` trap periods from the grid start.

    Fits phase = c0 + s t + c cos(2t) + d sin(2t) on the window and returns
    the mean of the series after removing the linear and harmonic parts,
    which equals c0: sin(2t) terms drop out and a sin^2(t) term keeps its
    mean of one half.
    """
    t = np.asarray(omega_t, dtype=float)
    y = np.asarray(phase, dtype=float)
    if t.shape != y.shape:
        raise InsufficientData("time grid and phase series differ in length")
    if window < 1:
        raise InsufficientData("window must be at least one period")
    span = window * TWO_PI
    if t.size == 0 or t[-1] - t[0] < span * (1 - 1e-9):
        raise InsufficientData(f"series covers less than {window} trap period(s)")
    mask = t <= t[0] + span * (1 + 1e-12)
    if mask.sum() < samples_per_period * window:
        raise InsufficientData(f"need >= {samples_per_period} samples per trap period")
    tw, yw = t[mask], y[mask]
    if not np.all(np.isfinite(yw)):
        raise InsufficientData("window contains flagged points")
    M = np.column_stack([np.ones_like(tw), tw, np.cos(2 * tw), np.sin(2 * tw)])
    coef, *_ = np.linalg.lstsq(M, yw, rcond=None)
    detrended = yw - M[:, 1:] @ coef[1:]
    return float(np.mean(detrended))


def _summary(omega_t, phase, vis, prob, flagged, params, window, pure, protocol):
    ok = ~flagged
    fit = None
    if ok.sum() >= 3:
        fit = fit_fractional_shift(omega_t[ok], phase[ok], params)
    averaged = None
    if window:
        try:
            averaged = time_average_phase(omega_t, phase, window)
        except InsufficientData:
            averaged = None
    witness = float(np.max(1 - vis[ok])) if (pure and protocol == "ramsey" and ok.any()) else None
    return ProtocolSummary(
        fit=fit,
        averaged_phase=averaged,
        mean_success_prob=float(np.mean(prob)),
        min_visibility=float(np.min(vis[ok])) if ok.any() else float("nan"),
        max_witness=witness,
        flagged_points=int(flagged.sum()),
    )


def _unwrap_valid(phase: np.ndarray, flagged: np.ndarray) -> np.ndarray:
    out = np.full_like(phase, np.nan)
    ok = ~flagged
    if ok.any():
        out[ok] = unwrap_phase(phase[ok])
    return out


def run_ramsey(config: RamseyConfig) -> ProtocolResult:
    """Evolve (|g> + |e>)|motion>/sqrt(2) and read rho_eg on every grid point."""
    prep = config.prep.build(config.dim)
    dim = prep.dim
    prop = Propagator(config.params, dim, config.variant)
    t = np.asarray(config.omega_t, dtype=float)
    rho = np.empty(t.size, dtype=complex)
    if isinstance(prep, MotionalDensity):
        for i, wt in enumerate(t):
            rho[i] = mixed_state_evolution(prep, prop, omega_t=wt).rho_eg
    else:
        start = CompositeState.product(prep)
        for i, wt in enumerate(t):
            rho[i] = reduce_to_clock(prop.apply(start, wt)).rho_eg
    vis = np.minimum(2 * np.abs(rho), 1.0)
    phase = unwrap_phase(-np.angle(rho))
    prob = np.ones(t.size)
    flagged = np.zeros(t.size, dtype=bool)
    summary = _summary(t, phase, vis, prob, flagged, config.params, config.window, config.prep.pure, "ramsey")
    return ProtocolResult(t, rho, vis, phase, prob, flagged, summary, "ramsey", config.prep.pure)


def entanglement_witness(result: ProtocolResult) -> tuple[np.ndarray, np.ndarray]:
    """(1 - V, clock purity (1 + V^2)/2) for a pure-state Ramsey run.

    For a pure global state V < 1 certifies clock-motion entanglement; for a
    mixed motional input it does not, and the call is refused.
    """
    if result.protocol != "ramsey":
        raise InvalidWitnessInput("the witness applies to Ramsey runs, not conditional projected states")
    if not result.pure_prep:
        raise InvalidWitnessInput("visibility loss does not witness entanglement for a mixed motional state")
    v = result.visibility
    return 1.0 - v, (1.0 + v ** 2) / 2


def state_dependent_displacement(beta: float, dim: int, levels: int = 3, tol: float = TRUNCATION_TOL):
    """(exp(+i beta X), exp(-i beta X)): the ground- and excited-branch kicks.

    The lowest ``levels`` columns must stay inside the truncation.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    X, _ = quadratures(dim)
    U_e = hermitian_expm(X, beta)
    U_g = hermitian_expm(X, -beta)
    leak = max(tail_weight(U_e.matrix[:, k]) for k in range(min(levels, dim)))
    if leak > tol:
        need = 2 * dim
        while need <= (1 << 16):
            Xn, _ = quadratures(need)
            if max(tail_weight(hermitian_expm(Xn, beta).matrix[:, k]) for k in range(levels)) <= tol:
                break
            need *= 2
        raise TruncationOverflow(f"displacement beta={beta} leaks {leak:.3g} at dim={dim}", required_dim=need)
    return U_g, U_e


def _qsods_point(prop: Propagator, start_g, start_e, w_g, w_e, wt):
    g, e = prop.apply_branches(start_g, start_e, wt)
    c_g = np.dot(w_g, g)
    c_e = np.dot(w_e, e)
    return c_g, c_e


def run_qsods_protocol(config: QsodsConfig) -> ProtocolResult:
    """Ground-state Ramsey, state-dependent kick, projection of the motion.

    Per grid point the conditional clock amplitudes are
    c_g = <proj| e^{+i beta X} U_g |0> / sqrt 2 and
    c_e = <proj| e^{-i beta X} U_e |0> / sqrt 2; the success probability is
    |c_g|^2 + |c_e|^2 and the renormalized state gives rho_eg. Points with
    probability below 1e-6 are flagged and carry NaN phase.
    """
    dim = config.dim
    if dim > dim_cap():
        raise TruncationOverflow(f"protocol dim {dim} exceeds the dim cap {dim_cap()}", required_dim=dim)
    proj = config.projector_state(dim).amplitudes
    D_g, D_e = state_dependent_displacement(config.beta, dim)
    # row vectors <proj| D
    w_g = proj.conj() @ D_g.matrix / math.sqrt(2)
    w_e = proj.conj() @ D_e.matrix / math.sqrt(2)
    prop = Propagator(config.params, dim, config.variant)
    v0 = vacuum(dim).amplitudes
    t = np.asarray(config.omega_t, dtype=float)
    rho = np.empty(t.size, dtype=complex)
    prob = np.empty(t.size)
    for i, wt in enumerate(t):
        c_g, c_e = _qsods_point(prop, v0, v0, w_g, w_e, wt)
        p = abs(c_g) ** 2 + abs(c_e) ** 2
        prob[i] = p
        rho[i] = c_e * np.conj(c_g) / p if p > 0 else np.nan
    flagged = prob < MIN_SUCCESS_PROB
    rho_out = np.where(flagged, np.nan + 0j, rho)
    vis = np.minimum(2 * np.abs(rho_out), 1.0)
    phase = _unwrap_valid(-np.angle(rho_out), flagged)
    summary = _summary(t, phase, vis, prob, flagged, config.params, config.window, True, "qsods")
    return ProtocolResult(t, rho_out, vis, phase, prob, flagged, summary, "qsods", True)


def projector_family_probabilities(config: QsodsConfig, omega_t: float, basis: np.ndarray | None = None) -> np.ndarray:
    """Success probability for every member of an orthonormal projector basis.

    Defaults to the Fock basis; the probabilities of a complete family sum to
    one up to truncation.
    """
    dim = config.dim
    B = np.eye(dim, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    D_g, D_e = state_dependent_displacement(config.beta, dim)
    prop = Propagator(config.params, dim, config.variant)
    v0 = vacuum(dim).amplitudes
    g, e = prop.apply_branches(v0, v0, omega_t)
    a_g = B.conj().T @ (D_g.matrix @ g) / math.sqrt(2)
    a_e = B.conj().T @ (D_e.matrix @ e) / math.sqrt(2)
    return np.abs(a_g) ** 2 + np.abs(a_e) ** 2
