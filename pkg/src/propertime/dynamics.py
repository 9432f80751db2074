"""Clock x motion dynamics under the mass-energy coupled trap Hamiltonian.

Everything runs in dimensionless units: energies in units of hbar*omega and
time as ``omega_t`` (= omega * t). The clock carrier exp(-i omega_c t) is
dropped by default ("rotating" frame); the lab frame re-attaches it through
:func:`carrier_phase`, which reduces omega_c*t modulo 2 pi in extended
precision so a physical-scale product such as 1e16 rad is still resolved.

Sign conventions:

* ``rho_eg = <e|rho|g>``, so a clock prepared in (|g> + |e>)/sqrt(2) and left
  alone has ``2 rho_eg = exp(-i omega_c t)``.
* the *clock phase* phi is defined by ``2 rho_eg = V exp(-i (omega_c t + phi))``;
  a redshift (clock running slow) makes phi decrease with time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import constants
from .errors import DimensionMismatch, UnphysicalParameters
from .fock import (
    MotionalDensity,
    MotionalState,
    Operator,
    Spectrum,
    check_dim,
    ladder_ops,
    quadratures,
    squeeze_operator,
)

VARIANTS = ("oracle", "exact-decomposition", "diagonal-sods", "perturbative")
_ALIASES = {
    "oracle": "oracle",
    "exact": "exact-decomposition",
    "exact-decomposition": "exact-decomposition",
    "diagonal-sods": "diagonal-sods",
    "sods": "diagonal-sods",
    "diagonal": "diagonal-sods",
    "perturbative": "perturbative",
}
FRAMES = ("rotating", "lab")


def variant_name(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown propagator variant {name!r}; choose from {VARIANTS}") from None


def carrier_phase(ratio: float, omega_t: float) -> float:
    """(omega_c/omega * omega_t) mod 2 pi, computed exactly from the two floats."""
    product = Fraction(ratio) * Fraction(omega_t)
    with mpmath.workprec(256 + max(0, product.numerator.bit_length() - product.denominator.bit_length())):
        value = mpmath.mpf(product.numerator) / product.denominator
        two_pi = 2 * mpmath.pi
        reduced = value - two_pi * mpmath.floor(value / two_pi)
        return float(reduced)


def squeeze_parameter(eps_c: float) -> float:
    """zeta = -ln(1 - eps_c)/4, the clock-conditioned squeezing."""
    return -math.log1p(-eps_c) / 4


def rotation_factor(eps_c: float) -> float:
    """lambda = sqrt(1 - eps_c), the excited-branch trap frequency ratio."""
    return math.sqrt(1.0 - eps_c)


@dataclass(frozen=True)
class ClockParams:
    """Clock and trap parameters.

    ``omega_c`` and ``omega`` share units (rad/s for physical presets,
    arbitrary for inflated dimensionless studies). ``eps_c`` and ``eps_m`` are
    the clock and trap quanta over the rest energy; they must satisfy
    ``eps_m * omega_c == eps_c * omega``.
    """

    omega_c: float
    omega: float
    eps_c: float
    eps_m: float
    mass: float | None = None
    label: str = ""

    def __post_init__(self):
        if not (self.omega > 0 and self.omega_c > 0):
            raise UnphysicalParameters("omega and omega_c must be positive")
        if not 0.0 <= self.eps_c < 1.0:
            raise UnphysicalParameters(f"eps_c must lie in [0, 1), got {self.eps_c}")
        if self.eps_m < 0:
            raise UnphysicalParameters(f"eps_m must be >= 0, got {self.eps_m}")
        lhs = self.eps_m * self.omega_c
        rhs = self.eps_c * self.omega
        if abs(lhs - rhs) > 1e-12 * max(abs(lhs), abs(rhs)):
            raise UnphysicalParameters("eps_m * omega_c must equal eps_c * omega")
        if self.eps_m > self.eps_c:
            raise UnphysicalParameters("eps_m > eps_c implies omega > omega_c")

    @classmethod
    def physical(cls, mass: float, omega_c: float, omega: float, label: str = "") -> ClockParams:
        rest = mass * constants.C_LIGHT ** 2
        eps_c = constants.HBAR * omega_c / rest
        eps_m = eps_c * omega / omega_c
        return cls(omega_c, omega, eps_c, eps_m, mass=mass, label=label)

    @classmethod
    def from_species(cls, name: str, trap_hz: float | None = None) -> ClockParams:
        sp = constants.species(name)
        trap = sp.trap_hz if trap_hz is None else trap_hz
        return cls.physical(sp.mass, sp.omega_c, 2 * math.pi * trap, label=sp.name)

    @classmethod
    def dimensionless(cls, eps_c: float, ratio: float = 1e3) -> ClockParams:
        """Inflated-epsilon parameters with omega = 1 and omega_c = ratio."""
        return cls(float(ratio), 1.0, eps_c, eps_c / ratio)

    @property
    def ratio(self) -> float:
        return self.omega_c / self.omega

    @property
    def zeta(self) -> float:
        return squeeze_parameter(self.eps_c)

    @property
    def lam(self) -> float:
        return rotation_factor(self.eps_c)

    def omega_t(self, t: float) -> float:
        return self.omega * t

    def theta(self, t: float) -> float:
        """eps_m * omega_c * t, the squeezed-state entangling angle."""
        return self.eps_m * self.omega_c * t


@dataclass(frozen=True, eq=False)
class BlockHamiltonian:
    """Clock-diagonal Hamiltonian, one motional block per clock level."""

    ground: Operator
    excited: Operator
    frame: str = "rotating"
    units: str = "hbar_omega"

    @property
    def dim(self) -> int:
        return self.ground.dim

    def full(self) -> np.ndarray:
        """Dense 2*dim matrix ordered (|g> block, |e> block)."""
        d = self.dim
        out = np.zeros((2 * d, 2 * d), dtype=complex)
        out[:d, :d] = self.ground.matrix
        out[d:, d:] = self.excited.matrix
        return out


def build_hamiltonian(params: ClockParams, dim: int, frame: str = "lab", si: bool = False) -> BlockHamiltonian:
    """H = H_c + hbar omega (n + 1/2) - (hbar omega / 2 m c^2) H_c P^2.

    Returned in units of hbar*omega unless ``si`` is set. In the rotating
    frame the constant hbar*omega_c of the excited block is left out.
    """
    dim = check_dim(dim)
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    _, P = quadratures(dim)
    osc = np.diag(np.arange(dim) + 0.5).astype(complex)
    h_e = osc - 0.5 * params.eps_c * (P.matrix @ P.matrix)
    if frame == "lab":
        h_e = h_e + params.ratio * np.eye(dim)
    h_g = osc
    units = "hbar_omega"
    if si:
        scale = constants.HBAR * params.omega
        h_g, h_e, units = h_g * scale, h_e * scale, "joule"
    return BlockHamiltonian(Operator(h_g, "hermitian"), Operator(h_e, "hermitian"), frame, units)


@dataclass(frozen=True, eq=False)
class PropagatorSet:
    U_g: Operator
    U_e: Operator
    omega_t: float
    variant: str
    zeta: float
    lam: float
    frame: str = "rotating"

    @property
    def dim(self) -> int:
        return self.U_g.dim

    def unitarity_error(self) -> float:
        return max(self.U_g.unitarity_error(), self.U_e.unitarity_error())


@dataclass(frozen=True, eq=False)
class CompositeState:
    """(|g> block_g + |e> block_e), each block a Fock-basis vector."""

    block_g: np.ndarray
    block_e: np.ndarray
    frame: str = "rotating"
    checked: bool = field(default=True, repr=False)

    def __post_init__(self):
        g = np.array(self.block_g, dtype=complex)
        e = np.array(self.block_e, dtype=complex)
        if g.shape != e.shape or g.ndim != 1:
            raise DimensionMismatch(f"clock blocks differ in shape: {g.shape} vs {e.shape}")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        g.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "block_g", g)
        object.__setattr__(self, "block_e", e)
        if self.checked and abs(self.norm() - 1.0) > 1e-12:
            raise ValueError(f"composite state is not normalized (norm^2 = {self.norm()!r})")

    @classmethod
    def product(cls, motion, c_g: complex = 1 / math.sqrt(2), c_e: complex = 1 / math.sqrt(2)) -> CompositeState:
        """(c_g|g> + c_e|e>) (x) |motion>."""
        v = motion.amplitudes if isinstance(motion, MotionalState) else np.asarray(motion, dtype=complex)
        return cls(c_g * v, c_e * v)

    @property
    def dim(self) -> int:
        return len(self.block_g)

    def norm(self) -> float:
        return float(np.vdot(self.block_g, self.block_g).real + np.vdot(self.block_e, self.block_e).real)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.block_g, self.block_e])


@dataclass(frozen=True, eq=False)
class ClockReducedState:
    """2x2 clock density matrix in the basis (|g>, |e>)."""

    rho: np.ndarray
    frame: str = "rotating"

    @property
    def rho_eg(self) -> complex:
        return complex(self.rho[1, 0])

    @property
    def visibility(self) -> float:
        return 2.0 * abs(self.rho_eg)

    @property
    def phase(self) -> float:
        """Principal argument of rho_eg."""
        return float(np.angle(self.rho_eg))

    @property
    def clock_phase(self) -> float:
        """phi with 2 rho_eg = V exp(-i phi) (rotating frame: offset from omega_c t)."""
        return -self.phase

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


def _clock_rho(rho_gg: float, rho_ee: float, rho_eg: complex) -> np.ndarray:
    return np.array([[rho_gg, np.conj(rho_eg)], [rho_eg, rho_ee]], dtype=complex)


class Propagator:
    """Branch propagators for one parameter set, reusable across times.

    Time-independent pieces (eigenbasis for the oracle, S(zeta) for the exact
    decomposition) are built once; :meth:`at` returns dense matrices and
    :meth:`apply` evolves a state in O(dim^2).
    """

    def __init__(self, params: ClockParams, dim: int, variant: str = "exact-decomposition",
                 frame: str = "rotating"):
        self.params = params
        self.dim = check_dim(dim)
        self.variant = variant_name(variant)
        if frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        self.frame = frame
        self.zeta = params.zeta
        self.lam = params.lam
        self._osc = np.arange(self.dim) + 0.5
        if self.variant == "oracle":
            H = build_hamiltonian(params, self.dim, frame=frame)
            self._spec_g = Spectrum(H.ground)
            self._spec_e = Spectrum(H.excited)
        elif self.variant == "exact-decomposition":
            self._S = squeeze_operator(self.zeta, self.dim).matrix
            self._S_dag = self._S.conj().T
        elif self.variant == "perturbative":
            a, ad = ladder_ops(self.dim)
            self._K = a.matrix @ a.matrix - ad.matrix @ ad.matrix

    def _carrier(self, omega_t: float) -> complex:
        # the oracle's lab Hamiltonian already carries omega_c
        if self.frame == "rotating" or self.variant == "oracle":
            return 1.0
        return complex(np.exp(-1j * carrier_phase(self.params.ratio, omega_t)))

    def _ground_diag(self, omega_t):
        return np.exp(-1j * omega_t * self._osc)

    def _sods_diag(self, omega_t):
        # e^{-i wt (n+1/2)} e^{+i eps_c wt (2n+1)/4}: omega_c'(n) with the carrier removed
        return self._ground_diag(omega_t) * np.exp(0.5j * self.params.eps_c * omega_t * self._osc)

    def at(self, omega_t: float) -> PropagatorSet:
        if self.variant == "oracle":
            U_g = self._spec_g.expm(omega_t)
            U_e = self._spec_e.expm(omega_t)
        else:
            U_g = np.diag(self._ground_diag(omega_t))
            if self.variant == "exact-decomposition":
                R = np.exp(-1j * self.lam * omega_t * self._osc)
                U_e = (self._S * R) @ self._S_dag
            elif self.variant == "diagonal-sods":
                U_e = np.diag(self._sods_diag(omega_t))
            else:
                R = np.diag(np.exp(-1j * self.lam * omega_t * self._osc))
                c = self.params.eps_c / 8
                U_e = R - c * (R @ self._K) + c * (self._K @ R)
            U_e = U_e * self._carrier(omega_t)
        kind_e = "general" if self.variant == "perturbative" else "unitary"
        return PropagatorSet(Operator(U_g, "unitary"), Operator(U_e, kind_e), float(omega_t),
                             self.variant, self.zeta, self.lam, self.frame)

    def apply_branches(self, psi_g: np.ndarray, psi_e: np.ndarray, omega_t: float):
        if self.variant == "oracle":
            return self._spec_g.apply(psi_g, omega_t), self._spec_e.apply(psi_e, omega_t)
        g = self._ground_diag(omega_t) * psi_g
        if self.variant == "exact-decomposition":
            R = np.exp(-1j * self.lam * omega_t * self._osc)
            e = self._S @ (R * (self._S_dag @ psi_e))
        elif self.variant == "diagonal-sods":
            e = self._sods_diag(omega_t) * psi_e
        else:
            R = np.exp(-1j * self.lam * omega_t * self._osc)
            c = self.params.eps_c / 8
            e = R * psi_e - c * R * (self._K @ psi_e) + c * (self._K @ (R * psi_e))
        return g, e * self._carrier(omega_t)

    def apply(self, state: CompositeState, omega_t: float) -> CompositeState:
        if state.dim != self.dim:
            raise DimensionMismatch(f"state dim {state.dim} != propagator dim {self.dim}")
        g, e = self.apply_branches(state.block_g, state.block_e, omega_t)
        return CompositeState(g, e, self.frame, checked=self.variant != "perturbative")

    def fock_overlaps(self, omega_t: float) -> np.ndarray:
        """diag(U_g^dag U_e): the clock coherence carried by each Fock level."""
        if self.variant == "diagonal-sods":
            return np.exp(0.5j * self.params.eps_c * omega_t * self._osc) * self._carrier(omega_t)
        if self.variant == "exact-decomposition":
            R = np.exp(-1j * self.lam * omega_t * self._osc)
            diag_e = (np.abs(self._S) ** 2) @ R
            return np.conj(self._ground_diag(omega_t)) * diag_e * self._carrier(omega_t)
        props = self.at(omega_t)
        return np.sum(np.conj(props.U_g.matrix) * props.U_e.matrix, axis=0)


def oracle_propagator(H: BlockHamiltonian, omega_t: float, params: ClockParams | None = None) -> PropagatorSet:
    """Brute-force exp(-i H t) on each clock block."""
    U_g = Spectrum(H.ground).expm(omega_t)
    U_e = Spectrum(H.excited).expm(omega_t)
    zeta = params.zeta if params else float("nan")
    lam = params.lam if params else float("nan")
    return PropagatorSet(Operator(U_g, "unitary"), Operator(U_e, "unitary"), float(omega_t),
                         "oracle", zeta, lam, H.frame)


def exact_propagator(params: ClockParams, omega_t: float, dim: int, frame: str = "rotating") -> PropagatorSet:
    """U_e = S(zeta) exp(-i lambda wt (n + 1/2)) S(zeta)^dag (times the carrier in the lab frame)."""
    return Propagator(params, dim, "exact-decomposition", frame).at(omega_t)


def diagonal_sods_propagator(params: ClockParams, omega_t: float, dim: int, frame: str = "rotating") -> PropagatorSet:
    return Propagator(params, dim, "diagonal-sods", frame).at(omega_t)


def perturbative_propagator(params: ClockParams, omega_t: float, dim: int, frame: str = "rotating") -> PropagatorSet:
    """First order in eps_c; only unitary up to O(eps_c^2)."""
    return Propagator(params, dim, "perturbative", frame).at(omega_t)


def evolve(state: CompositeState, props: PropagatorSet) -> CompositeState:
    if state.dim != props.dim:
        raise DimensionMismatch(f"state dim {state.dim} != propagator dim {props.dim}")
    if state.frame != props.frame:
        raise ValueError(f"state frame {state.frame!r} does not match propagator frame {props.frame!r}")
    g = props.U_g.matrix @ state.block_g
    e = props.U_e.matrix @ state.block_e
    return CompositeState(g, e, props.frame, checked=props.variant != "perturbative")


def reduce_to_clock(state) -> ClockReducedState:
    """Partial trace over the motion of a composite pure state or density matrix.

    A density matrix is given as a (2 dim, 2 dim) array ordered like
    :meth:`CompositeState.vector`.
    """
    if isinstance(state, CompositeState):
        g, e = state.block_g, state.block_e
        rho = _clock_rho(np.vdot(g, g).real, np.vdot(e, e).real, np.vdot(g, e))
        return ClockReducedState(rho, state.frame)
    m = np.asarray(state, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        raise DimensionMismatch(f"composite density must be (2d, 2d), got {m.shape}")
    d = m.shape[0] // 2
    rho = _clock_rho(np.trace(m[:d, :d]).real, np.trace(m[d:, d:]).real, np.trace(m[d:, :d]))
    return ClockReducedState(rho)


def mixed_state_evolution(rho_m: MotionalDensity, props, c_g: complex = 1 / math.sqrt(2),
                          c_e: complex = 1 / math.sqrt(2), method: str = "auto",
                          omega_t: float | None = None) -> ClockReducedState:
    """Reduced clock state for a mixed initial motion.

    ``props`` is a PropagatorSet, or a :class:`Propagator` together with
    ``omega_t``. Diagonal mixtures are evolved as a weighted ensemble of Fock
    states (``method="ensemble"``); anything else, or ``method="density"``,
    propagates the full density matrix: rho_eg = c_e conj(c_g) Tr(U_e rho U_g^dag).
    """
    if method not in ("auto", "ensemble", "density"):
        raise ValueError("method must be auto, ensemble or density")
    diagonal = rho_m.is_diagonal()
    if method == "ensemble" and not diagonal:
        raise ValueError("ensemble evolution needs a diagonal motional state")
    use_ensemble = diagonal and method != "density"
    if isinstance(props, Propagator):
        if omega_t is None:
            raise ValueError("omega_t is required with a Propagator")
        if props.dim != rho_m.dim:
            raise DimensionMismatch(f"density dim {rho_m.dim} != propagator dim {props.dim}")
        frame = props.frame
        if use_ensemble:
            coh = np.dot(rho_m.populations(), props.fock_overlaps(omega_t))
        else:
            props = props.at(omega_t)
    if isinstance(props, PropagatorSet):
        if props.dim != rho_m.dim:
            raise DimensionMismatch(f"density dim {rho_m.dim} != propagator dim {props.dim}")
        frame = props.frame
        Ug, Ue = props.U_g.matrix, props.U_e.matrix
        if use_ensemble:
            coh = np.dot(rho_m.populations(), np.sum(np.conj(Ug) * Ue, axis=0))
        else:
            coh = np.trace(Ue @ rho_m.matrix @ Ug.conj().T)
    rho_eg = c_e * np.conj(c_g) * coh
    rho = _clock_rho(abs(c_g) ** 2, abs(c_e) ** 2, rho_eg)
    return ClockReducedState(rho, frame)
