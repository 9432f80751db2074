"""Truncated single-mode Fock space: operators, canonical states, overlaps.

Squeezing convention (used everywhere in the package)::

    S(xi) = exp((conj(xi) a^2 - xi a^dag^2) / 2),   xi = r exp(i theta)

With this choice a real argument reproduces exp((zeta/2)(a^2 - a^dag^2)),
and phase-space rotations act as

    exp(-i phi n) S(xi) exp(i phi n) = S(xi exp(-2 i phi)),

so <0|S(r)^dag S(r e^{i phi})|0> = (cosh^2 r - e^{i phi} sinh^2 r)^(-1/2).
Both identities are checked numerically in the test-suite.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimension, InvalidOperator, TruncationOverflow

TRUNCATION_TOL = 1e-12
START_DIM = 128
DEFAULT_DIM_CAP = 4096
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


def dim_cap() -> int:
    """Largest dimension the adaptive truncation may reach (env PROPERTIME_DIM_CAP)."""
    raw = os.environ.get("PROPERTIME_DIM_CAP")
    if not raw:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidDimension(f"PROPERTIME_DIM_CAP must be an integer, got {raw!r}") from None
    check_dim(cap)
    return cap


def check_dim(dim) -> int:
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)):
        raise InvalidDimension(f"dim must be an integer, got {dim!r}")
    if dim < 2:
        raise InvalidDimension(f"dim must be >= 2, got {dim}")
    return int(dim)


def tail_weight(vec: np.ndarray) -> float:
    """Norm squared carried by the top 10% of Fock levels (at least one level)."""
    d = len(vec)
    k = max(1, d // 10)
    return float(np.sum(np.abs(vec[d - k:]) ** 2))


@dataclass(frozen=True, eq=False)
class Operator:
    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidOperator(f"operator must be square, got shape {m.shape}")
        if self.kind not in ("hermitian", "unitary", "general"):
            raise InvalidOperator(f"unknown operator kind {self.kind!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> Operator:
        return Operator(self.matrix.conj().T, self.kind)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def check(self) -> None:
        """Validate the kind tag on demand."""
        if self.kind == "hermitian" and self.hermiticity_error() > HERMITIAN_TOL:
            raise InvalidOperator(f"operator tagged hermitian is off by {self.hermiticity_error():.3g}")
        if self.kind == "unitary" and self.unitarity_error() > UNITARY_TOL:
            raise InvalidOperator(f"operator tagged unitary is off by {self.unitarity_error():.3g}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            kind = "unitary" if self.kind == other.kind == "unitary" else "general"
            return Operator(self.matrix @ other.matrix, kind)
        if isinstance(other, MotionalState):
            return self.matrix @ other.amplitudes
        return self.matrix @ np.asarray(other)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class MotionalState:
    """Normalized Fock-basis amplitude vector."""

    amplitudes: np.ndarray
    tail_norm: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex)
        if v.ndim != 1:
            raise InvalidDimension("state amplitudes must be a vector")
        check_dim(len(v))
        norm2 = float(np.vdot(v, v).real)
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm^2 = {norm2!r})")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "tail_norm", tail_weight(v))

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> MotionalState:
        v = np.asarray(vec, dtype=complex)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(v)

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    def converged(self, tol: float = TRUNCATION_TOL) -> bool:
        return self.tail_norm < tol

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, Operator) else np.asarray(op)
        return complex(np.vdot(self.amplitudes, m @ self.amplitudes))

    def density(self) -> MotionalDensity:
        v = self.amplitudes
        return MotionalDensity(np.outer(v, v.conj()))


@dataclass(frozen=True, eq=False)
class MotionalDensity:
    matrix: np.ndarray
    discarded_weight: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimension(f"density matrix must be square, got {m.shape}")
        check_dim(m.shape[0])
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace is {tr!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_diagonal(self) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return not np.any(off)

    def populations(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def expect(self, op) -> complex:
        m = op.matrix if isinstance(op, Operator) else np.asarray(op)
        return complex(np.trace(self.matrix @ m))


# -- operators ---------------------------------------------------------------

def ladder_ops(dim: int) -> tuple[Operator, Operator]:
    """Annihilation and creation operators, a[n-1, n] = sqrt(n)."""
    dim = check_dim(dim)
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    return Operator(a), Operator(a.conj().T)


def number_op(dim: int) -> Operator:
    dim = check_dim(dim)
    return Operator(np.diag(np.arange(dim, dtype=float)).astype(complex), "hermitian")


def quadratures(dim: int) -> tuple[Operator, Operator]:
    """X = (a + a^dag)/sqrt(2), P = i(a^dag - a)/sqrt(2)."""
    a, ad = ladder_ops(dim)
    x = (a.matrix + ad.matrix) / math.sqrt(2)
    p = 1j * (ad.matrix - a.matrix) / math.sqrt(2)
    return Operator(x, "hermitian"), Operator(p, "hermitian")


def squeeze_generator(xi: complex, dim: int) -> np.ndarray:
    """Anti-Hermitian generator (conj(xi) a^2 - xi a^dag^2)/2."""
    a, ad = ladder_ops(dim)
    a2 = a.matrix @ a.matrix
    ad2 = ad.matrix @ ad.matrix
    return (np.conj(xi) * a2 - xi * ad2) / 2


def hermitian_expm(H, t: float = 1.0) -> Operator:
    """exp(-i H t) through the eigendecomposition H = V diag(w) V^dag."""
    return Operator(Spectrum(H).expm(t), "unitary")


class Spectrum:
    """Cached eigendecomposition of a Hermitian matrix.

    Evolving many vectors or times under one generator costs a single
    ``eigh`` plus O(dim^2) per vector.
    """

    def __init__(self, H):
        m = H.matrix if isinstance(H, Operator) else np.asarray(H, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidOperator(f"generator must be square, got shape {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
        err = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if err > HERMITIAN_TOL * scale:
            raise InvalidOperator(f"generator is not Hermitian (max |H - H^dag| = {err:.3g})")
        self.values, self.vectors = np.linalg.eigh((m + m.conj().T) / 2)

    def expm(self, t: float = 1.0) -> np.ndarray:
        v = self.vectors
        return (v * np.exp(-1j * self.values * t)) @ v.conj().T

    def apply(self, vec: np.ndarray, t: float = 1.0) -> np.ndarray:
        v = self.vectors
        return v @ (np.exp(-1j * self.values * t) * (v.conj().T @ vec))


def squeeze_operator(zeta: complex, dim: int, tol: float = TRUNCATION_TOL) -> Operator:
    """S(zeta) as a dense unitary, refusing truncations that leak S(zeta)|0>."""
    dim = check_dim(dim)
    G = squeeze_generator(zeta, dim)
    # exp(G) = exp(-i (iG)), iG Hermitian
    U = Spectrum(1j * G).expm(1.0)
    leak = tail_weight(U[:, 0])
    if leak > tol:
        r = abs(zeta)
        raise TruncationOverflow(
            f"S({zeta}) leaks {leak:.3g} into the top levels at dim={dim}",
            required_dim=_required_squeezed_dim(r, tol),
        )
    return Operator(U, "unitary")


# -- states ------------------------------------------------------------------

def fock_state(k: int, dim: int) -> MotionalState:
    dim = check_dim(dim)
    if not 0 <= k < dim:
        raise TruncationOverflow(f"Fock level {k} does not fit", required_dim=k + 1)
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return MotionalState(v)


def vacuum(dim: int) -> MotionalState:
    return fock_state(0, dim)


def _squeezed_amplitudes(r: float, theta: float, dim: int) -> np.ndarray:
    # c_{2m+2}/c_{2m} = -e^{i theta} tanh(r) sqrt((2m+1)/(2m+2))
    c = np.zeros(dim, dtype=complex)
    c[0] = 1.0 / math.sqrt(math.cosh(r))
    step = -np.exp(1j * theta) * math.tanh(r)
    for n in range(2, dim, 2):
        c[n] = c[n - 2] * step * math.sqrt((n - 1) / n)
    return c


def _required_squeezed_dim(r: float, tol: float) -> int:
    d = START_DIM
    while tail_weight(_squeezed_amplitudes(r, 0.0, d)) >= tol:
        d *= 2
        if d > 1 << 20:
            break
    return d


def general_squeezed_vacuum(r: float, theta: float = 0.0, dim: int | None = None,
                            tol: float = TRUNCATION_TOL) -> MotionalState:
    """S(r e^{i theta})|0> from its closed-form even-level amplitudes.

    With ``dim=None`` the truncation starts at 128 levels and doubles until
    the top-10% tail is below ``tol`` (capped by PROPERTIME_DIM_CAP).
    """
    if r < 0:
        raise ValueError("squeezing magnitude r must be >= 0")
    cap = dim_cap()
    if dim is None:
        d = START_DIM
        while True:
            c = _squeezed_amplitudes(r, theta, d)
            if tail_weight(c) < tol:
                break
            if d * 2 > cap:
                raise TruncationOverflow(f"squeezed vacuum r={r} does not converge below the dim cap {cap}",
                                         required_dim=_required_squeezed_dim(r, tol))
            d *= 2
    else:
        d = check_dim(dim)
        c = _squeezed_amplitudes(r, theta, d)
        if tail_weight(c) >= tol:
            raise TruncationOverflow(f"squeezed vacuum r={r} is not converged at dim={d}",
                                     required_dim=_required_squeezed_dim(r, tol))
    return MotionalState.from_vector(c)


def thermal_density(nbar: float, dim: int | None = None, tol: float = TRUNCATION_TOL) -> MotionalDensity:
    """Diagonal thermal state, renormalized over the kept levels.

    The weight dropped above ``dim - 1`` is ``(nbar/(1+nbar))**dim`` and is
    reported as ``discarded_weight``.
    """
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    q = nbar / (1.0 + nbar)
    if q == 0.0:
        required = 2
    else:
        required = max(2, math.ceil(math.log(tol) / math.log(q)))
    if dim is None:
        d = START_DIM
        while d < required:
            d *= 2
        if d > dim_cap():
            raise TruncationOverflow(f"thermal state nbar={nbar} exceeds the dim cap {dim_cap()}",
                                     required_dim=required)
    else:
        d = check_dim(dim)
        if q ** d >= tol:
            raise TruncationOverflow(f"thermal state nbar={nbar} is not converged at dim={d}",
                                     required_dim=required)
    p = (1.0 - q) * q ** np.arange(d, dtype=float)
    kept = p.sum()
    return MotionalDensity(np.diag(p / kept).astype(complex), discarded_weight=float(q ** d))


def squeezed_overlap_closed_form(r: float, phi: float) -> complex:
    """<r | r e^{i phi}> = (cosh^2 r - e^{i phi} sinh^2 r)^(-1/2), principal branch."""
    z = math.cosh(r) ** 2 - np.exp(1j * phi) * math.sinh(r) ** 2
    return complex(1.0 / np.sqrt(z))


def rotate(state: MotionalState, phi: float) -> MotionalState:
    """exp(-i phi n) applied to a state."""
    n = np.arange(state.dim)
    return MotionalState.from_vector(np.exp(-1j * phi * n) * state.amplitudes)
