"""Phase unwrapping, shift fitting, order-of-magnitude scaling and comparison reports."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InsufficientData, UnwrapFailure


@dataclass(frozen=True)
class FitResult:
    slope: float  # rad per unit omega*t
    intercept: float
    residual_rms: float
    fractional_shift: float  # slope * omega / omega_c

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "residual_rms": self.residual_rms, "fractional_shift": self.fractional_shift}


def wrap_phase(phase):
    """Map onto the principal branch (-pi, pi]."""
    p = np.asarray(phase, dtype=float)
    w = np.mod(p + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def unwrap_phase(phases, max_step: float = math.pi) -> np.ndarray:
    """Continuous phase from principal values; the first sample is kept.

    Consecutive samples whose wrapped difference reaches ``max_step`` are
    ambiguous and raise :class:`UnwrapFailure`.
    """
    p = np.asarray(phases, dtype=float)
    if p.ndim != 1:
        raise ValueError("phase series must be one-dimensional")
    if p.size == 0:
        return p.copy()
    if not np.all(np.isfinite(p)):
        bad = int(np.flatnonzero(~np.isfinite(p))[0])
        raise UnwrapFailure("non-finite phase", bad)
    d = np.diff(p)
    dw = np.mod(d + np.pi, 2 * np.pi) - np.pi
    jumps = np.flatnonzero(np.abs(dw) >= max_step * (1 - 1e-12))
    if jumps.size:
        raise UnwrapFailure(f"phase step of {abs(dw[jumps[0]]):.3f} rad is ambiguous; refine the grid",
                            int(jumps[0]) + 1)
    out = np.empty_like(p)
    out[0] = p[0]
    out[1:] = p[0] + np.cumsum(dw)
    return out


def _ratio(params) -> float:
    if params is None:
        return float("nan")
    if isinstance(params, (int, float)):
        return float(params)
    return params.ratio


def fit_fractional_shift(omega_t, phase, params=None) -> FitResult:
    """Least-squares line through an unwrapped clock-phase series.

    ``params`` is a ClockParams (or just the ratio omega_c/omega) used to
    convert the slope into a fractional frequency shift; negative means the
    clock runs slow.
    """
    t = np.asarray(omega_t, dtype=float)
    y = np.asarray(phase, dtype=float)
    if t.shape != y.shape:
        raise GridMismatch(f"time grid {t.shape} and phase series {y.shape} differ")
    if t.size < 3:
        raise InsufficientData(f"need at least 3 points to fit, got {t.size}")
    tc = t.mean()
    dt = t - tc
    denom = np.dot(dt, dt)
    if denom == 0:
        raise InsufficientData("time grid has no spread")
    slope = float(np.dot(dt, y - y.mean()) / denom)
    intercept = float(y.mean() - slope * tc)
    resid = y - (intercept + slope * t)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return FitResult(slope, intercept, rms, slope / _ratio(params))


def scaling_exponent(metric_1: float, metric_2: float, eps_1: float, eps_2: float) -> float:
    """p such that metric ~ eps^p, from two samples."""
    if metric_1 <= 0 or metric_2 <= 0:
        raise ValueError("metrics must be positive for a log-ratio exponent")
    if eps_1 <= 0 or eps_2 <= 0 or eps_1 == eps_2:
        raise ValueError("need two distinct positive epsilons")
    return math.log(metric_1 / metric_2) / math.log(eps_1 / eps_2)


@dataclass(frozen=True)
class CompareReport:
    abs_dev: np.ndarray
    rel_dev: np.ndarray
    max_abs: float
    rms_abs: float
    max_rel: float
    abs_tol: float | None
    rel_tol: float | None
    passed: bool
    label: str = ""

    def to_dict(self) -> dict:
        return {"label": self.label, "max_abs": self.max_abs, "rms_abs": self.rms_abs,
                "max_rel": self.max_rel, "abs_tol": self.abs_tol, "rel_tol": self.rel_tol,
                "passed": self.passed, "points": int(self.abs_dev.size)}

    def table(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.label or 'comparison'}: {status} max_abs={self.max_abs:.3e} "
                f"rms_abs={self.rms_abs:.3e} max_rel={self.max_rel:.3e}")


def compare_report(numeric, reference, abs_tol: float | None = None, rel_tol: float | None = None,
                   grid=None, reference_grid=None, label: str = "") -> CompareReport:
    """Pointwise deviations between two aligned series (real or complex).

    A point passes if it meets either given tolerance; with no tolerances
    the report always passes and only records deviations.
    """
    a = np.asarray(numeric)
    b = np.asarray(reference)
    if a.shape != b.shape:
        raise GridMismatch(f"series shapes differ: {a.shape} vs {b.shape}")
    if grid is not None and reference_grid is not None:
        g1, g2 = np.asarray(grid, dtype=float), np.asarray(reference_grid, dtype=float)
        if g1.shape != g2.shape or not np.array_equal(g1, g2):
            raise GridMismatch("series are sampled on different grids")
    abs_dev = np.abs(a - b).astype(float)
    scale = np.abs(b).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_dev = np.where(scale > 0, abs_dev / np.where(scale > 0, scale, 1.0), np.where(abs_dev > 0, np.inf, 0.0))
    ok = np.zeros(abs_dev.shape, dtype=bool)
    if abs_tol is None and rel_tol is None:
        ok[...] = True
    if abs_tol is not None:
        ok |= abs_dev <= abs_tol
    if rel_tol is not None:
        ok |= rel_dev <= rel_tol
    n = abs_dev.size
    return CompareReport(
        abs_dev=abs_dev,
        rel_dev=rel_dev,
        max_abs=float(abs_dev.max()) if n else 0.0,
        rms_abs=float(np.sqrt(np.mean(abs_dev ** 2))) if n else 0.0,
        max_rel=float(rel_dev.max()) if n else 0.0,
        abs_tol=abs_tol,
        rel_tol=rel_tol,
        passed=bool(ok.all()),
        label=label,
    )
