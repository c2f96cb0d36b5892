"""
Quantum Fisher information of a closed trajectory and scaling-law fits.

F = 2 |int_0^T sinh 2r e^{i theta} dt|^2, bounded by the envelope
2 (int_0^T sinh 2r dt)^2.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from critical_metrology.exceptions import DomainError
from critical_metrology.utils import load_csv
from dynamics.state import J_IM, J_RE, S_ACC, THETA, X, Y

MIN_FIT_POINTS = 5


@dataclass(frozen=True)
class QfiResult:
    value: float
    j_final: complex
    envelope: float
    T: float
    winding: int = 0
    r_final: float = 0.0

    def to_dict(self):
        return {
            "qfi": self.value,
            "envelope": self.envelope,
            "T": self.T,
            "winding": self.winding,
            "r_final": self.r_final,
            "j_re": self.j_final.real,
            "j_im": self.j_final.imag,
        }


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual_rms: float
    window: tuple
    points: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "window": list(self.window),
            "points": self.points,
        }


def qfi_from_trajectory(traj):
    """Read F and its envelope off the integrated accumulators."""
    final = traj.states[-1]
    j_final = complex(final[J_RE], final[J_IM])
    return QfiResult(
        value=2.0 * abs(j_final) ** 2,
        j_final=j_final,
        envelope=2.0 * final[S_ACC] ** 2,
        T=traj.T,
        winding=traj.winding,
        r_final=float(traj.r[-1]),
    )


def accumulators_from_samples(traj):
    """
    Recompute (J, int sinh^2 2r dt) from the stored samples by the
    trapezoidal rule, independently of the integrated accumulators.
    """
    states = traj.states
    rho = np.hypot(states[:, X], states[:, Y])
    integrand = rho * np.exp(1j * states[:, THETA])
    j = cumulative_trapezoid(integrand, traj.times, initial=0.0)
    a = cumulative_trapezoid(rho**2, traj.times, initial=0.0)
    return j, a


def _window(points, window):
    data = np.array(sorted((float(T), float(F)) for T, F in points), dtype=float).reshape(-1, 2)
    lo, hi = window
    if not lo < hi:
        raise DomainError(f"degenerate fit window {window!r}")
    selected = data[(data[:, 0] >= lo) & (data[:, 0] <= hi)]
    if len(selected) < MIN_FIT_POINTS:
        raise DomainError(f"fit window {window!r} holds {len(selected)} points, need {MIN_FIT_POINTS}")
    if np.any(selected[:, 1] <= 0.0):
        raise DomainError("fits need strictly positive values")
    return selected[:, 0], selected[:, 1]


def _fit(abscissa, ordinate, window):
    result = linregress(abscissa, ordinate)
    residual = ordinate - (result.slope * abscissa + result.intercept)
    return FitResult(
        slope=float(result.slope),
        intercept=float(result.intercept),
        residual_rms=float(math.sqrt(np.mean(residual**2))),
        window=(float(window[0]), float(window[1])),
        points=int(abscissa.size),
    )


def fit_power_law(points, window):
    """Least-squares slope of ln F against ln T."""
    T, F = _window(points, window)
    return _fit(np.log(T), np.log(F), window)


def fit_exponent(points, window):
    """Least-squares slope of ln F against T."""
    T, F = _window(points, window)
    return _fit(T, np.log(F), window)


def points_from_csv(path, column="qfi", filters=None):
    """
    Read (T, value) pairs from a sweep CSV, keeping rows whose columns match
    ``filters`` and skipping rows with an empty value.
    """
    dataset = load_csv(path)
    headers = dataset.headers or []
    for name in ["T", column, *(filters or {})]:
        if name not in headers:
            raise DomainError(f"column {name!r} missing from {path}")
    points = []
    for row in dataset.dict:
        if any(not _matches(row[key], value) for key, value in (filters or {}).items()):
            continue
        if row[column] in ("", None):
            continue
        points.append((float(row["T"]), float(row[column])))
    return points


def _matches(cell, value):
    try:
        return float(cell) == float(value)
    except (TypeError, ValueError):
        return str(cell) == str(value)
