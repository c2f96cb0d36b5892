"""
Large-squeezing model: coth 2r -> 1, so the phase advances at
2 (omega - eps sin^2(phi/2)) and the control law can be written as eps(phi).
"""
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from critical_metrology.exceptions import DomainError

from .optimizer import TWO_PI, off_time, on_time, squeeze


def large_r_squeezing(eps_profile, phi_grid, omega=1.0):
    """Return (T, r) spent and gained by the phase-dependent law eps(phi) on ``phi_grid``."""
    phi = np.asarray(phi_grid, dtype=float)
    eps = np.asarray(eps_profile, dtype=float)
    if np.any(eps < 0.0) or np.any(eps > omega):
        raise DomainError("profile leaves the symmetric phase 0 <= eps <= omega")
    dwell = 0.5 / (omega - eps * np.sin(0.5 * phi) ** 2)
    gain = 0.5 * eps * np.sin(phi) * dwell
    return float(trapezoid(dwell, phi)), float(trapezoid(gain, phi))


def _threshold_cost(phi_c, Phi, eps_max, omega):
    turns, tail = divmod(Phi, TWO_PI)
    turns = int(turns)
    duration = turns * (on_time(phi_c, eps_max, omega) + off_time(phi_c, omega))
    squeezing = turns * squeeze(phi_c, eps_max, omega)
    on_tail = min(phi_c, tail)
    duration += on_time(on_tail, eps_max, omega) + (tail - on_tail) / (2.0 * omega)
    squeezing += squeeze(on_tail, eps_max, omega)
    return duration, squeezing


def onoff_threshold_profile(Phi, T, eps_max=1.0, omega=1.0):
    """
    Bang-bang law eps = eps_max iff phi mod 2pi < phi_c, with phi_c chosen so
    the total phase Phi is reached exactly at T. Returns (phi_c, r).
    """
    floor_T = Phi / (2.0 * omega)
    if T < floor_T:
        raise DomainError(f"T={T!r} shorter than free rotation through Phi={Phi!r}")
    ceiling = math.pi if eps_max >= omega else TWO_PI
    top = ceiling * (1.0 - 1e-12)
    if _threshold_cost(top, Phi, eps_max, omega)[0] < T:
        raise DomainError(f"T={T!r} cannot be spent by an on-off law reaching Phi={Phi!r}")
    phi_c = brentq(lambda p: _threshold_cost(p, Phi, eps_max, omega)[0] - T, 0.0, top, xtol=1e-14)
    return phi_c, _threshold_cost(phi_c, Phi, eps_max, omega)[1]
