"""
Optimal on-off protocols in the large-squeezing limit.

A protocol with winding n runs n cycles, each switched on (eps = eps_max)
while phi < phi_n and off for the rest of the turn, followed by a final
on-segment that ends at phase tilde_phi. All angles are in radians and all
durations in the time unit of ``omega``.
"""
import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from critical_metrology.exceptions import DomainError, PoleError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
TIE_TOLERANCE = 1e-9


def _ratio(eps_max, omega):
    if omega <= 0.0:
        raise DomainError(f"omega must be positive, got {omega!r}")
    ratio = eps_max / omega
    if not 0.0 <= ratio <= 1.0 + 1e-12:
        raise DomainError(f"eps_max={eps_max!r} outside [0, omega={omega!r}]")
    return min(ratio, 1.0)


def _is_critical(ratio):
    return ratio >= 1.0 - 1e-15


def on_time(phi, eps_max, omega=1.0):
    """Time for the phase to advance by ``phi`` with the drive held at eps_max."""
    ratio = _ratio(eps_max, omega)
    half = 0.5 * phi
    if _is_critical(ratio):
        if half >= 0.5 * math.pi:
            raise PoleError(f"phi={phi!r} reaches the tangent pole at pi")
        return math.tan(half) / omega
    slope = math.sqrt(1.0 - ratio)
    return math.atan2(slope * math.sin(half), math.cos(half)) / (slope * omega)


def off_time(phi, omega=1.0):
    """Time of free rotation from phi to the end of the turn."""
    return (math.pi - 0.5 * phi) / omega


def inverse_on_time(duration, eps_max, omega=1.0):
    """Return the phase reached after ``duration`` with the drive on, or None past 2pi."""
    ratio = _ratio(eps_max, omega)
    if _is_critical(ratio):
        return 2.0 * math.atan(omega * duration)
    slope = math.sqrt(1.0 - ratio)
    alpha = slope * omega * duration
    if alpha >= math.pi:
        return None
    return 2.0 * math.atan2(math.sin(alpha), slope * math.cos(alpha))


def squeeze(phi, eps_max, omega=1.0):
    """Squeezing gained by one on-segment ending at phase phi."""
    ratio = _ratio(eps_max, omega)
    half = 0.5 * phi
    if _is_critical(ratio):
        c = math.cos(half)
        if half >= 0.5 * math.pi:
            raise PoleError(f"phi={phi!r} reaches the logarithmic pole at pi")
        return -math.log(c)
    return -0.5 * math.log1p(-ratio * math.sin(half) ** 2)


def normalization_T(n, phi_n, tilde_phi, eps_max, omega=1.0):
    """Total duration of n (on, off) cycles plus the final on-segment."""
    cycles = n * (on_time(phi_n, eps_max, omega) + off_time(phi_n, omega)) if n else 0.0
    return cycles + on_time(tilde_phi, eps_max, omega)


def r_pred(n, phi_n, tilde_phi, eps_max, omega=1.0):
    """Predicted squeezing of the protocol."""
    cycles = n * squeeze(phi_n, eps_max, omega) if n else 0.0
    return cycles + squeeze(tilde_phi, eps_max, omega)


@dataclass(frozen=True)
class OnOffSolution:
    n: int
    T: float
    eps_max: float
    phi_n: float
    tilde_phi_n: float
    r_pred: float
    feasible: bool
    omega: float = 1.0

    @classmethod
    def infeasible(cls, T, n, eps_max, omega):
        return cls(n=n, T=T, eps_max=eps_max, phi_n=math.nan, tilde_phi_n=math.nan, r_pred=-math.inf,
                   feasible=False, omega=omega)

    @property
    def on_time(self):
        return on_time(self.phi_n, self.eps_max, self.omega) if self.n else 0.0

    @property
    def off_time(self):
        return off_time(self.phi_n, self.omega) if self.n else 0.0

    @property
    def final_time(self):
        return on_time(self.tilde_phi_n, self.eps_max, self.omega)

    @property
    def total_phase(self):
        """Phi = 2 n pi + tilde_phi."""
        return TWO_PI * self.n + self.tilde_phi_n

    def to_dict(self):
        record = asdict(self)
        record.pop("omega")
        if not self.feasible:
            record.update(phi_n=None, tilde_phi_n=None, r_pred=None)
        return record


def optimal_tilde_phi(phi_n):
    """Final-segment angle solving sin(tilde_phi) = 2 / tan(phi_n / 2) on the branch above pi/2."""
    tangent = math.tan(0.5 * phi_n)
    # 2 atan(2) maps back to 2 only up to round-off
    if tangent < 2.0 - 1e-12:
        raise DomainError(f"tan(phi_n/2)={tangent!r} below 2: no interior optimum")
    return math.pi - math.asin(min(2.0 / tangent, 1.0))


def _solution(T, n, phi_n, tilde_phi, eps_max, omega):
    return OnOffSolution(
        n=n,
        T=T,
        eps_max=eps_max,
        phi_n=phi_n,
        tilde_phi_n=tilde_phi,
        r_pred=r_pred(n, phi_n, tilde_phi, eps_max, omega),
        feasible=True,
        omega=omega,
    )


def _check_monotone(func, lo, hi, points=32):
    grid = np.linspace(lo, hi, points)
    values = np.array([func(p) for p in grid])
    if not np.all(np.diff(values) > 0.0):
        logger.warning("normalization is not monotone on [%.12g, %.12g]", lo, hi)


def _solve_single_segment(T, eps_max, omega):
    tilde_phi = inverse_on_time(T, eps_max, omega)
    if tilde_phi is None:
        return OnOffSolution.infeasible(T, 0, eps_max, omega)
    return _solution(T, 0, 0.0, tilde_phi, eps_max, omega)


def _solve_critical(T, n, omega):
    """Closed-form optimal final angle with Brent on phi_n (eps_max = omega)."""

    def duration(phi_n):
        return normalization_T(n, phi_n, optimal_tilde_phi(phi_n), omega, omega)

    lo = 2.0 * math.atan(2.0)
    if duration(lo) > T:
        return OnOffSolution.infeasible(T, n, omega, omega)
    gap = 1e-3
    while duration(math.pi - gap) <= T:
        gap *= 0.5
        if gap < 1e-300:
            return OnOffSolution.infeasible(T, n, omega, omega)
    hi = math.pi - gap
    _check_monotone(duration, lo, hi)
    phi_n = brentq(lambda p: duration(p) - T, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return _solution(T, n, phi_n, optimal_tilde_phi(phi_n), omega, omega)


def solve_fixed_n_numeric(T, n, eps_max, omega=1.0):
    """
    Maximize n * squeeze(phi_n) + squeeze(tilde_phi) over phi_n, with tilde_phi
    fixed by spending the remaining time budget on the final on-segment.
    """
    if n == 0:
        return _solve_single_segment(T, eps_max, omega)
    ratio = _ratio(eps_max, omega)
    upper = math.pi if _is_critical(ratio) else TWO_PI

    def cycle(phi):
        return on_time(phi, eps_max, omega) + off_time(phi, omega)

    def final_angle(phi):
        residual = T - n * cycle(phi)
        if residual < 0.0:
            return None
        return inverse_on_time(residual, eps_max, omega)

    def gain(phi):
        tilde = final_angle(phi)
        if tilde is None:
            return -math.inf
        return r_pred(n, phi, tilde, eps_max, omega)

    grid = np.linspace(0.0, upper, 257)[1:-1]
    values = np.array([gain(p) for p in grid])
    if not np.any(np.isfinite(values)):
        return OnOffSolution.infeasible(T, n, eps_max, omega)
    best = int(np.argmax(values))
    lo = grid[best - 1] if best > 0 else grid[0] * 1e-3
    hi = grid[best + 1] if best + 1 < grid.size else upper - (upper - grid[-1]) * 1e-3
    result = minimize_scalar(lambda p: -gain(p), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    phi_n = float(result.x) if -result.fun >= values[best] else float(grid[best])
    tilde = final_angle(phi_n)
    if tilde is None:
        return OnOffSolution.infeasible(T, n, eps_max, omega)
    return _solution(T, n, phi_n, tilde, eps_max, omega)


def solve_fixed_n(T, n, eps_max=1.0, omega=1.0):
    """Best protocol with exactly n full cycles within total time T."""
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T!r}")
    if n < 0:
        raise DomainError(f"winding number must be non-negative, got {n!r}")
    ratio = _ratio(eps_max, omega)
    if n == 0:
        return _solve_single_segment(T, eps_max, omega)
    if _is_critical(ratio):
        return _solve_critical(T, n, omega)
    return solve_fixed_n_numeric(T, n, eps_max, omega)


def optimize_n(T, eps_max=1.0, omega=1.0, n_max=None):
    """
    Scan winding numbers 0..n_max and keep the largest predicted squeezing.
    Ties within 1e-9 keep the smaller n.
    """
    if n_max is None:
        n_max = int(0.3 * omega * T) + 2
    scan = [solve_fixed_n(T, n, eps_max, omega) for n in range(n_max + 1)]
    best = None
    for sol in scan:
        if not sol.feasible:
            continue
        if best is None or sol.r_pred > best.r_pred + TIE_TOLERANCE:
            best = sol
        elif abs(sol.r_pred - best.r_pred) <= TIE_TOLERANCE:
            logger.info("tie at T=%.12g between n=%d and n=%d", T, best.n, sol.n)
    if best is None:
        best = scan[0]
    return best, scan


def critical_time(n, eps_max=1.0, omega=1.0, T_lo=None, T_hi=None):
    """Locate the T at which protocols with n and n+1 cycles squeeze equally."""

    def advantage(T):
        upper = solve_fixed_n(T, n + 1, eps_max, omega)
        lower = solve_fixed_n(T, n, eps_max, omega)
        if not upper.feasible:
            return -math.inf
        if not lower.feasible:
            return math.inf
        return upper.r_pred - lower.r_pred

    if T_lo is None:
        T_lo = (n + 1) * math.pi / omega
        while advantage(T_lo) == -math.inf:
            T_lo *= 1.01
            if T_lo > 1e6 / omega:
                raise DomainError(f"no lower bracket for the {n}->{n + 1} transition")
        if advantage(T_lo) > 0.0:
            raise DomainError(f"{n + 1} cycles already win where they first become feasible")
    if T_hi is None:
        T_hi = T_lo
        while advantage(T_hi) <= 0.0:
            T_hi *= 1.05
            if T_hi > 1e6 / omega:
                raise DomainError(f"no upper bracket for the {n}->{n + 1} transition")
    return brentq(advantage, T_lo, T_hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def _phi_star_residual(phi):
    half = 0.5 * phi
    return math.tan(half) * (1.0 + math.log(math.cos(half))) + math.pi - half


@lru_cache(maxsize=None)
def phi_star():
    """Asymptotically optimal switching angle (about 2.664)."""
    return brentq(_phi_star_residual, 2.0, 3.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _rate(phi, eps_max, omega):
    return squeeze(phi, eps_max, omega) / (omega * (on_time(phi, eps_max, omega) + off_time(phi, omega)))


@lru_cache(maxsize=256)
def gamma_exponent(eps_max=1.0, omega=1.0):
    """Dimensionless rate Gamma with F growing like exp(Gamma * omega * T)."""
    ratio = _ratio(eps_max, omega)
    if ratio == 0.0:
        return 0.0
    edge = 1e-9
    grid = np.linspace(edge, math.pi - edge, 201)
    values = np.array([_rate(p, eps_max, omega) for p in grid])
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    result = minimize_scalar(
        lambda p: -_rate(p, eps_max, omega), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
    )
    return 4.0 * max(-result.fun, values[best])


def n_opt_asymptotic(T, omega=1.0):
    """Optimal winding number for large T, about 0.1690 * omega * T."""
    half = 0.5 * phi_star()
    return omega * T / (math.tan(half) + math.pi - half)


def r_max_asymptotic(T, omega=1.0):
    """Largest squeezing for large T, about 0.2436 * omega * T."""
    return omega * T / math.tan(0.5 * phi_star())
