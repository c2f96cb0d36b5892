"""
Analytic scaling bounds evaluated as executable checks.
"""
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from critical_metrology.exceptions import DomainError
from critical_metrology.utils import build_dataset, dataset_to_csv
from dynamics.state import TWO_PI, X, Y
from qfi.engine import qfi_from_trajectory

REPORT_HEADERS = ["kind", "cycle", "bound", "observed", "margin", "satisfied"]
RELATIVE_SLACK = 1e-9


@dataclass(frozen=True)
class BoundReport:
    kind: str
    cycle: int
    bound_value: float
    observed_value: float

    @property
    def margin(self):
        return self.bound_value - self.observed_value

    @property
    def satisfied(self):
        return self.margin >= -RELATIVE_SLACK * abs(self.bound_value)

    def to_dict(self):
        return {
            "kind": self.kind,
            "cycle": self.cycle,
            "bound": self.bound_value,
            "observed": self.observed_value,
            "margin": self.margin,
            "satisfied": self.satisfied,
        }


def _envelope_coefficients(n, omega):
    """Coefficients in T of the terminating series 2F1(1/2, -(n+1); 3/2; -omega^2 T^2 / (n+1))."""
    m = n + 1
    coefficients = np.zeros(2 * m + 1)
    for k in range(m + 1):
        coefficients[2 * k] = math.comb(m, k) * (omega * omega / m) ** k / (2 * k + 1)
    return coefficients


def thm1_poly_bound(T, n, omega=1.0):
    """Upper bound 2 T^2 [2F1(1/2, -(n+1); 3/2; -omega^2 T^2/(n+1))]^2 on F at winding n."""
    if n < 0:
        raise DomainError(f"winding number must be non-negative, got {n!r}")
    m = n + 1
    u = (omega * T) ** 2 / m
    series = math.fsum(math.comb(m, k) * u**k / (2 * k + 1) for k in range(m + 1))
    return 2.0 * T * T * series * series


def thm1_poly_coefficients(n, omega=1.0):
    """Coefficients (ascending powers of T) of the polynomial QFI bound."""
    series = _envelope_coefficients(n, omega)
    return 2.0 * P.polymul([0.0, 0.0, 1.0], P.polymul(series, series))


def thm1_leading_coeff(n, omega=1.0):
    """
    Coefficient of T^(4n+6) in two forms: the published expression
    2 omega^(4n+2) / ((2n+3)^2 (n+1)^(2n+1)) and the one obtained by expanding
    the polynomial, 2 omega^(4n+4) / ((2n+3)^2 (n+1)^(2n+2)). They differ in
    the powers of omega and (n+1); both are returned.
    """
    published = 2.0 * omega ** (4 * n + 2) / ((2 * n + 3) ** 2 * (n + 1) ** (2 * n + 1))
    derived = 2.0 * omega ** (4 * n + 4) / ((2 * n + 3) ** 2 * (n + 1) ** (2 * n + 2))
    return published, derived


def thm4_bound(eps_max, n, omega=1.0):
    """Upper bound (1 - eps_max/omega)^-(n+1) on sinh 2r at winding n."""
    ratio = eps_max / omega
    if ratio >= 1.0:
        raise DomainError("the saturation bound is void at eps_max >= omega")
    if ratio < 0.0:
        raise DomainError(f"eps_max must be non-negative, got {eps_max!r}")
    return (1.0 - ratio) ** (-(n + 1))


def _cycles(traj):
    """Yield (k, anchor_time, anchor_cosh2r, times, cosh2r) per completed or running cycle."""
    cosh2r = np.sqrt(1.0 + traj.states[:, X] ** 2 + traj.states[:, Y] ** 2)
    anchors = [(0, float(traj.times[0]), float(cosh2r[0]))]
    for k, crossing in enumerate(traj.crossings, start=1):
        anchors.append((k, crossing.t, math.sqrt(1.0 + crossing.sinh2r**2)))
    for index, (k, t_k, c_k) in enumerate(anchors):
        t_next = anchors[index + 1][1] if index + 1 < len(anchors) else math.inf
        mask = (traj.times >= t_k) & (traj.times < t_next)
        times = traj.times[mask]
        values = cosh2r[mask]
        if math.isfinite(t_next):
            times = np.append(times, t_next)
            values = np.append(values, math.sqrt(1.0 + traj.crossings[index].sinh2r ** 2))
        yield k, t_k, c_k, times, values


def _worst(kind, k, bounds, observed):
    index = int(np.argmin(bounds - observed))
    return BoundReport(kind, k, float(bounds[index]), float(observed[index]))


def lemma_cycle_check(traj, eps_max, omega=1.0):
    """
    Per-cycle bounds between consecutive crossings of Phi = 2k pi:
    cosh 2r(t_k + D) <= (omega^2 D^2 + 1) cosh 2r(t_k), and for eps_max < omega
    cosh 2r <= cosh 2r(t_k) / (1 - eps_max/omega). Each cycle reports its worst
    sampled margin.
    """
    reports = []
    ratio = eps_max / omega
    for k, t_k, c_k, times, values in _cycles(traj):
        if not times.size:
            continue
        delta = times - t_k
        reports.append(_worst("lemma1", k, (omega * omega * delta * delta + 1.0) * c_k, values))
        if ratio < 1.0:
            reports.append(_worst("lemma2", k, np.full(values.shape, c_k / (1.0 - ratio)), values))
    return reports


def thm1_check(traj, omega=1.0):
    """Compare the trajectory's F with the polynomial bound at its final winding."""
    result = qfi_from_trajectory(traj)
    return BoundReport("thm1", result.winding, thm1_poly_bound(result.T, result.winding, omega), result.value)


def thm4_check(traj, eps_max, omega=1.0):
    """Largest sinh 2r seen at each winding count against (1 - eps_max/omega)^-(n+1)."""
    windings = np.floor(traj.phi / TWO_PI).astype(int)
    sinh2r = traj.sinh2r
    reports = []
    for n in np.unique(windings):
        observed = float(np.max(sinh2r[windings == n]))
        reports.append(BoundReport("thm4", int(n), thm4_bound(eps_max, int(n), omega), observed))
    return reports


def reports_to_csv(reports):
    rows = ([r.kind, r.cycle, r.bound_value, r.observed_value, r.margin, r.satisfied] for r in reports)
    return dataset_to_csv(build_dataset(REPORT_HEADERS, rows))
