"""
Batch audits that run schedules and collect every bound report.
"""
import logging

import numpy as np

from critical_metrology.exceptions import DomainError
from critical_metrology.utils import load_csv
from dynamics.simulate import integrate
from dynamics.state import SystemParams
from onoff.optimizer import solve_fixed_n
from schedules.laws import from_onoff_solution
from schedules.sampling import random_admissible, random_monotone

from .checks import BoundReport, lemma_cycle_check, thm1_check, thm1_poly_bound, thm4_check

logger = logging.getLogger(__name__)


def audit_trajectory(trajectory, eps_max, omega=1.0):
    reports = [thm1_check(trajectory, omega), *lemma_cycle_check(trajectory, eps_max, omega)]
    if eps_max < omega:
        reports.extend(thm4_check(trajectory, eps_max, omega))
    return reports


def audit_random(count, seed=0, T_span=(1.0, 12.0), eps_max=1.0, config=None):
    """Polynomial and per-cycle bounds on ``count`` seeded random admissible schedules."""
    params = SystemParams()
    reports = []
    for index in range(count):
        rng = np.random.default_rng([seed, index])
        T = float(rng.uniform(*T_span))
        schedule = random_admissible(rng, T, eps_max)
        reports.extend(audit_trajectory(integrate(params, schedule, T, config), eps_max))
    logger.info("audited %d random schedules: %d reports", count, len(reports))
    return reports


def audit_monotone(count, seed=0, T_span=(1.0, 40.0), eps_max=1.0, config=None):
    """A non-decreasing control never completes a winding; each run reports its winding against 0."""
    params = SystemParams()
    reports = []
    for index in range(count):
        rng = np.random.default_rng([seed, index])
        T = float(rng.uniform(*T_span))
        trajectory = integrate(params, random_monotone(rng, T, eps_max), T, config)
        reports.append(BoundReport("monotone", index, 0.0, float(trajectory.winding)))
    return reports


def audit_fixed_n(T_values, windings, eps_max, config=None):
    """Audit the optimal fixed-n on-off protocols on a T grid."""
    params = SystemParams()
    reports = []
    for n in windings:
        for T in T_values:
            solution = solve_fixed_n(T, n, eps_max)
            if not solution.feasible:
                logger.info("skipping infeasible protocol n=%d at T=%.6g", n, T)
                continue
            trajectory = integrate(params, from_onoff_solution(solution), T, config)
            reports.extend(audit_trajectory(trajectory, eps_max))
    return reports


def audit_csv(path, omega=1.0):
    """Polynomial bound for every row of a closed-system sweep CSV holding T, winding and qfi."""
    dataset = load_csv(path)
    missing = {"T", "winding", "qfi"} - set(dataset.headers or [])
    if missing:
        raise DomainError(f"columns {sorted(missing)} missing from {path}")
    reports = []
    for row in dataset.dict:
        if row.get("qfi") in ("", None) or row.get("winding") in ("", None):
            continue
        T, n = float(row["T"]), int(row["winding"])
        reports.append(BoundReport("thm1", n, thm1_poly_bound(T, n, omega), float(row["qfi"])))
    return reports
