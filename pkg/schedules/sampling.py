"""
Seeded random admissible schedules for property runs.
"""
import numpy as np

from .laws import LinearRamp, PiecewiseConstant


def _durations(rng, T, count):
    return rng.dirichlet(np.ones(count)) * T


def random_admissible(rng, T, eps_max=1.0, pieces=(2, 8)):
    """Piecewise-constant law with a random number of pieces and levels in [0, eps_max]."""
    count = int(rng.integers(pieces[0], pieces[1] + 1))
    levels = rng.uniform(0.0, eps_max, size=count)
    durations = _durations(rng, T, count)
    return PiecewiseConstant(tuple(zip(durations, levels)), eps_max=eps_max)


def random_monotone(rng, T, eps_max=1.0, pieces=(1, 8)):
    """Non-decreasing law: a sorted staircase, or a linear ramp one time in four."""
    if rng.random() < 0.25:
        start, end = np.sort(rng.uniform(0.0, eps_max, size=2))
        return LinearRamp(float(start), float(end), T, eps_max=eps_max)
    count = int(rng.integers(pieces[0], pieces[1] + 1))
    levels = np.sort(rng.uniform(0.0, eps_max, size=count))
    durations = _durations(rng, T, count)
    return PiecewiseConstant(tuple(zip(durations, levels)), eps_max=eps_max)
