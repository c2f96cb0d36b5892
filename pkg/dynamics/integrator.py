"""
Piecewise adaptive integration with phase unwrapping and event location.

The driver is shared by the closed-system (x, y) integrator and the
open-system covariance integrator. Callers supply the right-hand side, a map
from the integrated vector to the phase plane (sinh 2r cos phi, sinh 2r sin phi)
and a planner that says which control applies from the current instant on.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from critical_metrology.exceptions import (
    EventLocalizationError,
    IntegrationError,
    InvalidStateError,
    NumericOverflowError,
)

from .equations import VACUUM_RHO2
from .state import TWO_PI

logger = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e280
# slack used when deciding which side of a switching angle the phase sits on
PHASE_SLACK = 1e-12


def wrap(angle):
    """Map an angle difference to [-pi, pi)."""
    return (angle + math.pi) % TWO_PI - math.pi


def cycle_position(phi):
    """Return (winding, phi mod 2pi) with values within slack of 2pi snapped forward."""
    k = math.floor(phi / TWO_PI)
    rest = phi - TWO_PI * k
    if rest >= TWO_PI - PHASE_SLACK:
        return k + 1, 0.0
    return k, max(rest, 0.0)


def sample_grid(T, stride):
    """Return sample instants 0, stride, 2 stride, ... ending exactly at T."""
    count = int(math.floor(T / stride + 1e-9))
    grid = stride * np.arange(count + 1, dtype=float)
    if T - grid[-1] > 1e-9 * stride:
        grid = np.append(grid, T)
    else:
        grid[-1] = T
    return grid


class PhaseTracker:
    """
    Continuous unwrapped phase of a point moving in the phase plane.

    Inside the vacuum ball the phase is frozen. On leaving it the phase keeps
    its winding index and takes the new direction, since the vacuum carries no
    phase and a passage through it cannot complete a cycle.
    """

    def __init__(self, plane, cap, min_width):
        self.plane = plane
        self.cap = cap
        self.min_width = min_width
        self.phi = 0.0
        self.angle = 0.0
        self.frozen = True
        self.crossings = []

    @staticmethod
    def inside(point):
        return point[0] * point[0] + point[1] * point[1] < VACUUM_RHO2

    def start(self, z):
        point = self.plane(z)
        if self.inside(point):
            self.frozen = True
        else:
            self.frozen = False
            self.angle = math.atan2(point[1], point[0])
            self.phi = self.angle % TWO_PI

    def advance(self, dense, a, b, target=None):
        """
        Move the tracker from ``a`` to ``b`` along ``dense``.

        Returns the event time if the unwrapped phase reaches ``target`` first,
        otherwise None.
        """
        pending = [b]
        u = a
        while pending:
            v = pending[-1]
            z = dense(v)
            point = self.plane(z)
            if not (self.frozen or self.inside(point)):
                delta = wrap(math.atan2(point[1], point[0]) - self.angle)
                if abs(delta) > self.cap:
                    if v - u <= self.min_width:
                        raise IntegrationError(f"phase could not be unwrapped near t={v!r}")
                    pending.append(0.5 * (u + v))
                    continue
            pending.pop()
            hit = self._accept(dense, u, v, point, target)
            if hit is not None:
                return hit
            u = v
        return None

    def _accept(self, dense, u, v, point, target):
        if self.inside(point):
            self.frozen = True
            return None
        angle = math.atan2(point[1], point[0])
        if self.frozen:
            winding = math.floor(self.phi / TWO_PI)
            self.phi = TWO_PI * winding + angle % TWO_PI
            self.angle = angle
            self.frozen = False
            if target is not None and self.phi >= target:
                return v
            return None

        phi_u, angle_u = self.phi, self.angle
        phi_v = phi_u + wrap(angle - angle_u)

        def offset(tau, level):
            p = self.plane(dense(tau))
            return phi_u + wrap(math.atan2(p[1], p[0]) - angle_u) - level

        limit = phi_v
        event = None
        if target is not None and phi_u < target <= phi_v:
            event = self._locate(offset, u, v, target, "switch")
            limit = target
        first = math.floor(phi_u / TWO_PI) + 1
        last = math.floor(limit / TWO_PI)
        for k in range(first, last + 1):
            level = TWO_PI * k
            if level <= phi_u:
                continue
            tau = v if level == phi_v else self._locate(offset, u, v, level, "crossing")
            self.crossings.append((tau, dense(tau), level))
        if event is not None:
            p = self.plane(dense(event))
            self.phi = target
            self.angle = math.atan2(p[1], p[0])
            return event
        self.phi = phi_v
        self.angle = angle
        return None

    def _locate(self, offset, u, v, level, what):
        try:
            return brentq(offset, u, v, args=(level,), xtol=self.min_width, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise EventLocalizationError(f"could not bracket phase {what} at {level!r} in [{u!r}, {v!r}]") from exc


class ProgrammedPlanner:
    """Follows time segments (start, stop, eps_of_t) of a programmed schedule."""

    def __init__(self, segments):
        self.segments = segments

    def plan(self, t, phi):
        for start, stop, eps_of_t in self.segments:
            if t < stop - 1e-12 * max(1.0, abs(stop)):
                return eps_of_t, stop, None
        start, stop, eps_of_t = self.segments[-1]
        return eps_of_t, stop, None


class FeedbackPlanner:
    """Holds the on-off rule constant until the phase reaches the next switching angle."""

    def __init__(self, rule, T):
        self.rule = rule
        self.T = T

    def plan(self, t, phi):
        winding, rest = cycle_position(phi)
        probe = min(rest + PHASE_SLACK, TWO_PI - PHASE_SLACK)
        eps = self.rule.eval(t, probe, winding)
        if self.rule.is_latched(winding):
            target = None
        elif probe < self.rule.phi_on:
            target = TWO_PI * winding + self.rule.phi_on
        else:
            target = TWO_PI * (winding + 1)
        return (lambda s: eps), self.T, target


@dataclass
class DriveRecord:
    times: np.ndarray
    states: np.ndarray
    phi: np.ndarray
    crossings: list = field(default_factory=list)
    switches: list = field(default_factory=list)


def drive(rhs, z0, plane, planner, T, config):
    """
    Integrate ``rhs(z, eps)`` from z0 over [0, T].

    A fresh DOP853 stepper is started at every segment boundary and every
    located switch so no step straddles a discontinuity of the control.
    """
    z = np.asarray(z0, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidStateError("initial state has non-finite components")
    grid = sample_grid(T, config.output_stride)
    tracker = PhaseTracker(plane, config.phase_step_cap, 1e-13 * max(1.0, T))
    tracker.start(z)
    times, states, phis = [0.0], [z.copy()], [tracker.phi]
    switches = []
    t = 0.0
    while t < T:
        eps_of_t, t_stop, target = planner.plan(t, tracker.phi)
        if t_stop <= t:
            break
        solver = DOP853(
            lambda s, w: rhs(w, eps_of_t(s)),
            t,
            z,
            t_stop,
            max_step=config.max_step,
            rtol=config.rel_tol,
            atol=config.abs_tol,
        )
        while True:
            message = solver.step()
            if solver.status == "failed":
                raise IntegrationError(f"stepper failed at t={solver.t!r}: {message}")
            t_old, t_new = solver.t_old, solver.t
            dense = solver.dense_output()
            inner = grid[(grid > t_old) & (grid <= t_new)]
            checkpoints = [(c, True) for c in inner]
            if not inner.size or inner[-1] != t_new:
                checkpoints.append((t_new, False))
            event = None
            u = t_old
            for c, is_sample in checkpoints:
                event = tracker.advance(dense, u, c, target)
                if event is not None:
                    break
                if is_sample:
                    times.append(float(c))
                    states.append(dense(c))
                    phis.append(tracker.phi)
                u = c
            if event is not None:
                # a sample sitting on the switch belongs to neither stepper's open interval
                if is_sample and c <= event:
                    times.append(float(c))
                    states.append(dense(c))
                    phis.append(tracker.phi)
                logger.debug("control switch at t=%.12g, phi=%.12g", event, tracker.phi)
                switches.append(event)
                t, z = event, dense(event)
                break
            point = plane(solver.y)
            if not np.all(np.isfinite(solver.y)) or math.hypot(point[0], point[1]) > OVERFLOW_LIMIT:
                raise NumericOverflowError(f"sinh 2r exceeded {OVERFLOW_LIMIT:g} at t={t_new!r}")
            if solver.status == "finished":
                t, z = t_stop, solver.y.copy()
                break
    if times[-1] != T:
        times.append(float(T))
        states.append(z.copy())
        phis.append(tracker.phi)
    return DriveRecord(
        times=np.array(times),
        states=np.array(states),
        phi=np.array(phis),
        crossings=tracker.crossings,
        switches=switches,
    )
