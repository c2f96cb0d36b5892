"""
Control laws eps(t) for the driven mode.

Time-programmed laws (constant, piecewise constant, linear ramp) depend on t
only. The phase-feedback on-off law depends on the current phase and winding
only. All laws are immutable values.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from critical_metrology.exceptions import DomainError, ScheduleError
from critical_metrology.utils import canonical_json

TWO_PI = 2.0 * math.pi
_EDGE = 1e-12


class Schedule:
    """Common behaviour of every control law."""

    kind = None
    is_feedback = False

    @property
    def horizon(self):
        """Return the end of the programmed time axis, or None when unbounded."""
        return None

    @property
    def schedule_id(self):
        return canonical_json(self.to_dict())

    def levels(self):
        """Return every control value the law can emit."""
        raise NotImplementedError

    def eval(self, t, phi_mod=0.0, winding=0):
        raise NotImplementedError

    def segments(self, T):
        """Return (start, stop, eps_of_t) pieces covering [0, T]."""
        raise ScheduleError(f"{self.kind} schedules have no programmed segments")

    def to_dict(self):
        raise NotImplementedError

    def validate(self, omega):
        """Check the symmetric-phase constraint 0 <= eps <= eps_max <= omega."""
        if self.eps_max > omega * (1.0 + _EDGE):
            raise ScheduleError(
                f"eps_max={self.eps_max!r} exceeds omega={omega!r}: "
                "the symmetric phase requires 0 <= eps <= omega"
            )
        for value in self.levels():
            if value < 0.0 or value > self.eps_max * (1.0 + _EDGE) + _EDGE:
                raise ScheduleError(
                    f"control value {value!r} outside [0, eps_max={self.eps_max!r}]: "
                    "the symmetric phase requires 0 <= eps <= omega"
                )
        return self

    def _check_time(self, t):
        horizon = self.horizon
        if t < -_EDGE or (horizon is not None and t > horizon * (1.0 + _EDGE) + _EDGE):
            raise DomainError(f"t={t!r} outside the schedule horizon [0, {horizon!r}]")


def _ceiling(eps_max, *values):
    return float(max(values) if eps_max is None else eps_max)


@dataclass(frozen=True)
class Constant(Schedule):
    eps: float
    eps_max: float = None

    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "eps_max", _ceiling(self.eps_max, self.eps))

    def levels(self):
        return [self.eps]

    def eval(self, t, phi_mod=0.0, winding=0):
        self._check_time(t)
        return self.eps

    def segments(self, T):
        eps = self.eps
        return [(0.0, T, lambda t: eps)]

    def to_dict(self):
        return {"kind": self.kind, "eps": self.eps, "eps_max": self.eps_max}


@dataclass(frozen=True)
class PiecewiseConstant(Schedule):
    pieces: tuple = field(default=())
    eps_max: float = None

    kind = "piecewise"

    def __post_init__(self):
        pieces = tuple((float(d), float(e)) for d, e in self.pieces)
        if not pieces:
            raise ScheduleError("piecewise schedule needs at least one segment")
        if any(d <= 0.0 for d, _ in pieces):
            raise ScheduleError("piecewise segment durations must be positive")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "eps_max", _ceiling(self.eps_max, *(e for _, e in pieces)))

    @property
    def horizon(self):
        return math.fsum(d for d, _ in self.pieces)

    @property
    def boundaries(self):
        return np.concatenate([[0.0], np.cumsum([d for d, _ in self.pieces])])

    def levels(self):
        return [e for _, e in self.pieces]

    def eval(self, t, phi_mod=0.0, winding=0):
        self._check_time(t)
        edges = self.boundaries[1:-1]
        index = int(np.searchsorted(edges, t, side="right"))
        return self.pieces[index][1]

    def segments(self, T):
        horizon = self.horizon
        if T > horizon * (1.0 + 1e-9):
            raise ScheduleError(f"horizon T={T!r} exceeds the programmed duration {horizon!r}")
        pieces = []
        start = 0.0
        for duration, eps in self.pieces:
            stop = min(start + duration, T)
            if stop > start:
                pieces.append((start, stop, lambda t, eps=eps: eps))
            start += duration
            if start >= T:
                break
        # snap the last edge so the pieces cover exactly [0, T]
        first, _, eps_of_t = pieces[-1]
        pieces[-1] = (first, T, eps_of_t)
        return pieces

    def to_dict(self):
        return {
            "kind": self.kind,
            "segments": [[d, e] for d, e in self.pieces],
            "eps_max": self.eps_max,
        }


@dataclass(frozen=True)
class LinearRamp(Schedule):
    eps_start: float
    eps_end: float
    T: float
    eps_max: float = None

    kind = "ramp"

    def __post_init__(self):
        if self.T <= 0.0:
            raise ScheduleError("ramp duration must be positive")
        object.__setattr__(self, "eps_max", _ceiling(self.eps_max, self.eps_start, self.eps_end))

    @property
    def horizon(self):
        return self.T

    def levels(self):
        return [self.eps_start, self.eps_end]

    def _value(self, t):
        fraction = min(max(t / self.T, 0.0), 1.0)
        return self.eps_start + (self.eps_end - self.eps_start) * fraction

    def eval(self, t, phi_mod=0.0, winding=0):
        self._check_time(t)
        return self._value(t)

    def segments(self, T):
        if T > self.T * (1.0 + 1e-9):
            raise ScheduleError(f"horizon T={T!r} exceeds the ramp duration {self.T!r}")
        return [(0.0, T, self._value)]

    def to_dict(self):
        return {
            "kind": self.kind,
            "eps_start": self.eps_start,
            "eps_end": self.eps_end,
            "T": self.T,
            "eps_max": self.eps_max,
        }


@dataclass(frozen=True)
class PhaseFeedbackOnOff(Schedule):
    """
    eps = eps_on while phi mod 2pi lies in [0, phi_on), otherwise 0.

    Once the winding reaches ``cycle_cap`` the control latches at eps_on, which
    realizes the final on-segment of a solved protocol.
    """

    phi_on: float
    eps_on: float
    cycle_cap: int = None
    eps_max: float = None

    kind = "onoff_feedback"
    is_feedback = True

    def __post_init__(self):
        if not 0.0 < self.phi_on < TWO_PI:
            raise ScheduleError(f"phi_on={self.phi_on!r} must lie in (0, 2pi)")
        if self.cycle_cap is not None and self.cycle_cap < 0:
            raise ScheduleError("cycle_cap must be non-negative")
        object.__setattr__(self, "eps_max", _ceiling(self.eps_max, self.eps_on))

    def levels(self):
        return [0.0, self.eps_on]

    def is_latched(self, winding):
        return self.cycle_cap is not None and winding >= self.cycle_cap

    def eval(self, t, phi_mod=0.0, winding=0):
        if not 0.0 <= phi_mod < TWO_PI:
            raise DomainError(f"phi_mod={phi_mod!r} outside [0, 2pi)")
        if self.is_latched(winding) or phi_mod < self.phi_on:
            return self.eps_on
        return 0.0

    def to_dict(self):
        return {
            "kind": self.kind,
            "phi_on": self.phi_on,
            "eps_on": self.eps_on,
            "cycle_cap": self.cycle_cap,
            "eps_max": self.eps_max,
        }


def is_monotone(schedule, resolution=1000):
    """Return True if eps is non-decreasing on a grid of ``resolution`` points."""
    if schedule.is_feedback:
        return False
    horizon = schedule.horizon
    if horizon is None:
        return True
    grid = np.linspace(0.0, horizon, max(int(resolution), 2))
    values = np.array([schedule.eval(t) for t in grid])
    return bool(np.all(np.diff(values) >= 0.0))


def from_onoff_solution(sol):
    """
    Realize a solved on-off protocol as programmed segments: n repetitions of
    (on, off) followed by the final on-segment.
    """
    if not sol.feasible:
        raise ScheduleError(f"on-off solution for n={sol.n}, T={sol.T!r} is infeasible")
    pieces = []
    for _ in range(sol.n):
        pieces.append((sol.on_time, sol.eps_max))
        pieces.append((sol.off_time, 0.0))
    pieces.append((sol.final_time, sol.eps_max))
    pieces = [(d, e) for d, e in pieces if d > 0.0]
    return PiecewiseConstant(tuple(pieces), eps_max=sol.eps_max)


def from_onoff_feedback(sol):
    """Realize a solved protocol as the phase-feedback rule latched after n cycles."""
    if not sol.feasible:
        raise ScheduleError(f"on-off solution for n={sol.n}, T={sol.T!r} is infeasible")
    phi_on = sol.phi_n if sol.n > 0 else math.pi
    return PhaseFeedbackOnOff(phi_on=phi_on, eps_on=sol.eps_max, cycle_cap=sol.n, eps_max=sol.eps_max)


def schedule_from_dict(data):
    """Build a schedule from its JSON literal (frequencies in units of omega)."""
    if not isinstance(data, dict):
        raise ScheduleError("schedule literal must be a JSON object")
    kind = data.get("kind")
    try:
        if kind == Constant.kind:
            return Constant(float(data["eps"]), eps_max=data.get("eps_max"))
        if kind == PiecewiseConstant.kind:
            return PiecewiseConstant(tuple(tuple(s) for s in data["segments"]), eps_max=data.get("eps_max"))
        if kind == LinearRamp.kind:
            return LinearRamp(
                float(data["eps_start"]), float(data["eps_end"]), float(data["T"]), eps_max=data.get("eps_max")
            )
        if kind == PhaseFeedbackOnOff.kind:
            cap = data.get("cycle_cap")
            return PhaseFeedbackOnOff(
                float(data["phi_on"]),
                float(data.get("eps_on", 1.0)),
                cycle_cap=None if cap is None else int(cap),
                eps_max=data.get("eps_max"),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScheduleError(f"malformed {kind} schedule literal: {exc}") from exc
    raise ScheduleError(f"unknown schedule kind {kind!r}")


