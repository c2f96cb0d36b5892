import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from django.conf import settings

from critical_metrology.exceptions import DomainError

TWO_PI = 2.0 * math.pi

# Column order of the integrated closed-system state vector.
X, Y, THETA, J_RE, J_IM, A_ACC, S_ACC = range(7)


@dataclass(frozen=True)
class SystemParams:
    """Mode frequency; every computation is evaluated at this reference point."""

    omega: float = 1.0

    def __post_init__(self):
        if not (self.omega > 0.0 and math.isfinite(self.omega)):
            raise DomainError(f"omega must be positive and finite, got {self.omega!r}")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    output_stride: float = 0.05
    phase_step_cap: float = math.pi / 8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "output_stride", "phase_step_cap"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive")
        if self.phase_step_cap > math.pi / 4:
            raise DomainError("phase_step_cap must not exceed pi/4")

    @classmethod
    def from_settings(cls, **overrides):
        """Build a config from the CRITMET_* settings, then apply overrides."""
        values = {
            "rel_tol": settings.CRITMET_RTOL,
            "abs_tol": settings.CRITMET_ATOL,
            "max_step": settings.CRITMET_MAX_STEP,
            "output_stride": settings.CRITMET_OUTPUT_STRIDE,
            "phase_step_cap": settings.CRITMET_PHASE_STEP_CAP,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_stride(self, output_stride):
        return IntegratorConfig(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_step=self.max_step,
            output_stride=output_stride,
            phase_step_cap=self.phase_step_cap,
        )


@dataclass(frozen=True)
class PhaseState:
    t: float
    x: float
    y: float
    theta: float
    phi_unwrapped: float
    j_re: float = 0.0
    j_im: float = 0.0
    a_acc: float = 0.0
    s_acc: float = 0.0

    @classmethod
    def from_vector(cls, t, vector, phi):
        return cls(
            t=float(t),
            x=float(vector[X]),
            y=float(vector[Y]),
            theta=float(vector[THETA]),
            phi_unwrapped=float(phi),
            j_re=float(vector[J_RE]),
            j_im=float(vector[J_IM]),
            a_acc=float(vector[A_ACC]),
            s_acc=float(vector[S_ACC]),
        )

    @property
    def sinh2r(self):
        return math.hypot(self.x, self.y)

    @property
    def r(self):
        return squeezing_of(self)

    @property
    def winding(self):
        return math.floor(self.phi_unwrapped / TWO_PI)


def squeezing_of(state):
    """Return r = asinh(sqrt(x^2 + y^2)) / 2."""
    return 0.5 * math.asinh(math.hypot(state.x, state.y))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Sampled closed-system evolution.

    ``states`` holds one row per sample in the column order X..S_ACC and
    ``phi`` the unwrapped phase at the same instants. ``crossings`` are the
    exact states where the unwrapped phase reaches 2k*pi for k >= 1.
    """

    params: SystemParams
    schedule_id: str
    times: np.ndarray
    states: np.ndarray
    phi: np.ndarray
    crossings: tuple = field(default=())
    switches: tuple = field(default=())

    @cached_property
    def samples(self):
        return tuple(PhaseState.from_vector(t, row, p) for t, row, p in zip(self.times, self.states, self.phi))

    @cached_property
    def final(self):
        return PhaseState.from_vector(self.times[-1], self.states[-1], self.phi[-1])

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def winding(self):
        return winding_of(self)

    @property
    def sinh2r(self):
        return np.hypot(self.states[:, X], self.states[:, Y])

    @property
    def r(self):
        return 0.5 * np.arcsinh(self.sinh2r)


def winding_of(trajectory):
    """Return floor(Phi_final / 2pi)."""
    return math.floor(float(trajectory.phi[-1]) / TWO_PI)
