import logging

import numpy as np

from critical_metrology.exceptions import DomainError
from critical_metrology.utils import build_dataset, dataset_to_csv, format_full

from .equations import closed_rhs
from .integrator import FeedbackPlanner, ProgrammedPlanner, drive
from .state import A_ACC, J_IM, J_RE, THETA, X, Y, IntegratorConfig, PhaseState, Trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_HEADERS = ["t", "x", "y", "theta", "phi", "r", "j_re", "j_im", "a_acc"]


def planner_for(schedule, T):
    if schedule.is_feedback:
        return FeedbackPlanner(schedule, T)
    return ProgrammedPlanner(schedule.segments(T))


def integrate(params, schedule, T, config=None, initial=(0.0, 0.0)):
    """
    Evolve the vacuum (or an injected state x + iy = sinh 2r e^{i phi}) under
    ``schedule`` over [0, T].
    """
    if not T > 0.0:
        raise DomainError(f"horizon must be positive, got {T!r}")
    config = config or IntegratorConfig.from_settings()
    schedule.validate(params.omega)
    omega = params.omega
    z0 = np.zeros(7)
    z0[X], z0[Y] = initial
    record = drive(
        lambda z, eps: closed_rhs(z, eps, omega),
        z0,
        lambda z: (z[X], z[Y]),
        planner_for(schedule, T),
        T,
        config,
    )
    crossings = tuple(PhaseState.from_vector(t, z, level) for t, z, level in record.crossings)
    trajectory = Trajectory(
        params=params,
        schedule_id=schedule.schedule_id,
        times=record.times,
        states=record.states,
        phi=record.phi,
        crossings=crossings,
        switches=tuple(record.switches),
    )
    logger.debug(
        "integrated %s over T=%.6g: r=%.6g, winding=%d, %d switches",
        schedule.kind,
        T,
        trajectory.final.r,
        trajectory.winding,
        len(record.switches),
    )
    return trajectory


def trajectory_rows(trajectory):
    states = trajectory.states
    r = trajectory.r
    for i, t in enumerate(trajectory.times):
        row = states[i]
        yield [t, row[X], row[Y], row[THETA], trajectory.phi[i], r[i], row[J_RE], row[J_IM], row[A_ACC]]


def trajectory_to_csv(trajectory):
    """Render the trajectory CSV with 17 significant digits per float."""
    dataset = build_dataset(TRAJECTORY_HEADERS, trajectory_rows(trajectory), formatter=format_full)
    return dataset_to_csv(dataset)
