"""
Closed-system equations of motion in the regular (x, y) chart,
x + iy = sinh 2r * e^{i phi}.
"""
import math
from collections import namedtuple

import numpy as np

from critical_metrology.exceptions import DomainError, InvalidStateError

# Below this value of x^2 + y^2 the state is treated as the vacuum.
VACUUM_RHO2 = 1e-12

Rates = namedtuple("Rates", "dx dy dtheta dphi dj_re dj_im da")


def closed_rhs(z, eps, omega):
    """Return the time derivative of the integrated vector (x, y, theta, J, A, S)."""
    x, y, theta = z[0], z[1], z[2]
    rho2 = x * x + y * y
    rho = math.sqrt(rho2)
    gap = 2.0 * omega - eps
    if rho2 < VACUUM_RHO2:
        dtheta = 0.5 * gap
    else:
        dtheta = -eps * x / rho2
    return np.array(
        [
            -gap * y,
            gap * x + eps * math.sqrt(1.0 + rho2),
            dtheta,
            rho * math.cos(theta),
            rho * math.sin(theta),
            rho2,
            rho,
        ]
    )


def eom_rates(state, eps, params):
    """
    Evaluate all seven rates at ``state``.

    At the vacuum the theta rate takes its limit (2 omega - eps) / 2 and the
    phase rate is frozen at zero.
    """
    omega = params.omega
    values = (state.x, state.y, state.theta)
    if not all(math.isfinite(v) for v in values):
        raise InvalidStateError(f"non-finite state at t={state.t!r}: {values!r}")
    if not 0.0 <= eps <= omega * (1.0 + 1e-12):
        raise DomainError(f"eps={eps!r} outside the symmetric phase [0, omega={omega!r}]")
    dx, dy, dtheta, dj_re, dj_im, da, _ = closed_rhs(np.array([state.x, state.y, state.theta]), eps, omega)
    rho2 = state.x * state.x + state.y * state.y
    if rho2 < VACUUM_RHO2:
        dphi = 0.0
    else:
        dphi = (2.0 * omega - eps) + eps * state.x * math.sqrt(1.0 + rho2) / rho2
    return Rates(dx, dy, dtheta, dphi, dj_re, dj_im, da)
