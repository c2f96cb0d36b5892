"""
Dissipative Gaussian dynamics of the mode under a thermal Lindblad dissipator.

The second moments (vxx, vpp, vxp) obey an affine linear system. The
determinant of the covariance matrix is carried as its own ODE component:
forming vxx*vpp - vxp^2 directly cancels catastrophically once e^{4r}
approaches the inverse machine epsilon.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from critical_metrology.exceptions import DomainError, IntegrationError
from critical_metrology.utils import build_dataset, dataset_to_csv, format_full
from dynamics.integrator import drive
from dynamics.simulate import planner_for
from dynamics.state import IntegratorConfig

logger = logging.getLogger(__name__)

VXX, VPP, VXP, DET, A_ACC, B_ACC = range(6)
VACUUM = (0.5, 0.5, 0.0)
COVARIANCE_HEADERS = ["t", "vxx", "vpp", "vxp", "mu", "r", "phi", "qfi_bound_running"]


@dataclass(frozen=True)
class OpenParams:
    gamma: float = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        if self.gamma < 0.0 or self.nbar < 0.0:
            raise DomainError(f"gamma and nbar must be non-negative, got {self.gamma!r}, {self.nbar!r}")

    @property
    def drive(self):
        """Thermal drive gamma (2 nbar + 1) / 2 of the diagonal moments."""
        return 0.5 * self.gamma * (2.0 * self.nbar + 1.0)


@dataclass(frozen=True)
class CovarianceState:
    t: float
    vxx: float
    vpp: float
    vxp: float
    mu: float
    r: float
    phi: float
    a_acc: float = 0.0
    b_acc: float = 0.0

    @classmethod
    def from_moments(cls, t, vxx, vpp, vxp, det=None, phi=None, a_acc=0.0, b_acc=0.0):
        """Extract (mu, r, phi) from the moments; ``det`` overrides vxx*vpp - vxp^2."""
        if det is None:
            det = vxx * vpp - vxp * vxp
        mu = math.sqrt(det)
        x, y = plane_point(vxx, vpp, vxp, mu)
        if phi is None:
            phi = math.atan2(y, x) % (2.0 * math.pi)
        return cls(t, vxx, vpp, vxp, mu, 0.5 * math.asinh(math.hypot(x, y)), phi, a_acc, b_acc)

    @property
    def sinh2r(self):
        return math.sinh(2.0 * self.r)

    @property
    def det(self):
        return self.mu * self.mu


def covariance_from(mu, r, phi):
    """Return (vxx, vpp, vxp) of the squeezed thermal state (mu, r, phi)."""
    c, s = math.cosh(2.0 * r), math.sinh(2.0 * r)
    return mu * (c - s * math.cos(phi)), mu * (c + s * math.cos(phi)), mu * s * math.sin(phi)


def plane_point(vxx, vpp, vxp, mu):
    """Phase-plane point (sinh 2r cos phi, sinh 2r sin phi) of the moments."""
    return 0.5 * (vpp - vxx) / mu, vxp / mu


def cov_rates(state, eps, params, open_params):
    """Rates (dvxx, dvpp, dvxp) of the covariance moments."""
    omega, gamma, drive_term = params.omega, open_params.gamma, open_params.drive
    return (
        -gamma * state.vxx + 2.0 * omega * state.vxp + drive_term,
        -gamma * state.vpp + (2.0 * eps - 2.0 * omega) * state.vxp + drive_term,
        (eps - omega) * state.vxx + omega * state.vpp - gamma * state.vxp,
    )


def _rhs(z, eps, omega, gamma, drive_term):
    vxx, vpp, vxp, det = z[VXX], z[VPP], z[VXP], z[DET]
    mu = math.sqrt(det)
    x, y = plane_point(vxx, vpp, vxp, mu)
    sinh2 = x * x + y * y
    return np.array(
        [
            -gamma * vxx + 2.0 * omega * vxp + drive_term,
            -gamma * vpp + (2.0 * eps - 2.0 * omega) * vxp + drive_term,
            (eps - omega) * vxx + omega * vpp - gamma * vxp,
            -2.0 * gamma * det + drive_term * (vxx + vpp),
            sinh2,
            8.0 * mu / (2.0 * mu + 1.0) * sinh2,
        ]
    )


def _plane(z):
    return plane_point(z[VXX], z[VPP], z[VXP], math.sqrt(z[DET]))


def integrate_open(params, open_params, schedule, T, config=None, initial=VACUUM):
    """Integrate the covariance moments from ``initial`` (the vacuum by default) over [0, T]."""
    if not T > 0.0:
        raise DomainError(f"horizon must be positive, got {T!r}")
    config = config or IntegratorConfig.from_settings()
    schedule.validate(params.omega)
    vxx, vpp, vxp = initial
    z0 = np.array([vxx, vpp, vxp, vxx * vpp - vxp * vxp, 0.0, 0.0])
    omega, gamma, drive_term = params.omega, open_params.gamma, open_params.drive
    record = drive(
        lambda z, eps: _rhs(z, eps, omega, gamma, drive_term),
        z0,
        _plane,
        planner_for(schedule, T),
        T,
        config,
    )
    states = tuple(
        CovarianceState.from_moments(
            float(t), z[VXX], z[VPP], z[VXP], det=z[DET], phi=float(phi), a_acc=z[A_ACC], b_acc=z[B_ACC]
        )
        for t, z, phi in zip(record.times, record.states, record.phi)
    )
    logger.debug("open integration gamma=%g nbar=%g T=%g: mu=%.6g r=%.6g", gamma, open_params.nbar, T,
                 states[-1].mu, states[-1].r)
    return states


def instantaneous_qfi(state):
    """Rotation-generator QFI 8 mu / (2 mu + 1) sinh^2 2r of a squeezed thermal state."""
    return 8.0 * state.mu / (2.0 * state.mu + 1.0) * state.sinh2r**2


def qfi_open_bound(states, T):
    """Upper bound 4 T int_0^T sinh^2 2r dt on the dissipative QFI."""
    return 4.0 * T * states[-1].a_acc


def qfi_open_bound_tight(states, T):
    """Sharper bound T int_0^T F_inst dt."""
    return T * states[-1].b_acc


def mu_r_phi_rates(mu, r, phi, eps, params, open_params):
    """Rates of (mu, r, phi); singular at r = 0."""
    drive_term = open_params.drive
    two_r = 2.0 * r
    return (
        -open_params.gamma * mu + drive_term * math.cosh(two_r),
        0.5 * eps * math.sin(phi) - drive_term * math.sinh(two_r) / (2.0 * mu),
        2.0 * params.omega - eps + eps * math.cos(phi) / math.tanh(two_r),
    )


def integrate_mu_r_phi(params, open_params, schedule, T, initial, times, rtol=1e-12, atol=1e-14):
    """
    Integrate the (mu, r, phi) form segment by segment and return its values at
    ``times`` as an array with rows (mu, r, phi).
    """
    times = np.asarray(times, dtype=float)
    out = np.full((times.size, 3), np.nan)
    y = np.asarray(initial, dtype=float)
    for start, stop, eps_of_t in schedule.segments(T):
        solution = solve_ivp(
            lambda t, w, eps_of_t=eps_of_t: mu_r_phi_rates(w[0], w[1], w[2], eps_of_t(t), params, open_params),
            (start, stop),
            y,
            method="DOP853",
            dense_output=True,
            rtol=rtol,
            atol=atol,
        )
        if not solution.success:
            raise IntegrationError(f"mu-r-phi integration failed: {solution.message}")
        mask = (times >= start) & (times <= stop)
        if np.any(mask):
            out[mask] = solution.sol(times[mask]).T
        y = solution.y[:, -1]
    return out


def covariance_to_csv(states):
    rows = (
        [s.t, s.vxx, s.vpp, s.vxp, s.mu, s.r, s.phi, 4.0 * s.t * s.a_acc]
        for s in states
    )
    return dataset_to_csv(build_dataset(COVARIANCE_HEADERS, rows, formatter=format_full))
