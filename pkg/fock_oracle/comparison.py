import logging
import math
from dataclasses import dataclass

from dynamics.simulate import integrate
from qfi.engine import qfi_from_trajectory

from .evolution import evolve, qfi_fd, with_truncation_growth
from .states import FockVector, moments, phase_state_of

logger = logging.getLogger(__name__)

AGREEMENT = 1e-3


def _relative(a, b, floor=0.0):
    scale = max(abs(a), abs(b), floor)
    return abs(a - b) / scale if scale > 0.0 else 0.0


def _plane(r, phi):
    return math.sinh(2.0 * r) * complex(math.cos(phi), math.sin(phi))


@dataclass(frozen=True)
class OracleComparison:
    r_gaussian: float
    r_fock: float
    phi_gaussian: float
    phi_fock: float
    number_gaussian: float
    number_fock: float
    qfi_gaussian: float
    qfi_fock: float

    @property
    def errors(self):
        return {
            "r": _relative(self.r_gaussian, self.r_fock, 1e-6),
            # the phase is undefined near the vacuum, so compare plane points
            "plane": abs(_plane(self.r_gaussian, self.phi_gaussian) - _plane(self.r_fock, self.phi_fock))
            / max(1.0, math.sinh(2.0 * self.r_gaussian)),
            "number": _relative(self.number_gaussian, self.number_fock),
            "qfi": _relative(self.qfi_gaussian, self.qfi_fock),
        }

    @property
    def max_error(self):
        return max(self.errors.values())

    @property
    def agrees(self):
        return self.max_error < AGREEMENT

    def to_dict(self):
        return {
            "r_gaussian": self.r_gaussian,
            "r_fock": self.r_fock,
            "phi_gaussian": self.phi_gaussian,
            "phi_fock": self.phi_fock,
            "number_gaussian": self.number_gaussian,
            "number_fock": self.number_fock,
            "qfi_gaussian": self.qfi_gaussian,
            "qfi_fock": self.qfi_fock,
            "errors": self.errors,
            "agrees": self.agrees,
        }


def compare_with_gaussian(params, schedule, T, config=None, dim=None):
    """Run the Gaussian integrator and the Fock oracle on the same schedule."""
    trajectory = integrate(params, schedule, T, config)
    final = trajectory.final
    psi = with_truncation_growth(lambda size: evolve(FockVector.vacuum(size), schedule, T, params), dim)
    r_fock, phi_fock = phase_state_of(psi)
    _, number = moments(psi)
    comparison = OracleComparison(
        r_gaussian=final.r,
        r_fock=r_fock,
        phi_gaussian=math.atan2(final.y, final.x) % (2.0 * math.pi),
        phi_fock=phi_fock,
        number_gaussian=math.sinh(final.r) ** 2,
        number_fock=number,
        qfi_gaussian=qfi_from_trajectory(trajectory).value,
        qfi_fock=qfi_fd(schedule, T, params, dim=psi.dim),
    )
    logger.info("oracle comparison T=%.6g %s: max error %.3g", T, schedule.kind, comparison.max_error)
    return comparison
