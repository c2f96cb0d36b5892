"""
Truncated number-basis state vectors and their Gaussian moments.
"""
import math
from dataclasses import dataclass

import numpy as np

from critical_metrology.exceptions import DomainError, TruncationError

TAIL_FRACTION = 0.1
TAIL_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class FockVector:
    """Amplitudes c_n of |psi> = sum c_n |n> for n < dim."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 1 or amplitudes.size < 4:
            raise DomainError("a Fock vector needs at least 4 levels")
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def vacuum(cls, dim):
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[0] = 1.0
        return cls(amplitudes)

    @property
    def dim(self):
        return self.amplitudes.size

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    @property
    def tail_mass(self):
        """Probability held by the top tenth of the levels."""
        start = self.dim - max(int(math.ceil(TAIL_FRACTION * self.dim)), 1)
        return float(np.sum(np.abs(self.amplitudes[start:]) ** 2))

    @property
    def odd_mass(self):
        return float(np.sum(np.abs(self.amplitudes[1::2]) ** 2))

    def check_health(self, limit=TAIL_LIMIT):
        if self.tail_mass >= limit:
            raise TruncationError(f"tail mass {self.tail_mass:.3g} at dim={self.dim} exceeds {limit:g}")
        return self


def squeezed_vacuum(r, phi, dim):
    """
    Squeezed vacuum with sinh 2r e^{i phi} = -2 conj(<a^2>).

    Even amplitudes follow c_{2m+2} = -e^{-i phi} tanh r sqrt((2m+1)/(2m+2)) c_{2m}.
    """
    if r < 0.0:
        raise DomainError(f"squeezing must be non-negative, got {r!r}")
    amplitudes = np.zeros(dim, dtype=complex)
    amplitudes[0] = 1.0 / math.sqrt(math.cosh(r))
    ratio = -np.exp(-1j * phi) * math.tanh(r)
    for m in range((dim - 1) // 2):
        amplitudes[2 * m + 2] = amplitudes[2 * m] * ratio * math.sqrt((2 * m + 1) / (2 * m + 2))
    return FockVector(amplitudes).check_health()


def moments(psi):
    """Return (<a^2>, <a^dagger a>)."""
    c = psi.amplitudes
    n = np.arange(psi.dim - 2)
    a2 = np.sum(np.conj(c[:-2]) * c[2:] * np.sqrt((n + 1.0) * (n + 2.0)))
    number = np.sum(np.arange(psi.dim) * np.abs(c) ** 2)
    return complex(a2), float(number)


def phase_state_of(psi):
    """Return (r, phi) of the Gaussian state matching the second moments of psi."""
    a2, _ = moments(psi)
    z = -2.0 * np.conj(a2)
    return 0.5 * math.asinh(abs(z)), math.atan2(z.imag, z.real) % (2.0 * math.pi)
