"""
Brute-force Schroedinger evolution of H = omega a^dagger a - (eps/4)(a^dagger + a)^2
in a truncated number basis, and the quantum Fisher information about omega.

Constant pieces of a schedule are propagated exactly with ``expm_multiply``;
time-dependent pieces are sliced and each slice uses the midpoint control.
"""
import logging
import math

import numpy as np
from django.conf import settings
from scipy.linalg import eigvalsh_tridiagonal
from scipy.sparse import bmat, diags
from scipy.sparse.linalg import expm_multiply

from critical_metrology.exceptions import DomainError, IntegrationError, ScheduleError, StepSizeError, TruncationError
from dynamics.state import SystemParams

from .states import FockVector

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-8
RICHARDSON_TOLERANCE = 1e-3
# finite-difference estimates below this (in units of (omega T)^2) are round-off
FD_QFI_FLOOR = 1e-12


def hamiltonian_matrix(eps, params, dim):
    """Real symmetric pentadiagonal H in the number basis."""
    if dim < 4:
        raise DomainError(f"dim must be at least 4, got {dim!r}")
    n = np.arange(dim, dtype=float)
    diagonal = params.omega * n - 0.25 * eps * (2.0 * n + 1.0)
    coupling = -0.25 * eps * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    return diags([coupling, diagonal, coupling], [-2, 0, 2], format="csr")


def number_operator(dim):
    return diags(np.arange(dim, dtype=float), 0, format="csr")


def lowest_even_gap(eps, params, dim):
    """Gap between the two lowest even-parity levels, 2 omega sqrt(1 - eps/omega) in the limit."""
    m = np.arange((dim + 1) // 2, dtype=float)
    diagonal = params.omega * 2.0 * m - 0.25 * eps * (4.0 * m + 1.0)
    coupling = -0.25 * eps * np.sqrt((2.0 * m[:-1] + 1.0) * (2.0 * m[:-1] + 2.0))
    low = eigvalsh_tridiagonal(diagonal, coupling, select="i", select_range=(0, 1))
    return float(low[1] - low[0])


def default_dt(omega):
    return 1e-3 / omega


def _slices(segments, dt):
    """Yield (duration, eps) for piecewise-constant propagation."""
    for start, stop, eps_of_t in segments:
        length = stop - start
        mid = 0.5 * (start + stop)
        if eps_of_t(start) == eps_of_t(mid) == eps_of_t(stop):
            yield length, eps_of_t(start)
            continue
        count = max(int(math.ceil(length / min(dt, length / 16.0))), 16)
        h = length / count
        for k in range(count):
            yield h, eps_of_t(start + (k + 0.5) * h)


def _segments(schedule, T):
    if schedule.is_feedback:
        raise ScheduleError("the Fock oracle propagates time-programmed schedules only")
    return schedule.segments(T)


def _propagate(vector, generator, segments, dt):
    """Apply exp(A(eps) h) for each slice, caching A per control value."""
    cache = {}
    for h, eps in _slices(segments, dt):
        if eps not in cache:
            cache[eps] = generator(eps)
        vector = expm_multiply(cache[eps] * h, vector)
    return vector


def _checked(amplitudes):
    psi = FockVector(amplitudes)
    if abs(psi.norm - 1.0) > NORM_TOLERANCE:
        raise IntegrationError(f"norm drifted to {psi.norm!r}")
    return psi.check_health()


def evolve(psi0, schedule, T, params, dt=None):
    """Evolve psi0 under ``schedule`` over [0, T]."""
    schedule.validate(params.omega)
    return _evolve(psi0, schedule, T, params, dt)


def _evolve(psi0, schedule, T, params, dt):
    dim = psi0.dim
    amplitudes = _propagate(
        psi0.amplitudes,
        lambda eps: -1j * hamiltonian_matrix(eps, params, dim),
        _segments(schedule, T),
        dt or default_dt(params.omega),
    )
    return _checked(amplitudes)


def with_truncation_growth(run, dim=None):
    """Call run(dim), doubling the truncation on failure up to CRITMET_FOCK_DIM_MAX."""
    dim = dim or settings.CRITMET_FOCK_DIM
    limit = settings.CRITMET_FOCK_DIM_MAX
    while True:
        try:
            return run(dim)
        except TruncationError as exc:
            if dim >= limit:
                raise
            grown = min(2 * dim - 1, limit)
            logger.warning("%s; retrying with dim=%d", exc, grown)
            dim = grown


def _fisher(psi, derivative):
    overlap = np.vdot(psi, derivative)
    return 4.0 * float(np.vdot(derivative, derivative).real - abs(overlap) ** 2)


def qfi_fd(schedule, T, params, delta_omega=None, dim=None, dt=None, prepare=FockVector.vacuum):
    """
    F = 4 (<d psi|d psi> - |<psi|d psi>|^2) with d psi the central difference in
    omega. The difference is repeated at half the step and both must agree.
    """
    schedule.validate(params.omega)
    delta = delta_omega or 1e-5 * params.omega

    def run(size):
        psi0 = prepare(size)

        def at(omega):
            return _evolve(psi0, schedule, T, SystemParams(omega), dt).amplitudes

        center = at(params.omega)

        def fisher(step):
            derivative = (at(params.omega + step) - at(params.omega - step)) / (2.0 * step)
            return _fisher(center, derivative)

        coarse, fine = fisher(delta), fisher(0.5 * delta)
        if max(abs(coarse), abs(fine)) < FD_QFI_FLOOR * max(1.0, (params.omega * T) ** 2):
            return 0.0
        if abs(fine - coarse) > RICHARDSON_TOLERANCE * max(abs(fine), 1e-300):
            raise StepSizeError(f"finite-difference QFI {coarse!r} vs {fine!r} at delta={delta!r}")
        return max(fine, 0.0)

    return with_truncation_growth(run, dim)


def qfi_generator(schedule, T, params, dim=None, dt=None, prepare=FockVector.vacuum):
    """
    F from the coupled evolution of psi and d psi / d omega:
    i d(d psi)/dt = H d psi + n psi.
    """
    schedule.validate(params.omega)

    def run(size):
        number = number_operator(size)

        def generator(eps):
            H = -1j * hamiltonian_matrix(eps, params, size)
            return bmat([[H, None], [-1j * number, H]], format="csr")

        psi0 = prepare(size).amplitudes
        state = _propagate(
            np.concatenate([psi0, np.zeros(size, dtype=complex)]),
            generator,
            _segments(schedule, T),
            dt or default_dt(params.omega),
        )
        psi = _checked(state[:size])
        derivative = state[size:]
        scale = np.linalg.norm(derivative)
        if scale > 0.0:
            FockVector(derivative / scale).check_health()
        return _fisher(psi.amplitudes, derivative)

    return with_truncation_growth(run, dim)
