"""
Resumable parameter sweeps.

Every grid point is an independent job. Results are journaled in the database
as they complete, so a restarted sweep with the same specification only
computes what is missing. The CSV is assembled from the journal in sorted
order and renamed into place atomically.
"""
import hashlib
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import django
import numpy as np
from django.conf import settings

from critical_metrology.exceptions import CriticalMetrologyError
from critical_metrology.utils import atomic_write_text, build_dataset, canonical_json, dataset_to_csv
from dynamics.simulate import integrate
from dynamics.state import IntegratorConfig, SystemParams
from onoff.optimizer import optimize_n, solve_fixed_n
from open_system.covariance import OpenParams, integrate_open, qfi_open_bound, qfi_open_bound_tight
from qfi.engine import qfi_from_trajectory
from schedules.laws import from_onoff_solution
from schedules.sampling import random_monotone

from .models import SweepPoint, SweepRun

logger = logging.getLogger(__name__)

CLOSED_HEADERS = ["T", "n", "eps_max", "qfi", "envelope", "r_final", "winding"]
OPEN_HEADERS = ["T", "n", "eps_max", "gamma", "nbar", "qfi_bound", "qfi_bound_tight", "r_final"]
MONOTONE_HEADERS = ["T", "sample", "eps_max", "winding", "r_final", "qfi"]


@dataclass(frozen=True)
class SweepSpec:
    mode: str
    T: tuple
    n: tuple = (0,)
    eps_max: float = 1.0
    gamma: tuple = (0.0,)
    nbar: float = 0.0
    samples: int = 1
    seed: int = 0
    integrator: dict = field(default_factory=dict)

    @property
    def headers(self):
        if self.mode == "open":
            return OPEN_HEADERS
        if self.mode == "monotone_family":
            return MONOTONE_HEADERS
        return CLOSED_HEADERS

    def payload(self):
        """JSON-ready description that identifies the sweep."""
        record = asdict(self)
        for name in ("T", "n", "gamma"):
            record[name] = list(record[name])
        return record

    def digest(self):
        return hashlib.sha1(canonical_json(self.payload()).encode("utf-8")).hexdigest()

    def points(self):
        """Grid coordinates in output order."""
        if self.mode == "fixed_n":
            return [{"n": n, "T": T} for n in self.n for T in self.T]
        if self.mode == "open":
            return [{"gamma": g, "T": T} for g in self.gamma for T in self.T]
        if self.mode == "monotone_family":
            return [{"T": T, "sample": i} for T in self.T for i in range(self.samples)]
        return [{"T": T} for T in self.T]


def point_key(coordinates):
    return canonical_json(coordinates)


def _closed_row(schedule, T, config):
    trajectory = integrate(SystemParams(), schedule, T, config.with_stride(T))
    result = qfi_from_trajectory(trajectory)
    return {
        "qfi": result.value,
        "envelope": result.envelope,
        "r_final": result.r_final,
        "winding": result.winding,
    }


def _protocol(T, n, eps_max):
    if n is None:
        solution, _ = optimize_n(T, eps_max)
    else:
        solution = solve_fixed_n(T, n, eps_max)
    if not solution.feasible:
        raise CriticalMetrologyError(f"no feasible on-off protocol for n={n}, T={T!r}")
    return solution


def compute_point(mode, coordinates, payload):
    """Evaluate one grid point; top-level so worker processes can unpickle it."""
    T = coordinates["T"]
    eps_max = payload["eps_max"]
    config = IntegratorConfig(**payload["integrator"])
    if mode == "monotone_family":
        rng = np.random.default_rng([payload["seed"], coordinates["sample"]])
        schedule = random_monotone(rng, T, eps_max)
        row = _closed_row(schedule, T, config)
        del row["envelope"]
        return row
    solution = _protocol(T, coordinates.get("n"), eps_max)
    schedule = from_onoff_solution(solution)
    if mode == "open":
        states = integrate_open(
            SystemParams(),
            OpenParams(coordinates["gamma"], payload["nbar"]),
            schedule,
            T,
            config.with_stride(T),
        )
        return {
            "n": solution.n,
            "qfi_bound": qfi_open_bound(states, T),
            "qfi_bound_tight": qfi_open_bound_tight(states, T),
            "r_final": states[-1].r,
        }
    return {"n": solution.n, **_closed_row(schedule, T, config)}


def evaluate_point(job):
    """Run compute_point and fold numeric failures into the outcome."""
    mode, coordinates, payload = job
    try:
        result = compute_point(mode, coordinates, payload)
    except CriticalMetrologyError as exc:
        return coordinates, "failed", {}, f"{type(exc).__name__}: {exc}"
    if not all(math.isfinite(v) for v in result.values()):
        return coordinates, "failed", {}, f"non-finite result {result!r}"
    return coordinates, "completed", result, ""


def _init_worker():
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "critical_metrology.settings")
    django.setup()


def _execute(jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield evaluate_point(job)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
        futures = [pool.submit(evaluate_point, job) for job in jobs]
        for future in as_completed(futures):
            yield future.result()


@dataclass
class SweepOutcome:
    run: object
    csv: str
    computed: int
    failed: int


def run_sweep(spec, output=None, workers=None):
    """Compute the missing points of ``spec``, journal them and render the CSV."""
    workers = workers or settings.CRITMET_WORKERS
    payload = spec.payload()
    run, created = SweepRun.objects.get_or_create(
        spec_hash=spec.digest(), defaults={"mode": spec.mode, "spec": payload}
    )
    done = run.completed_keys()
    jobs = [(spec.mode, c, payload) for c in spec.points() if point_key(c) not in done]
    logger.info(
        "%s sweep %s: %d of %d points to compute with %d worker(s)%s",
        spec.mode,
        run.spec_hash[:10],
        len(jobs),
        len(spec.points()),
        workers,
        "" if created else " (resumed)",
    )
    failed = 0
    for coordinates, status, result, error in _execute(jobs, workers):
        if status == SweepPoint.Status.FAILED:
            failed += 1
            logger.warning("sweep point %s failed: %s", point_key(coordinates), error)
        SweepPoint.objects.update_or_create(
            run=run,
            point_key=point_key(coordinates),
            defaults={"coordinates": coordinates, "status": status, "result": result, "error": error},
        )
    text = sweep_to_csv(spec, run)
    if output:
        atomic_write_text(output, text)
    return SweepOutcome(run=run, csv=text, computed=len(jobs), failed=failed)


def sweep_to_csv(spec, run):
    """Render the journal of ``run`` as CSV rows sorted by grid coordinates."""
    journal = {p.point_key: p for p in run.points.all()}
    constants = {"eps_max": spec.eps_max, "nbar": spec.nbar}
    rows = []
    for coordinates in spec.points():
        point = journal.get(point_key(coordinates))
        values = {**constants, **coordinates, **(point.result if point else {})}
        rows.append([values.get(name) for name in spec.headers])
    return dataset_to_csv(build_dataset(spec.headers, rows))
