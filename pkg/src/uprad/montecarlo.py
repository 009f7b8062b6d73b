"""Monte Carlo study of the per-transmitter trade-off design.

Each trial draws one random constellation, then for every velocity weight
``w`` runs the local, vertex and swarm solvers and records the CRLB
improvement ratios relative to the balanced design. Randomness is split per
trial from the master seed, so results do not depend on scheduling.
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import DesignBounds, budget_from_noise_model
from .errors import DomainError, GeometryError, SamplingError, SingularFIMError
from .fisher import crlb, decompose, fim, objective, pair_jacobians, weight_matrix
from .geometry import PlatformState, Scenario
from .optimizer import (CLUSTERS, LocalConfig, PSOConfig, classify_cluster, make_problem,
                        solve_local, solve_pso, solve_vertex)

log = logging.getLogger(__name__)

MAX_RESAMPLES = 100
MAX_SPEED = 100.0


@dataclass(frozen=True)
class StudyParams:
    trials: int = 5000
    n_t: int = 4
    n_r: int = 6
    radius: float = 6000.0
    sigma0: float = 1.0
    bounds: DesignBounds = field(default_factory=DesignBounds)
    w_values: tuple[float, ...] = (0.1, 1.0, 10.0)
    seed: int = 0
    local: LocalConfig = field(default_factory=LocalConfig)
    pso: PSOConfig = field(default_factory=PSOConfig)
    cluster_tol: float = 1e-3

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if self.n_t < 1 or self.n_r < 1:
            raise DomainError("need at least one Tx and one Rx")
        if not self.radius > 0 or not self.sigma0 > 0:
            raise DomainError("radius and sigma0 must be positive")
        if not self.w_values or any(not w > 0 for w in self.w_values):
            raise DomainError("velocity weights must be positive")


@dataclass
class StudyRecord:
    trial: int
    w: float
    f_alpha0: float
    f_local: float
    f_vertex: float
    f_opt: float
    x_local: float
    y_local: float
    x_opt: float
    y_opt: float
    cluster: str
    alpha_local: np.ndarray
    alpha_opt: np.ndarray
    evals_local: int
    evals_vertex: int
    evals_pso: int
    resamples: int = 0


def _cylinder(rng: np.random.Generator, n: int, rho, z) -> np.ndarray:
    r = rng.uniform(rho[0], rho[1], n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    h = rng.uniform(z[0], z[1], n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), h])


def _velocities(rng: np.random.Generator, n: int, vmax: float) -> np.ndarray:
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * rng.uniform(0.0, vmax, n)[:, None]


def sample_scenario(rng: np.random.Generator, n_t: int = 4, n_r: int = 6,
                    radius: float = 6000.0, sigma0: float = 1.0) -> Scenario:
    """Random constellation in cylindrical regions around the origin.

    Radars: radius in [R/2, R], height 200-300 m. Target: radius in [0, 2R],
    height 300-600 m. Every platform moves in a uniform random direction at a
    speed uniform in [0, 100] m/s.
    """
    for _ in range(MAX_RESAMPLES):
        tx = _cylinder(rng, n_t, (radius / 2, radius), (200.0, 300.0))
        rx = _cylinder(rng, n_r, (radius / 2, radius), (200.0, 300.0))
        tgt = _cylinder(rng, 1, (0.0, 2 * radius), (300.0, 600.0))[0]
        vel = _velocities(rng, n_t + n_r + 1, MAX_SPEED)
        try:
            return Scenario(
                txs=[PlatformState(p, v) for p, v in zip(tx, vel[:n_t])],
                rxs=[PlatformState(p, v) for p, v in zip(rx, vel[n_t:n_t + n_r])],
                target=PlatformState(tgt, vel[-1]),
                sigma0=sigma0,
                surveillance_radius=radius,
            )
        except GeometryError:
            continue
    raise SamplingError(f"{MAX_RESAMPLES} consecutive invalid scenarios")


def improvement_ratios(crlb_alpha: np.ndarray, crlb_alpha0: np.ndarray) -> tuple[float, float]:
    """Position and velocity CRLB-trace ratios of a design against the baseline."""
    for name, m in (("crlb_alpha", crlb_alpha), ("crlb_alpha0", crlb_alpha0)):
        m = np.asarray(m, float)
        if m.shape != (6, 6) or not np.all(np.isfinite(m)):
            raise DomainError(f"{name} must be a finite 6x6 matrix")
        try:
            np.linalg.cholesky(0.5 * (m + m.T))
        except np.linalg.LinAlgError as exc:
            raise DomainError(f"{name} is not positive definite") from exc
    d1 = np.diag(crlb_alpha)
    d0 = np.diag(crlb_alpha0)
    return float(d1[:3].sum() / d0[:3].sum()), float(d1[3:].sum() / d0[3:].sum())


def trial_rng(seed: int, trial: int, *stream: int) -> np.random.Generator:
    """Generator for one trial; extra ``stream`` keys give independent sub-streams."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, *stream)))


def _weight_key(w: float) -> int:
    # Keyed on the bit pattern so a (trial, w) result ignores the other weights in the study.
    return int(np.float64(w).view(np.uint64))


def run_trial(params: StudyParams, trial: int) -> list[StudyRecord]:
    """Sample one constellation and solve it for every velocity weight."""
    rng = trial_rng(params.seed, trial)
    bounds = params.bounds
    alpha0 = bounds.initial(params.n_t)
    for resamples in range(MAX_RESAMPLES):
        scenario = sample_scenario(rng, params.n_t, params.n_r, params.radius, params.sigma0)
        decomp = decompose(pair_jacobians(scenario), budget_from_noise_model(scenario),
                           params.n_t, params.n_r)
        try:
            cov0 = crlb(fim(decomp, alpha0))
            break
        except SingularFIMError:
            log.info("trial %d: singular FIM at alpha0, resampling", trial)
    else:
        raise SamplingError(f"trial {trial}: {MAX_RESAMPLES} singular scenarios in a row")

    records = []
    for w in params.w_values:
        weight = weight_matrix(w)
        problem = make_problem(decomp, weight, bounds)
        local = solve_local(problem, alpha0, params.local)
        vertex = solve_vertex(problem)
        pso = solve_pso(problem, params.pso, seed=trial_rng(params.seed, trial, 1, _weight_key(w)),
                        alpha0=alpha0, local=local)
        x_loc, y_loc = improvement_ratios(crlb(fim(decomp, local.alpha_star)), cov0)
        x_opt, y_opt = improvement_ratios(crlb(fim(decomp, pso.alpha_star)), cov0)
        records.append(StudyRecord(
            trial=trial,
            w=float(w),
            f_alpha0=objective(decomp, weight, alpha0),
            f_local=local.f_value,
            f_vertex=vertex.f_value,
            f_opt=pso.f_value,
            x_local=x_loc,
            y_local=y_loc,
            x_opt=x_opt,
            y_opt=y_opt,
            cluster=classify_cluster(pso.alpha_star, bounds, params.cluster_tol).label,
            alpha_local=local.alpha_star,
            alpha_opt=pso.alpha_star,
            evals_local=local.evaluations,
            evals_vertex=vertex.evaluations,
            evals_pso=pso.evaluations,
            resamples=resamples,
        ))
    return records


def run_study(params: StudyParams, threads: int = 1, progress=None) -> list[StudyRecord]:
    """Run every trial; output order is (trial, w) regardless of ``threads``.

    ``progress`` is an optional callable receiving the number of finished trials.
    """
    def work(trial):
        out = run_trial(params, trial)
        if progress is not None:
            progress(trial)
        return out

    if threads <= 1:
        chunks = [work(t) for t in range(params.trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, range(params.trials)))
    return [rec for chunk in chunks for rec in chunk]


def cdf(values) -> list[tuple[float, float]]:
    """Empirical CDF as right-continuous steps ``(value, fraction <= value)``."""
    values = np.sort(np.asarray(values, float).reshape(-1))
    if values.size == 0:
        raise DomainError("cdf of an empty sample")
    n = values.size
    uniq, last = np.unique(values[::-1], return_index=True)
    counts = n - last
    return [(float(v), float(c) / n) for v, c in zip(uniq, counts)]


def cluster_histogram(records: list[StudyRecord]) -> dict[float, dict[str, float]]:
    """Fraction of trials in each cluster, per velocity weight."""
    by_w: dict[float, Counter] = {}
    for rec in records:
        by_w.setdefault(rec.w, Counter())[rec.cluster] += 1
    out = {}
    for w, counts in by_w.items():
        total = sum(counts.values())
        out[w] = {label: counts.get(label, 0) / total for label in CLUSTERS}
    return out


def summarize(records: list[StudyRecord]) -> dict[float, dict[str, float]]:
    """Per-weight medians/means of the ratios plus vertex-cluster shares."""
    hist = cluster_histogram(records)
    out = {}
    for w in hist:
        rows = [r for r in records if r.w == w]
        xs = np.array([r.x_opt for r in rows])
        ys = np.array([r.y_opt for r in rows])
        out[w] = {
            "trials": len(rows),
            "median_x_opt": float(np.median(xs)),
            "median_y_opt": float(np.median(ys)),
            "mean_x_opt": float(xs.mean()),
            "mean_y_opt": float(ys.mean()),
            "median_x_local": float(np.median([r.x_local for r in rows])),
            "median_y_local": float(np.median([r.y_local for r in rows])),
            "vertex_fraction": 1.0 - hist[w]["C6"],
            "upper_heavy_fraction": hist[w]["C1"] + hist[w]["C2"],
            "lower_heavy_fraction": hist[w]["C4"] + hist[w]["C5"],
        }
    return out
