"""Box-constrained minimization of the weighted CRLB trace.

Three solvers share one :class:`Problem` description:

* :func:`solve_local` -- projected BFGS with an Armijo line search along the
  projection arc, started from the balanced design.
* :func:`solve_vertex` -- exhaustive evaluation of the ``2**n_t`` box corners.
* :func:`solve_pso` -- particle swarm in ``log(alpha)`` space, seeded with
  every vertex, the balanced start and (optionally) the local solution.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .design import DesignBounds
from .errors import DomainError, SingularFIMError, UnsolvableError
from .fisher import FisherDecomposition, check_weight, objective, objective_and_gradient, objective_batch

log = logging.getLogger(__name__)

MAX_VERTEX_DIM = 20


@dataclass
class Problem:
    """Objective, gradient and box for one design problem.

    Any callables may be supplied, which is how synthetic test functions are
    injected. ``objective`` and ``gradient`` may raise
    :class:`~uprad.errors.SingularFIMError` at unusable points.
    """

    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    value_and_gradient: Optional[Callable[[np.ndarray], tuple[float, np.ndarray]]] = None
    batch_objective: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, float).reshape(-1)
        self.upper = np.asarray(self.upper, float).reshape(-1)
        if self.lower.shape != self.upper.shape or np.any(self.upper <= self.lower):
            raise DomainError("problem bounds need lower < upper elementwise")

    @property
    def n(self) -> int:
        return self.lower.size

    def project(self, alpha: np.ndarray) -> np.ndarray:
        return np.clip(alpha, self.lower, self.upper)

    def evaluate(self, alpha: np.ndarray) -> tuple[float, np.ndarray]:
        if self.value_and_gradient is not None:
            f, g = self.value_and_gradient(alpha)
        else:
            f, g = self.objective(alpha), self.gradient(alpha)
        return float(f), np.asarray(g, float)

    def evaluate_many(self, alphas: np.ndarray) -> np.ndarray:
        """Objective over rows of ``alphas``; unusable points give ``+inf``."""
        if self.batch_objective is not None:
            return np.asarray(self.batch_objective(alphas), float)
        out = np.full(len(alphas), np.inf)
        for m, a in enumerate(alphas):
            try:
                out[m] = self.objective(a)
            except SingularFIMError:
                pass
        return out


def make_problem(decomp: FisherDecomposition, weight, bounds: DesignBounds) -> Problem:
    """Design problem for a Fisher decomposition, weight matrix and box."""
    weight = check_weight(weight)
    lo, hi = bounds.arrays(decomp.n_t)
    return Problem(
        objective=lambda a: objective(decomp, weight, a),
        gradient=lambda a: objective_and_gradient(decomp, weight, a)[1],
        lower=lo,
        upper=hi,
        value_and_gradient=lambda a: objective_and_gradient(decomp, weight, a),
        batch_objective=lambda a: objective_batch(decomp, weight, a),
    )


@dataclass
class SolveResult:
    alpha_star: np.ndarray
    f_value: float
    iterations: int
    evaluations: int
    converged: bool
    method: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": [float(a) for a in self.alpha_star],
            "f": float(self.f_value),
            "iterations": int(self.iterations),
            "evaluations": int(self.evaluations),
            "converged": bool(self.converged),
        }


@dataclass(frozen=True)
class LocalConfig:
    pg_tol: float = 1e-8
    max_iter: int = 200
    armijo_c1: float = 1e-4
    max_backtracks: int = 60
    # Stopping test uses the gradient of f / f(alpha0) so it is unit-free.
    normalize: bool = True


@dataclass(frozen=True)
class PSOConfig:
    n_particles: int = 64
    iterations: int = 300
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    # Fraction of the (log-space) box width.
    velocity_clamp: float = 0.5


def _bfgs_inverse_update(h: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    rho = 1.0 / (y @ s)
    eye = np.eye(len(s))
    left = eye - rho * np.outer(s, y)
    return left @ h @ left.T + rho * np.outer(s, s)


def _expand(problem, x, d, xn, fn, gn, scale, max_doublings=30):
    t, evals = 1.0, 0
    for _ in range(max_doublings):
        t *= 2.0
        xt = problem.project(x + t * d)
        if np.array_equal(xt, xn):
            break
        try:
            ft, gt = problem.evaluate(xt)
            evals += 1
        except SingularFIMError:
            break
        ft, gt = ft / scale, gt / scale
        if not ft < fn:
            break
        xn, fn, gn = xt, ft, gt
    return xn, fn, gn, evals


def solve_local(problem: Problem, alpha0, config: LocalConfig = LocalConfig()) -> SolveResult:
    """Projected quasi-Newton descent from ``alpha0``.

    Stops when ``max|P(alpha - g) - alpha| <= pg_tol`` or after ``max_iter``
    iterations. Every accepted step decreases ``f``, so the result is never
    worse than the start.
    """
    x = np.array(alpha0, float).reshape(-1)
    lo, hi = problem.lower, problem.upper
    if x.shape != lo.shape or np.any(x < lo) or np.any(x > hi):
        raise DomainError(f"start point {x} outside the box")
    evals = 0
    try:
        f, g = problem.evaluate(x)
        evals += 1
    except SingularFIMError as exc:
        raise UnsolvableError("objective undefined at the start point") from exc
    scale = abs(f) if (config.normalize and np.isfinite(f) and f != 0.0) else 1.0
    f, g = f / scale, g / scale
    width = float(np.min(hi - lo))

    h = None
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        if np.max(np.abs(problem.project(x - g) - x)) <= config.pg_tol:
            converged = True
            it -= 1
            break
        blocked = ((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0))
        free = ~blocked

        accepted = False
        for use_qn in ((True, False) if h is not None else (False,)):
            d = np.zeros_like(x)
            if use_qn:
                d[free] = -h[np.ix_(free, free)] @ g[free]
                if g @ d >= 0:
                    continue
            else:
                gmax = np.max(np.abs(g[free]))
                d[free] = -g[free] * min(1.0, 0.1 * width / gmax)
            t = 1.0
            for _ in range(config.max_backtracks):
                xn = problem.project(x + t * d)
                step = xn - x
                if not np.any(step):
                    break
                try:
                    fn, gn = problem.evaluate(xn)
                    evals += 1
                except SingularFIMError:
                    t *= 0.5
                    continue
                fn, gn = fn / scale, gn / scale
                if fn <= f + config.armijo_c1 * min(g @ step, 0.0) and fn <= f:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                if t == 1.0:
                    # Negative curvature leaves the BFGS scale stale; stretch the step.
                    xn, fn, gn, n_more = _expand(problem, x, d, xn, fn, gn, scale)
                    evals += n_more
                break
            h = None
        if not accepted:
            log.debug("local search stalled at iteration %d", it)
            break

        s, y = xn - x, gn - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if h is None:
                h = np.eye(len(x)) * (sy / (y @ y))
            h = _bfgs_inverse_update(h, s, y)
        x, f, g = xn, fn, gn

    if not converged:
        converged = bool(np.max(np.abs(problem.project(x - g) - x)) <= config.pg_tol)
    return SolveResult(x, problem.objective(x), it, evals + 1, converged, "local")


def vertices(lower, upper) -> np.ndarray:
    """All box corners in lexicographic order, lower bound first in each coordinate."""
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    return np.array(list(itertools.product(*zip(lower, upper))), dtype=float)


def solve_vertex(problem: Problem) -> SolveResult:
    """Best box corner; ties within 1e-12 relative go to the lowest corner index."""
    if problem.n > MAX_VERTEX_DIM:
        raise DomainError(f"vertex enumeration limited to {MAX_VERTEX_DIM} transmitters")
    best, best_f = None, np.inf
    corners = vertices(problem.lower, problem.upper)
    for corner in corners:
        try:
            f = problem.objective(corner)
        except SingularFIMError:
            continue
        if best is None or f < best_f - 1e-12 * abs(best_f):
            best, best_f = corner, f
    if best is None:
        raise UnsolvableError("objective undefined at every vertex")
    return SolveResult(best.copy(), float(best_f), 0, len(corners), True, "vertex")


def solve_pso(problem: Problem, config: PSOConfig = PSOConfig(), seed=0,
              alpha0=None, local: SolveResult | np.ndarray | None = None,
              extra_seeds: Iterable[np.ndarray] = ()) -> SolveResult:
    """Particle swarm over ``log(alpha)`` with reflecting walls.

    The swarm starts from every vertex, ``alpha0`` (defaults to the
    geometric box centre) and the local solution when given, so the result
    is never worse than any of those points. Deterministic for a fixed seed.
    """
    n = problem.n
    if n > MAX_VERTEX_DIM:
        raise DomainError(f"vertex seeding limited to {MAX_VERTEX_DIM} transmitters")
    lo, hi = problem.lower, problem.upper
    seeds = list(vertices(lo, hi))
    seeds.append(np.sqrt(lo * hi) if alpha0 is None else np.asarray(alpha0, float))
    if local is not None:
        seeds.append(np.asarray(getattr(local, "alpha_star", local), float))
    seeds.extend(np.asarray(s, float) for s in extra_seeds)
    seeds = [problem.project(s.reshape(-1)) for s in seeds]
    if config.n_particles < 2 ** n + 2 or config.n_particles < len(seeds):
        raise DomainError(f"swarm of {config.n_particles} cannot hold {len(seeds)} seed points")

    rng = np.random.default_rng(seed)
    log_lo, log_hi = np.log(lo), np.log(hi)
    span = log_hi - log_lo
    vmax = config.velocity_clamp * span

    def to_alpha(xs):
        a = np.clip(np.exp(xs), lo, hi)
        a = np.where(xs <= log_lo, lo, a)
        return np.where(xs >= log_hi, hi, a)

    m = config.n_particles
    xs = log_lo + span * rng.random((m, n))
    alphas = to_alpha(xs)
    for p, s in enumerate(seeds):
        alphas[p] = s
        xs[p] = np.clip(np.log(s), log_lo, log_hi)
    vel = (2.0 * rng.random((m, n)) - 1.0) * 0.1 * span

    fit = problem.evaluate_many(alphas)
    pbest_x, pbest_a, pbest_f = xs.copy(), alphas.copy(), fit.copy()
    evals = m
    for _ in range(config.iterations):
        g = int(np.argmin(pbest_f))
        r1 = rng.random((m, n))
        r2 = rng.random((m, n))
        vel = (config.inertia * vel
               + config.cognitive * r1 * (pbest_x - xs)
               + config.social * r2 * (pbest_x[g] - xs))
        vel = np.clip(vel, -vmax, vmax)
        xs = xs + vel
        over, under = xs > log_hi, xs < log_lo
        xs = np.where(over, 2 * log_hi - xs, xs)
        xs = np.where(under, 2 * log_lo - xs, xs)
        vel = np.where(over | under, -vel, vel)
        xs = np.clip(xs, log_lo, log_hi)
        alphas = to_alpha(xs)
        fit = problem.evaluate_many(alphas)
        evals += m
        better = fit < pbest_f
        pbest_x[better], pbest_a[better], pbest_f[better] = xs[better], alphas[better], fit[better]

    g = int(np.argmin(pbest_f))
    if not np.isfinite(pbest_f[g]):
        raise UnsolvableError("objective undefined at every particle")
    # Re-score the winner and the seeds with the scalar objective so the
    # comparison with the other solvers is exact.
    best_a, best_f = None, np.inf
    for cand in [pbest_a[g], *seeds]:
        try:
            f = problem.objective(cand)
        except SingularFIMError:
            continue
        evals += 1
        if f < best_f:
            best_a, best_f = cand.copy(), f
    return SolveResult(best_a, float(best_f), config.iterations, evals, True, "pso")


@dataclass(frozen=True)
class ClusterLabel:
    label: str
    n_at_upper: int
    n_at_lower: int

    @property
    def is_vertex(self) -> bool:
        return self.label != "C6"


CLUSTERS = ("C1", "C2", "C3", "C4", "C5", "C6")


def classify_cluster(alpha, bounds: DesignBounds, tol: float = 1e-3) -> ClusterLabel:
    """Bucket a design by how many transmitters sit on each bound.

    C1: all at ``u``; C5: all at ``l``; C6: any entry strictly inside.
    Mixed vertices are C2 (one at ``l``), C4 (one at ``u``) and C3 otherwise,
    which for four transmitters is exactly one, three and two at ``l``.
    """
    alpha = np.asarray(alpha, float).reshape(-1)
    lo, hi = bounds.arrays(alpha.size)
    band = tol * (hi - lo)
    at_lo = np.abs(alpha - lo) <= band
    at_hi = (np.abs(alpha - hi) <= band) & ~at_lo
    n_lo, n_hi = int(at_lo.sum()), int(at_hi.sum())
    n = alpha.size
    if n_lo + n_hi < n:
        label = "C6"
    elif n_hi == n:
        label = "C1"
    elif n_lo == n:
        label = "C5"
    elif n_lo == 1:
        label = "C2"
    elif n_hi == 1:
        label = "C4"
    else:
        label = "C3"
    return ClusterLabel(label, n_hi, n_lo)
