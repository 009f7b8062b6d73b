"""Fisher information, CRLB and the weighted-trace design objective.

The unknown parameter is ``[x0; x0_dot]`` (position first). Two routes to
the FIM are provided and must agree: the direct ``G^T Sigma^-1 G`` form and
the per-transmitter decomposition ``J(alpha) = sum_i P_i / alpha_i + alpha_i V_i``
that the optimizers work with.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import check_alpha, check_budget
from .errors import DomainError, SingularFIMError
from .geometry import Scenario, line_of_sight

#: Cholesky pivots at or below this fraction of the largest diagonal entry are singular.
PIVOT_RTOL = 1e-12


class PairJacobian(NamedTuple):
    rho: np.ndarray      # d r_k / d x0, dimensionless
    rho_dot: np.ndarray  # d rdot_k / d x0, 1/s


class Jacobians(NamedTuple):
    """Stacked pair Jacobians; row ``k`` is pair ``k + 1``."""

    rho: np.ndarray      # (K, 3)
    rho_dot: np.ndarray  # (K, 3)

    def __len__(self):
        return self.rho.shape[0]

    def pair(self, k: int) -> PairJacobian:
        """Jacobian of 1-based pair ``k``."""
        return PairJacobian(self.rho[k - 1], self.rho_dot[k - 1])


def _platform_gradients(positions, velocities, target):
    d, d_dot, u = line_of_sight(positions, velocities, target)
    rho = u
    rho_dot = (target.velocity - np.atleast_2d(velocities) - d_dot[:, None] * u) / d[:, None]
    return rho, rho_dot


def pair_jacobians(scenario: Scenario) -> Jacobians:
    """Gradients of every bistatic range and range rate w.r.t. target position."""
    rho_t, rhod_t = _platform_gradients(*scenario.tx_arrays(), scenario.target)
    rho_r, rhod_r = _platform_gradients(*scenario.rx_arrays(), scenario.target)
    rho = (rho_t[:, None, :] + rho_r[None, :, :]).reshape(-1, 3)
    rho_dot = (rhod_t[:, None, :] + rhod_r[None, :, :]).reshape(-1, 3)
    return Jacobians(rho, rho_dot)


def measurement_jacobian(jac: Jacobians) -> np.ndarray:
    """Jacobian ``G`` (2K x 6) of ``[r; r_dot]`` w.r.t. ``[x0; x0_dot]``.

    BR rows are ``[rho^T, 0]``; BRR rows are ``[rho_dot^T, rho^T]`` because the
    range-rate depends on velocity through the same line-of-sight vectors.
    """
    k = len(jac)
    g = np.zeros((2 * k, 6))
    g[:k, :3] = jac.rho
    g[k:, :3] = jac.rho_dot
    g[k:, 3:] = jac.rho
    return g


@dataclass(frozen=True)
class FisherDecomposition:
    """Per-transmitter blocks with ``FIM(alpha) = sum_i P_i/alpha_i + alpha_i V_i``."""

    p: np.ndarray  # (n_t, 6, 6)
    v: np.ndarray  # (n_t, 6, 6)

    def __post_init__(self):
        for arr in (self.p, self.v):
            arr.setflags(write=False)

    @property
    def n_t(self) -> int:
        return self.p.shape[0]


def decompose(jac: Jacobians, budget, n_t: int, n_r: int) -> FisherDecomposition:
    c = check_budget(budget, n_t * n_r)
    if len(jac) != n_t * n_r:
        raise DomainError(f"{len(jac)} Jacobian rows for a {n_t}x{n_r} constellation")
    zeros = np.zeros_like(jac.rho)
    a = np.hstack([jac.rho, zeros]).reshape(n_t, n_r, 6)
    b = np.hstack([jac.rho_dot, jac.rho]).reshape(n_t, n_r, 6)
    inv_c = (1.0 / c).reshape(n_t, n_r)
    p = np.einsum("ij,ija,ijb->iab", inv_c, a, a)
    v = np.einsum("ij,ija,ijb->iab", inv_c, b, b)
    return FisherDecomposition(_sym(p), _sym(v))


def fim_direct(jac: Jacobians, sigma, sigma_dot) -> np.ndarray:
    """FIM ``G^T Sigma^-1 G`` from per-pair BR and BRR variances."""
    var = np.concatenate([np.asarray(sigma, float).reshape(-1),
                          np.asarray(sigma_dot, float).reshape(-1)])
    if var.size != 2 * len(jac):
        raise DomainError(f"expected {2 * len(jac)} variances, got {var.size}")
    if not np.all(np.isfinite(var)) or np.any(var <= 0):
        raise DomainError("measurement variances must be finite and strictly positive")
    g = measurement_jacobian(jac)
    return _sym(g.T @ (g / var[:, None]))


def fim(decomp: FisherDecomposition, alpha) -> np.ndarray:
    alpha = check_alpha(alpha, decomp.n_t)
    j = np.einsum("i,iab->ab", 1.0 / alpha, decomp.p) + np.einsum("i,iab->ab", alpha, decomp.v)
    return _sym(j)


def fim_batch(decomp: FisherDecomposition, alphas: np.ndarray) -> np.ndarray:
    """FIMs for a batch of design vectors of shape (m, n_t)."""
    alphas = np.asarray(alphas, float)
    n_t = decomp.n_t
    stacked = np.concatenate([decomp.p, decomp.v]).reshape(2 * n_t, 36)
    j = (np.hstack([1.0 / alphas, alphas]) @ stacked).reshape(-1, 6, 6)
    return _sym(j)


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _cholesky(j: np.ndarray) -> np.ndarray:
    j = np.asarray(j, float)
    if not np.all(np.isfinite(j)):
        raise SingularFIMError("singular Fisher information: non-finite entries")
    try:
        low = np.linalg.cholesky(_sym(j))
    except np.linalg.LinAlgError as exc:
        raise SingularFIMError("singular Fisher information: not positive definite") from exc
    pivots = np.diagonal(low, axis1=-2, axis2=-1) ** 2
    scale = np.max(np.diagonal(j, axis1=-2, axis2=-1), axis=-1, keepdims=True)
    if np.any(pivots <= PIVOT_RTOL * scale):
        raise SingularFIMError("singular Fisher information: vanishing Cholesky pivot")
    return low


def crlb(j: np.ndarray) -> np.ndarray:
    """Inverse of a (batch of) FIM(s) via Cholesky, symmetrized."""
    low = _cholesky(j)
    eye = np.broadcast_to(np.eye(low.shape[-1]), low.shape)
    linv = np.linalg.solve(low, eye)
    return np.swapaxes(linv, -1, -2) @ linv


def is_singular(j: np.ndarray) -> np.ndarray:
    """Boolean mask over a batch of FIMs that fail the pivot test."""
    j = np.asarray(j, float)
    out = np.zeros(j.shape[:-2], dtype=bool)
    for idx in np.ndindex(out.shape):
        try:
            _cholesky(j[idx])
        except SingularFIMError:
            out[idx] = True
    return out


def weight_matrix(w: float = 1.0) -> np.ndarray:
    """Block weight ``diag(I3, w * I3)``."""
    if not (np.isfinite(w) and w > 0):
        raise DomainError(f"velocity weight must be positive, got {w}")
    return np.diag([1.0, 1.0, 1.0, w, w, w])


def check_weight(weight) -> np.ndarray:
    weight = np.asarray(weight, float)
    if weight.shape != (6, 6):
        raise DomainError(f"weight must be 6x6, got {weight.shape}")
    if not np.allclose(weight, weight.T, rtol=0, atol=1e-12 * np.abs(weight).max()):
        raise DomainError("weight must be symmetric")
    if np.linalg.eigvalsh(weight).min() <= 0:
        raise DomainError("weight must be positive definite")
    return weight


def objective(decomp: FisherDecomposition, weight, alpha) -> float:
    """Weighted CRLB trace ``tr(W * FIM(alpha)^-1)``."""
    return float(np.sum(np.asarray(weight) * crlb(fim(decomp, alpha))))


def gradient(decomp: FisherDecomposition, weight, alpha) -> np.ndarray:
    """Analytic gradient of :func:`objective` with respect to alpha."""
    alpha = check_alpha(alpha, decomp.n_t)
    cov = crlb(fim(decomp, alpha))
    dfdj = -cov @ np.asarray(weight) @ cov
    djda = decomp.v - decomp.p / alpha[:, None, None] ** 2
    # tr(A^T B) == sum(A * B)
    return np.einsum("ab,iab->i", dfdj, djda)


def objective_and_gradient(decomp: FisherDecomposition, weight, alpha) -> tuple[float, np.ndarray]:
    alpha = check_alpha(alpha, decomp.n_t)
    weight = np.asarray(weight)
    cov = crlb(fim(decomp, alpha))
    f = float(np.sum(weight * cov))
    dfdj = -cov @ weight @ cov
    djda = decomp.v - decomp.p / alpha[:, None, None] ** 2
    return f, np.einsum("ab,iab->i", dfdj, djda)


def objective_batch(decomp: FisherDecomposition, weight, alphas) -> np.ndarray:
    """Objective over a batch of design vectors; singular points get ``+inf``."""
    alphas = np.atleast_2d(np.asarray(alphas, float))
    weight = np.asarray(weight)
    js = fim_batch(decomp, alphas)
    try:
        low_inv = np.linalg.inv(_cholesky(js))
    except SingularFIMError:
        out = np.full(alphas.shape[0], np.inf)
        for m, j in enumerate(js):
            try:
                out[m] = np.sum(weight * crlb(j))
            except SingularFIMError:
                pass
        return out
    # tr(W L^-T L^-1) = sum((L^-1 W) * L^-1)
    return np.sum((low_inv @ weight) * low_inv, axis=(1, 2))
