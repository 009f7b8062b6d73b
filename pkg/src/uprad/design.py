"""Uncertainty-principle layer: accuracy formulas, the alpha mapping and the noise budget.

Each transmitter ``i`` has one trade-off knob ``alpha_i``. For every pair
``k`` that uses transmitter ``i`` the bistatic-range variance is
``c_k * alpha_i`` and the range-rate variance is ``c_k / alpha_i``, so the
product ``c_k**2`` is fixed by the link budget and only the split moves.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DomainError
from .geometry import Scenario, line_of_sight


@dataclass(frozen=True)
class DesignBounds:
    """Box ``lower <= alpha_i <= upper``; scalars apply to every transmitter."""

    lower: float | np.ndarray = 1.0
    upper: float | np.ndarray = 100.0

    def __post_init__(self):
        lo = np.asarray(self.lower, float)
        hi = np.asarray(self.upper, float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("bounds must be finite")
        if np.any(lo <= 0) or np.any(hi <= lo):
            raise DomainError(f"bounds need 0 < l < u, got l={self.lower}, u={self.upper}")

    def arrays(self, n_t: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lower, float), (n_t,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, float), (n_t,)).copy()
        return lo, hi

    def initial(self, n_t: int) -> np.ndarray:
        """Balanced start ``sqrt(l * u)`` (geometric midpoint of the box)."""
        lo, hi = self.arrays(n_t)
        return np.sqrt(lo * hi)

    def contains(self, alpha) -> bool:
        alpha = np.asarray(alpha, float)
        lo, hi = self.arrays(alpha.size)
        return bool(np.all(alpha >= lo) and np.all(alpha <= hi))


def check_alpha(alpha, n_t: int | None = None, bounds: DesignBounds | None = None) -> np.ndarray:
    """Validate a design vector and return it as a float array."""
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if n_t is not None and alpha.size != n_t:
        raise DomainError(f"expected {n_t} alpha values, got {alpha.size}")
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        raise DomainError(f"alpha must be finite and strictly positive, got {alpha}")
    if bounds is not None and not bounds.contains(alpha):
        lo, hi = bounds.arrays(alpha.size)
        raise DomainError(f"alpha {alpha} outside bounds [{lo}, {hi}]")
    return alpha


def check_budget(c, n_pairs: int | None = None) -> np.ndarray:
    c = np.asarray(c, dtype=float).reshape(-1)
    if n_pairs is not None and c.size != n_pairs:
        raise BudgetError(f"budget has {c.size} entries, expected {n_pairs}")
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise BudgetError("noise budget entries must be finite and strictly positive")
    return c


def accuracy_from_waveform(energy_ratio: float, b_eff: float, t_eff: float) -> tuple[float, float]:
    """Time-delay and Doppler accuracies for a waveform.

    Args:
        energy_ratio: ``2E/N0`` (dimensionless).
        b_eff: effective bandwidth in Hz.
        t_eff: effective duration in seconds.

    Returns:
        ``(delta_tau, delta_f)`` in seconds and Hz.
    """
    for name, value in (("energy_ratio", energy_ratio), ("b_eff", b_eff), ("t_eff", t_eff)):
        if not (np.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive, got {value}")
    root = np.sqrt(energy_ratio)
    return 1.0 / (b_eff * root), 1.0 / (t_eff * root)


def map_alpha(budget, alpha, n_t: int, n_r: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair BR and BRR variances implied by the design vector."""
    c = check_budget(budget, n_t * n_r)
    alpha = check_alpha(alpha, n_t)
    a = np.repeat(alpha, n_r)
    return c * a, c / a


def budget_from_noise_model(scenario: Scenario) -> np.ndarray:
    """Noise budget ``c_k = sigma0 * d_t,i * d_r,j / R**2``, ordered by pair index."""
    tx_pos, tx_vel = scenario.tx_arrays()
    rx_pos, rx_vel = scenario.rx_arrays()
    d_t, _, _ = line_of_sight(tx_pos, tx_vel, scenario.target)
    d_r, _, _ = line_of_sight(rx_pos, rx_vel, scenario.target)
    scale = scenario.sigma0 / scenario.surveillance_radius**2
    return scale * np.outer(d_t, d_r).reshape(-1)
