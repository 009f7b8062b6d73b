"""Kinematic primitives for a distributed MIMO radar constellation.

Positions are 3-D Cartesian in meters, velocities in m/s, all taken at one
common reference time. Pair indices follow the row-major convention
``k = (i - 1) * n_r + j`` with 1-based ``i`` (transmitter) and ``j``
(receiver); internally arrays are 0-based and flattened the same way.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .errors import GeometryError

#: Minimum target-to-platform separation (m) for a usable scenario.
EPS_GEOM = 1.0


def _vec3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {np.shape(value)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PlatformState:
    """Position (m) and velocity (m/s) of a transmitter, receiver or target."""

    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "velocity", _vec3(self.velocity, "velocity"))

    def shifted(self, offset) -> "PlatformState":
        return PlatformState(self.position + np.asarray(offset, float), self.velocity)

    def to_dict(self) -> dict:
        return {"pos": self.position.tolist(), "vel": self.velocity.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PlatformState":
        return cls(data["pos"], data.get("vel", [0.0, 0.0, 0.0]))


@dataclass(frozen=True)
class Scenario:
    """A full constellation: transmitters, receivers, target and noise constants.

    ``sigma0`` and ``surveillance_radius`` feed the distance-dependent noise
    model in :func:`uprad.design.budget_from_noise_model`.
    """

    txs: tuple[PlatformState, ...]
    rxs: tuple[PlatformState, ...]
    target: PlatformState
    sigma0: float = 1.0
    surveillance_radius: float = 6000.0

    def __post_init__(self):
        object.__setattr__(self, "txs", tuple(self.txs))
        object.__setattr__(self, "rxs", tuple(self.rxs))
        if len(self.txs) < 1 or len(self.rxs) < 1:
            raise ValueError("need at least one transmitter and one receiver")
        if not (np.isfinite(self.sigma0) and self.sigma0 > 0):
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not (np.isfinite(self.surveillance_radius) and self.surveillance_radius > 0):
            raise ValueError(f"surveillance radius must be positive, got {self.surveillance_radius}")
        for kind, group in (("Tx", self.txs), ("Rx", self.rxs)):
            for n, p in enumerate(group, start=1):
                d = slant_range(p.position, self.target.position)
                if d <= EPS_GEOM:
                    raise GeometryError(
                        f"{kind} {n} is {d:.3g} m from the target (minimum {EPS_GEOM} m)"
                    )

    @property
    def n_t(self) -> int:
        return len(self.txs)

    @property
    def n_r(self) -> int:
        return len(self.rxs)

    @property
    def n_pairs(self) -> int:
        return self.n_t * self.n_r

    def tx_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([p.position for p in self.txs]),
                np.array([p.velocity for p in self.txs]))

    def rx_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([p.position for p in self.rxs]),
                np.array([p.velocity for p in self.rxs]))

    def with_sigma0(self, sigma0: float) -> "Scenario":
        return Scenario(self.txs, self.rxs, self.target, sigma0, self.surveillance_radius)

    def to_dict(self) -> dict:
        return {
            "txs": [p.to_dict() for p in self.txs],
            "rxs": [p.to_dict() for p in self.rxs],
            "target": self.target.to_dict(),
            "sigma0": self.sigma0,
            "R": self.surveillance_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        missing = [key for key in ("txs", "rxs", "target") if key not in data]
        if missing:
            raise ValueError(f"scenario is missing keys: {', '.join(missing)}")
        return cls(
            txs=[PlatformState.from_dict(p) for p in data["txs"]],
            rxs=[PlatformState.from_dict(p) for p in data["rxs"]],
            target=PlatformState.from_dict(data["target"]),
            sigma0=float(data.get("sigma0", 1.0)),
            surveillance_radius=float(data.get("R", 6000.0)),
        )


def pair_index(i: int, j: int, n_r: int, n_t: int | None = None) -> int:
    """1-based pair index ``k = (i - 1) * n_r + j``."""
    if n_r < 1:
        raise IndexError(f"n_r must be >= 1, got {n_r}")
    if not 1 <= j <= n_r:
        raise IndexError(f"Rx index {j} outside 1..{n_r}")
    if i < 1 or (n_t is not None and i > n_t):
        raise IndexError(f"Tx index {i} outside 1..{n_t if n_t is not None else 'N_t'}")
    return (i - 1) * n_r + j


def pair_from_index(k: int, n_r: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    if k < 1 or n_r < 1:
        raise IndexError(f"pair index {k} invalid for n_r={n_r}")
    i, j = divmod(k - 1, n_r)
    return i + 1, j + 1


def slant_range(platform_pos, target_pos) -> float:
    """Euclidean distance between a platform and the target."""
    diff = np.asarray(platform_pos, float) - np.asarray(target_pos, float)
    return float(np.linalg.norm(diff))


def range_rate(platform: PlatformState, target: PlatformState) -> float:
    """Rate of change of the platform-target range (negative when closing)."""
    diff = platform.position - target.position
    d = float(np.linalg.norm(diff))
    if d == 0.0:
        raise GeometryError("range rate undefined at zero range")
    return float(diff @ (platform.velocity - target.velocity)) / d


def line_of_sight(positions: np.ndarray, velocities: np.ndarray,
                  target: PlatformState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ranges, range rates and unit vectors from the platforms to the target.

    Returns ``(d, d_dot, u)`` with ``u = (target - platform) / d`` of shape (n, 3).
    """
    rel = target.position - np.atleast_2d(positions)
    d = np.linalg.norm(rel, axis=1)
    if np.any(d == 0.0):
        bad = int(np.flatnonzero(d == 0.0)[0]) + 1
        raise GeometryError(f"platform {bad} coincides with the target")
    u = rel / d[:, None]
    # (x_p - x_0)^T (v_p - v_0) / d  ==  u^T (v_0 - v_p)
    d_dot = np.einsum("ij,ij->i", u, target.velocity - np.atleast_2d(velocities))
    return d, d_dot, u


def bistatic_measurements(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Bistatic range and range rate for every Tx-Rx pair, row-major in (Tx, Rx)."""
    tx_pos, tx_vel = scenario.tx_arrays()
    rx_pos, rx_vel = scenario.rx_arrays()
    d_t, dd_t, _ = line_of_sight(tx_pos, tx_vel, scenario.target)
    d_r, dd_r, _ = line_of_sight(rx_pos, rx_vel, scenario.target)
    r = (d_t[:, None] + d_r[None, :]).reshape(-1)
    r_dot = (dd_t[:, None] + dd_r[None, :]).reshape(-1)
    return r, r_dot

