"""Constant-velocity Kalman filter on (cx, cy, area, aspect) box states."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0
_H = np.eye(4, 7)


@dataclass(frozen=True)
class KalmanParams:
    obs_weight: float = 1 / 20
    process_weight: float = 1 / 160
    init_velocity_weight: float = 1000.0  # velocity prior stddev, in box heights


def box_to_z(box) -> np.ndarray:
    left, top, w, h = box
    return np.array([left + w / 2, top + h / 2, w * h, w / h])


def z_to_box(x) -> tuple[float, float, float, float]:
    cx, cy, s, r = (float(v) for v in x[:4])
    s = max(s, 1e-9)
    w = math.sqrt(s * r)
    h = s / w
    return (cx - w / 2, cy - h / 2, w, h)


def _height(x) -> float:
    return math.sqrt(max(x[2], 1e-9) / max(x[3], 1e-9))


def observation_noise(x, params: KalmanParams) -> np.ndarray:
    h = _height(x)
    o = params.obs_weight
    return np.diag([(o * h) ** 2, (o * h) ** 2, (2 * o * x[2]) ** 2, (o * x[3]) ** 2])


def process_noise(x, params: KalmanParams) -> np.ndarray:
    h = _height(x)
    p = params.process_weight
    pos, area = (p * h) ** 2, (2 * p * x[2]) ** 2
    return np.diag([pos, pos, area, (p * x[3]) ** 2, pos, pos, area])


@dataclass
class Tracklet:
    track_id: int
    mean: np.ndarray
    covariance: np.ndarray
    last_box: tuple[float, float, float, float]
    last_frame: int = 0
    appearance: Optional[np.ndarray] = field(default=None, repr=False)
    age: int = 0
    hits: int = 1
    status: str = "tentative"

    @classmethod
    def start(cls, track_id: int, box, frame: int, appearance=None,
              params: KalmanParams = KalmanParams()) -> "Tracklet":
        z = box_to_z(box)
        mean = np.concatenate([z, np.zeros(3)])
        h = _height(mean)
        vel = (params.init_velocity_weight * h) ** 2
        cov = np.zeros((7, 7))
        cov[:4, :4] = observation_noise(mean, params) * 4.0
        cov[4:, 4:] = np.diag([vel, vel, (params.init_velocity_weight * mean[2]) ** 2])
        return cls(track_id, mean, cov, tuple(map(float, box)), frame,
                   None if appearance is None else np.asarray(appearance, dtype=float))

    @property
    def box(self) -> tuple[float, float, float, float]:
        return z_to_box(self.mean)


def kalman_predict(t: Tracklet, params: KalmanParams = KalmanParams()) -> Tracklet:
    """One constant-velocity step; the aspect ratio carries no velocity."""
    mean = t.mean.copy()
    if mean[2] + mean[6] <= 0:
        mean[6] = 0.0
    cov = _F @ t.covariance @ _F.T + process_noise(mean, params)
    mean = _F @ mean
    return replace(t, mean=mean, covariance=0.5 * (cov + cov.T))


def kalman_update(t: Tracklet, box, params: KalmanParams = KalmanParams()) -> Tracklet:
    """Linear correction with a box observation (Joseph-form covariance)."""
    z = box_to_z(box)
    r = observation_noise(t.mean, params)
    p = t.covariance
    s = _H @ p @ _H.T + r
    gain = np.linalg.solve(s, _H @ p).T
    mean = t.mean + gain @ (z - _H @ t.mean)
    ikh = np.eye(7) - gain @ _H
    cov = ikh @ p @ ikh.T + gain @ r @ gain.T
    return replace(t, mean=mean, covariance=0.5 * (cov + cov.T))
