"""SORT-style online tracker with a pluggable association scorer."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..sensing import Detection
from .assignment import iou_matrix, solve_assignment
from .kalman import KalmanParams, Tracklet, kalman_predict, kalman_update
from .scorer import Scorer, pair_feature_block


@dataclass(frozen=True)
class TrackerConfig:
    scorer: Scorer = field(default_factory=lambda: Scorer("iou"))
    match_threshold: float = 0.3
    max_age: int = 1
    min_hits: int = 3
    appearance_momentum: float = 0.9
    kalman: KalmanParams = KalmanParams()

    def validate(self) -> "TrackerConfig":
        if self.max_age < 1:
            raise ValueError("max_age must be >= 1")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")
        lo, hi = (-1.0, 1.0) if self.scorer.kind == "cosine" else (0.0, 1.0)
        if not lo <= self.match_threshold <= hi:
            raise ValueError(f"match_threshold must lie in [{lo}, {hi}] for a {self.scorer.kind} scorer")
        return self


def score_matrix(tracklets: Sequence[Tracklet], detections: Sequence[Detection], scorer: Scorer,
                 frame: int, fps: float) -> np.ndarray:
    """Rows are tracklets (already Kalman-predicted), columns are detections."""
    n, m = len(tracklets), len(detections)
    if n == 0 or m == 0:
        return np.zeros((n, m))
    if scorer.kind == "iou":
        if not scorer.use_motion:
            return np.ones((n, m))
        return iou_matrix([t.box for t in tracklets], [d.box for d in detections])
    if scorer.kind == "cosine":
        if not scorer.use_appearance:
            return np.ones((n, m))
        A = _stack([t.appearance for t in tracklets])
        B = _stack([d.appearance for d in detections])
        if A.shape[1] != B.shape[1]:
            raise ValueError("appearance dimension mismatch between tracklets and detections")
        A = A / np.linalg.norm(A, axis=1, keepdims=True)
        B = B / np.linalg.norm(B, axis=1, keepdims=True)
        return np.clip(A @ B.T, -1.0, 1.0)
    if scorer.use_appearance:
        apps_t = _stack([t.appearance for t in tracklets])
        apps_d = _stack([d.appearance for d in detections])
        if apps_t.shape[1] != apps_d.shape[1]:
            raise ValueError("appearance dimension mismatch between tracklets and detections")
    else:
        apps_t = apps_d = None
    X = pair_feature_block(apps_t, [t.last_box for t in tracklets], [t.last_frame for t in tracklets],
                           apps_d, [d.box for d in detections], frame, fps)
    return scorer.predict(X).reshape(n, m)


def _stack(vectors) -> np.ndarray:
    if any(v is None for v in vectors):
        raise ValueError("appearance features are required on every tracklet and detection")
    return np.asarray(vectors, dtype=float)


def _blend(memory, new, momentum):
    if memory is None:
        return None if new is None else np.asarray(new, dtype=float)
    if new is None:
        return memory
    v = momentum * memory + (1.0 - momentum) * np.asarray(new, dtype=float)
    return v / np.linalg.norm(v)


def track_sequence(detections: Sequence[Sequence[Detection]], cfg: TrackerConfig,
                   fps: float = 30.0) -> list[list[tuple[int, tuple]]]:
    """Run the tracker online; returns per-frame ``(track_id, box)`` lists.

    Frame ``k`` of the output corresponds to ``detections[k]``. Only confirmed
    tracklets matched in the current frame are reported.
    """
    cfg.validate()
    kp = cfg.kalman
    tracks: list[Tracklet] = []
    next_id = 1
    out = []
    for frame, dets in enumerate(detections):
        dets = list(dets)
        tracks = [kalman_predict(t, kp) for t in tracks]
        scores = score_matrix(tracks, dets, cfg.scorer, frame, fps)
        result = solve_assignment(scores, cfg.match_threshold)
        survivors = []
        for i, j in result.matches:
            t, d = tracks[i], dets[j]
            t = kalman_update(t, d.box, kp)
            hits = t.hits + 1
            t = replace(t, last_box=tuple(d.box), last_frame=frame, age=0, hits=hits,
                        appearance=_blend(t.appearance, d.appearance, cfg.appearance_momentum),
                        status="confirmed" if hits >= cfg.min_hits else t.status)
            survivors.append(t)
        for i in result.unmatched_rows:
            t = tracks[i]
            age = t.age + 1
            if age > cfg.max_age:
                continue
            survivors.append(replace(t, age=age))
        for j in result.unmatched_cols:
            d = dets[j]
            t = Tracklet.start(next_id, d.box, frame, d.appearance, kp)
            if cfg.min_hits <= 1:
                t = replace(t, status="confirmed")
            survivors.append(t)
            next_id += 1
        survivors.sort(key=lambda t: t.track_id)
        tracks = survivors
        out.append([(t.track_id, t.box) for t in tracks if t.age == 0 and t.status == "confirmed"])
    return out
