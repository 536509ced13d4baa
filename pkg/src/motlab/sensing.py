"""Detector-like observations and association features.

Detections are jittered visible ground-truth boxes plus Poisson clutter.
Appearance vectors stand in for a frozen Re-ID model: every identity owns a
random unit latent, optionally pushed through a :class:`DomainShift`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .sim_world import Box, SequenceTruth

EMBED_DIM = 32
_LATENT_TAG = 0xA11CE
_CLUTTER_TAG = 0xC1A7


@dataclass
class Detection:
    frame: int
    box: Box
    confidence: float = 1.0
    true_identity: Optional[int] = None  # hidden from trackers
    appearance: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class DetectionNoise:
    center_sigma_rel: float = 0.0
    size_sigma_rel: float = 0.0
    fn_prob: float = 0.0
    fp_per_frame: float = 0.0
    min_visibility: float = 0.25

    def validate(self) -> "DetectionNoise":
        if not 0.0 <= self.fn_prob <= 1.0:
            raise ValueError("fn_prob must lie in [0, 1]")
        if not 0.0 <= self.min_visibility <= 1.0:
            raise ValueError("min_visibility must lie in [0, 1]")
        for name in ("center_sigma_rel", "size_sigma_rel", "fp_per_frame"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        return self


@dataclass(frozen=True)
class DomainShift:
    rotation: np.ndarray
    bias: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if not np.allclose(r.T @ r, np.eye(len(r)), atol=1e-9, rtol=0):
            raise ValueError("rotation must be orthogonal")

    @classmethod
    def random(cls, dim: int = EMBED_DIM, seed: int = 0, noise_sigma: float = 0.0,
               bias_scale: float = 0.0) -> "DomainShift":
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
        q = q * np.sign(np.diag(r))
        return cls(q, rng.normal(scale=bias_scale, size=dim) if bias_scale else np.zeros(dim), noise_sigma)


def _clip_box(box, resolution) -> Optional[Box]:
    left, top, w, h = box
    W, H = resolution
    l, t = max(left, 0.0), max(top, 0.0)
    r, b = min(left + w, float(W)), min(top + h, float(H))
    if r - l <= 0 or b - t <= 0:
        return None
    return (float(l), float(t), float(r - l), float(b - t))


def perturb_detections(truth: SequenceTruth, noise: DetectionNoise, seed: int) -> list[list[Detection]]:
    """Per-frame detections derived from the visible ground-truth boxes.

    Boxes with visibility at or below ``noise.min_visibility`` are never
    detected; others are dropped with ``fn_prob`` or jittered by Gaussian noise
    scaled by box size. Clutter boxes (``true_identity=None``) arrive at a
    Poisson rate per frame.
    """
    noise.validate()
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0xDE7])
    resolution = truth.config.resolution
    out: list[list[Detection]] = []
    for frame, boxes in enumerate(truth.frames):
        dets = []
        for gt in boxes:
            if gt.visible_box is None or gt.visibility <= noise.min_visibility:
                continue
            if noise.fn_prob and rng.random() < noise.fn_prob:
                continue
            left, top, w, h = gt.visible_box
            if noise.center_sigma_rel or noise.size_sigma_rel:
                cx = left + w / 2 + rng.normal(0.0, noise.center_sigma_rel * w)
                cy = top + h / 2 + rng.normal(0.0, noise.center_sigma_rel * h)
                w *= math.exp(rng.normal(0.0, noise.size_sigma_rel))
                h *= math.exp(rng.normal(0.0, noise.size_sigma_rel))
                box = _clip_box((cx - w / 2, cy - h / 2, w, h), resolution)
                if box is None:
                    continue
            else:
                box = gt.visible_box
            dets.append(Detection(frame, box, 1.0, gt.identity))
        n_clutter = rng.poisson(noise.fp_per_frame) if noise.fp_per_frame else 0
        W, H = resolution
        for _ in range(n_clutter):
            h = rng.uniform(0.05, 0.3) * H
            w = h * rng.uniform(0.3, 0.5)
            box = _clip_box((rng.uniform(0, W - w), rng.uniform(0, H - h), w, h), resolution)
            if box is not None:
                dets.append(Detection(frame, box, float(rng.uniform(0.3, 0.9)), None))
        out.append(dets)
    return out


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def identity_latent(identity: int, seed: int, dim: int = EMBED_DIM) -> np.ndarray:
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, _LATENT_TAG, int(identity)])
    return _unit(rng.normal(size=dim))


def identity_latents(identities, seed: int, dim: int = EMBED_DIM) -> dict[int, np.ndarray]:
    return {int(i): identity_latent(i, seed, dim) for i in identities}


def appearance_embedding(latent: np.ndarray, shift: Optional[DomainShift] = None,
                         rng: "np.random.Generator | int | None" = None) -> np.ndarray:
    """normalize(rotation @ latent + bias + N(0, noise_sigma)); identity when ``shift`` is None."""
    latent = np.asarray(latent, dtype=float)
    if shift is None:
        return latent.copy()
    v = shift.rotation @ latent + shift.bias
    if shift.noise_sigma > 0:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        v = v + rng.normal(0.0, shift.noise_sigma, size=v.shape)
    return _unit(v)


def embed_detections(detections: list[list[Detection]], latents: dict[int, np.ndarray],
                     seed: int, reid_noise: float = 0.0,
                     shift: Optional[DomainShift] = None) -> list[list[Detection]]:
    """Attach appearance vectors to detections (returns new Detection objects).

    ``reid_noise`` is per-detection Gaussian jitter on the identity latent,
    applied before the optional domain shift. Clutter gets random unit vectors.
    """
    dim = len(next(iter(latents.values()))) if latents else EMBED_DIM
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, _CLUTTER_TAG])
    out = []
    for dets in detections:
        frame_out = []
        for d in dets:
            if d.true_identity is None:
                base = _unit(rng.normal(size=dim))
            else:
                base = latents[d.true_identity]
                if reid_noise > 0:
                    base = _unit(base + rng.normal(0.0, reid_noise, size=dim))
            frame_out.append(replace(d, appearance=appearance_embedding(base, shift, rng)))
        out.append(frame_out)
    return out


def box_center(box) -> tuple[float, float]:
    return (box[0] + box[2] / 2.0, box[1] + box[3] / 2.0)


def motion_feature(box_i, frame_i: int, box_j, frame_j: int, fps: float) -> np.ndarray:
    """(dx/h, dy/h, log(w_j/w_i), log(h_j/h_i), dt/fps) with h the mean box height."""
    wi, hi = box_i[2], box_i[3]
    wj, hj = box_j[2], box_j[3]
    if min(wi, hi, wj, hj) <= 0:
        raise ValueError("boxes must have positive width and height")
    cxi, cyi = box_center(box_i)
    cxj, cyj = box_center(box_j)
    h_mean = 0.5 * (hi + hj)
    return np.array([
        (cxj - cxi) / h_mean,
        (cyj - cyi) / h_mean,
        math.log(wj / wi),
        math.log(hj / hi),
        (frame_j - frame_i) / fps,
    ])
