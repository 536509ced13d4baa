"""Association-knowledge scorers and training of the parametric one.

The parametric scorer is a two-layer perceptron over one 7-vector per
(tracklet, detection) pair: appearance cosine, box IoU, and the 5-d motion
feature. Masked feature groups are replaced by all-ones dummy vectors, both
when training and when scoring.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..sensing import Detection, motion_feature
from .assignment import cosine, iou, iou_matrix

N_INPUTS = 7
HIDDEN = 16
SCORER_KINDS = ("iou", "cosine", "parametric")


@dataclass
class Scorer:
    kind: str = "parametric"
    W1: Optional[np.ndarray] = field(default=None, repr=False)
    b1: Optional[np.ndarray] = field(default=None, repr=False)
    w2: Optional[np.ndarray] = field(default=None, repr=False)
    b2: float = 0.0
    use_appearance: bool = True
    use_motion: bool = True
    loss_curve: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}")

    @classmethod
    def init(cls, seed: int = 0, hidden: int = HIDDEN, use_appearance=True, use_motion=True) -> "Scorer":
        rng = np.random.default_rng(seed)
        return cls(
            "parametric",
            W1=rng.normal(0.0, np.sqrt(2.0 / N_INPUTS), size=(hidden, N_INPUTS)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, np.sqrt(1.0 / hidden), size=hidden),
            b2=0.0,
            use_appearance=use_appearance,
            use_motion=use_motion,
        )

    @property
    def hidden(self) -> int:
        return 0 if self.W1 is None else self.W1.shape[0]

    def params(self) -> np.ndarray:
        """Flat weight vector: W1 (row-major), b1, w2, b2."""
        return np.concatenate([self.W1.ravel(), self.b1, self.w2, [self.b2]])

    def with_params(self, theta: np.ndarray) -> "Scorer":
        h = self.hidden
        n = h * N_INPUTS
        theta = np.asarray(theta, dtype=float)
        return replace(self, W1=theta[:n].reshape(h, N_INPUTS).copy(), b1=theta[n:n + h].copy(),
                       w2=theta[n + h:n + 2 * h].copy(), b2=float(theta[-1]))

    def with_mask(self, use_appearance: bool, use_motion: bool) -> "Scorer":
        return replace(self, use_appearance=use_appearance, use_motion=use_motion)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.logits(X))

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = self.mask_inputs(X)
        h = np.maximum(X @ self.W1.T + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def mask_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, ndmin=2)
        if not self.use_appearance:
            X[:, 0] = 1.0
        if not self.use_motion:
            X[:, 1:] = 1.0
        return X


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def pair_features(app_i, box_i, frame_i, app_j, box_j, frame_j, fps) -> np.ndarray:
    """Scorer input for one pair; appearance may be None (scored as cosine 1)."""
    cos = 1.0 if app_i is None or app_j is None else cosine(app_i, app_j)
    return np.concatenate([[cos, iou(box_i, box_j)], motion_feature(box_i, frame_i, box_j, frame_j, fps)])


def pair_feature_block(apps_i, boxes_i, frames_i, apps_j, boxes_j, frame_j: int, fps: float) -> np.ndarray:
    """Features for every (i, j) pair, shape (n*m, 7), row-major over i then j.

    ``apps_i``/``apps_j`` may be None to mean "no appearance" (cosine 1).
    """
    bi = np.asarray(boxes_i, dtype=float).reshape(-1, 4)
    bj = np.asarray(boxes_j, dtype=float).reshape(-1, 4)
    n, m = len(bi), len(bj)
    if (bi[:, 2:] <= 0).any() or (bj[:, 2:] <= 0).any():
        raise ValueError("boxes must have positive width and height")
    if apps_i is None or apps_j is None:
        cos = np.ones((n, m))
    else:
        A = np.asarray(apps_i, dtype=float)
        B = np.asarray(apps_j, dtype=float)
        if A.shape[1] != B.shape[1]:
            raise ValueError("appearance dimension mismatch")
        A = A / np.linalg.norm(A, axis=1, keepdims=True)
        B = B / np.linalg.norm(B, axis=1, keepdims=True)
        cos = np.clip(A @ B.T, -1.0, 1.0)
    h_mean = 0.5 * (bi[:, 3][:, None] + bj[:, 3][None])
    cxi, cyi = bi[:, 0] + bi[:, 2] / 2, bi[:, 1] + bi[:, 3] / 2
    cxj, cyj = bj[:, 0] + bj[:, 2] / 2, bj[:, 1] + bj[:, 3] / 2
    dt = (frame_j - np.asarray(frames_i, dtype=float).reshape(-1))[:, None] / fps
    feats = np.stack([
        cos,
        iou_matrix(bi, bj),
        (cxj[None] - cxi[:, None]) / h_mean,
        (cyj[None] - cyi[:, None]) / h_mean,
        np.log(bj[:, 2][None] / bi[:, 2][:, None]),
        np.log(bj[:, 3][None] / bi[:, 3][:, None]),
        np.broadcast_to(dt, (n, m)),
    ], axis=-1)
    return feats.reshape(n * m, N_INPUTS)


def loss_and_grad(scorer: Scorer, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. ``scorer.params()``."""
    X = scorer.mask_inputs(X)
    y = np.asarray(y, dtype=float)
    n = len(y)
    pre = X @ scorer.W1.T + scorer.b1
    h = np.maximum(pre, 0.0)
    z = h @ scorer.w2 + scorer.b2
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (_sigmoid(z) - y) / n
    g_w2 = h.T @ dz
    g_b2 = dz.sum()
    dpre = np.outer(dz, scorer.w2) * (pre > 0)
    g_W1 = dpre.T @ X
    g_b1 = dpre.sum(axis=0)
    return loss, np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])


@dataclass(frozen=True)
class TrainHyperparams:
    lr: float = 0.05
    epochs: int = 20
    neg_per_pos: int = 4
    seed: int = 0
    batch_size: int = 256
    momentum: float = 0.9
    max_gap: int = 3
    use_appearance: bool = True
    use_motion: bool = True


@dataclass
class TrainingSequence:
    detections: list[list[Detection]]
    fps: float


def build_pairs(sequences: Sequence[TrainingSequence], max_gap: int = 3, neg_per_pos: int = 4,
                seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Labelled pairs: same identity across a gap of 1..max_gap frames (positive),
    and sampled different-identity detections in the same later frame (negative)."""
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0xBA125])
    X, y = [], []
    for seq in sequences:
        frames = seq.detections
        for t, dets in enumerate(frames):
            for di in dets:
                if di.true_identity is None:
                    continue
                for k in range(1, max_gap + 1):
                    if t + k >= len(frames):
                        break
                    later = frames[t + k]
                    same = [d for d in later if d.true_identity == di.true_identity]
                    if not same:
                        continue
                    dj = same[0]
                    X.append(pair_features(di.appearance, di.box, t, dj.appearance, dj.box, t + k, seq.fps))
                    y.append(1.0)
                    others = [d for d in later if d.true_identity is not None and d.true_identity != di.true_identity]
                    if not others:
                        continue
                    picks = rng.choice(len(others), size=min(neg_per_pos, len(others)), replace=False)
                    for p in sorted(picks.tolist()):
                        dn = others[p]
                        X.append(pair_features(di.appearance, di.box, t, dn.appearance, dn.box, t + k, seq.fps))
                        y.append(0.0)
    return np.array(X, dtype=float).reshape(-1, N_INPUTS), np.array(y)


def fit_scorer(X: np.ndarray, y: np.ndarray, hp: TrainHyperparams,
               init: Optional[Scorer] = None) -> Scorer:
    """Mini-batch gradient descent (with momentum) on binary cross-entropy."""
    scorer = init if init is not None else Scorer.init(hp.seed, use_appearance=hp.use_appearance,
                                                       use_motion=hp.use_motion)
    rng = np.random.default_rng([int(hp.seed) & 0xFFFFFFFFFFFFFFFF, 0x5D6])
    theta = scorer.params()
    velocity = np.zeros_like(theta)
    curve = []
    n = len(y)
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            _, grad = loss_and_grad(scorer, X[idx], y[idx])
            velocity = hp.momentum * velocity - hp.lr * grad
            theta = theta + velocity
            scorer = scorer.with_params(theta)
        curve.append(loss_and_grad(scorer, X, y)[0])
    scorer.loss_curve = curve
    return scorer


def train_scorer(sequences: Sequence[TrainingSequence], hp: TrainHyperparams = TrainHyperparams()) -> Scorer:
    X, y = build_pairs(sequences, hp.max_gap, hp.neg_per_pos, hp.seed)
    if not (y == 1).any():
        raise ValueError("training data contains no positive pairs")
    if not (y == 0).any():
        raise ValueError("training data contains no negative pairs")
    return fit_scorer(X, y, hp)
