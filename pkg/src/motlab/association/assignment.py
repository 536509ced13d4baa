"""Box/feature similarity primitives and the one-to-one assignment solver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


def iou(a, b) -> float:
    """Intersection over union of two (left, top, width, height) boxes."""
    ax0, ay0, aw, ah = a
    bx0, by0, bw, bh = b
    iw = min(ax0 + aw, bx0 + bw) - max(ax0, bx0)
    ih = min(ay0 + ah, by0 + bh) - max(ay0, by0)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return min(inter / union, 1.0)


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    a = np.asarray(boxes_a, dtype=float).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=float).reshape(-1, 4)
    ax1, ay1 = a[:, 0] + a[:, 2], a[:, 1] + a[:, 3]
    bx1, by1 = b[:, 0] + b[:, 2], b[:, 1] + b[:, 3]
    iw = np.minimum(ax1[:, None], bx1[None]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(ay1[:, None], by1[None]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
    return np.minimum(out, 1.0)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine of a zero vector is undefined")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass
class Assignment:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)

    def total(self, scores) -> float:
        scores = np.asarray(scores)
        return math.fsum(scores[i, j] for i, j in self.matches)


def solve_assignment(scores, threshold: float = -math.inf) -> Assignment:
    """Maximise the summed score of a one-to-one partial matching.

    Negative entries are never worth selecting, so the Hungarian solve runs on
    the matrix clamped at zero; pairs that end up scoring below zero or below
    ``threshold`` are then released as unmatched.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2:
        raise ValueError("score matrix must be 2-D")
    n_rows, n_cols = s.shape
    if not np.isfinite(s).all():
        raise ValueError("score matrix has non-finite entries")
    matches: list[tuple[int, int]] = []
    if n_rows and n_cols:
        rows, cols = linear_sum_assignment(np.maximum(s, 0.0), maximize=True)
        for i, j in zip(rows.tolist(), cols.tolist()):
            if s[i, j] >= 0 and s[i, j] >= threshold:
                matches.append((i, j))
    matched_r = {i for i, _ in matches}
    matched_c = {j for _, j in matches}
    return Assignment(
        matches=matches,
        unmatched_rows=[i for i in range(n_rows) if i not in matched_r],
        unmatched_cols=[j for j in range(n_cols) if j not in matched_c],
    )
