"""CLEAR-MOT and identity (IDF1) metrics.

Both ground truth and tracker output are *frame tables*: one list per frame of
``(identity, box)`` tuples, boxes as (left, top, width, height).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .association.assignment import iou_matrix, solve_assignment

FrameTable = Sequence[Sequence[tuple]]

MOSTLY_TRACKED = 0.8
MOSTLY_LOST = 0.2


@dataclass
class FrameCorrespondence:
    frame: int
    pairs: list[tuple[int, int]] = field(default_factory=list)
    fp_count: int = 0
    fn_count: int = 0
    switch_count: int = 0


def match_frame(gt, pred, previous: dict[int, int], iou_gate: float = 0.5,
                frame: int = 0) -> FrameCorrespondence:
    """Match one frame, keeping still-valid correspondences first.

    ``previous`` maps each GT id to the track id it was last matched to; it is
    updated in place.
    """
    if not 0.0 < iou_gate < 1.0:
        raise ValueError("iou_gate must lie in (0, 1)")
    gt_ids = [g for g, _ in gt]
    pred_ids = [p for p, _ in pred]
    ious = iou_matrix([b for _, b in gt], [b for _, b in pred]) if gt and pred else np.zeros((len(gt), len(pred)))
    pred_index = {p: j for j, p in enumerate(pred_ids)}
    gt_free = set(range(len(gt)))
    pred_free = set(range(len(pred)))
    pairs: list[tuple[int, int]] = []
    for i, g in enumerate(gt_ids):
        p = previous.get(g)
        j = pred_index.get(p) if p is not None else None
        if j is not None and j in pred_free and ious[i, j] >= iou_gate:
            pairs.append((i, j))
            gt_free.discard(i)
            pred_free.discard(j)
    rows, cols = sorted(gt_free), sorted(pred_free)
    if rows and cols:
        sub = ious[np.ix_(rows, cols)]
        gated = np.where(sub >= iou_gate, sub, 0.0)
        for a, b in solve_assignment(gated, iou_gate).matches:
            pairs.append((rows[a], cols[b]))
    switches = 0
    out_pairs = []
    for i, j in sorted(pairs):
        g, p = gt_ids[i], pred_ids[j]
        if g in previous and previous[g] != p:
            switches += 1
        previous[g] = p
        out_pairs.append((g, p))
    return FrameCorrespondence(frame, out_pairs, len(pred) - len(pairs), len(gt) - len(pairs), switches)


@dataclass
class EvalReport:
    mota: float
    idf1: float
    idsw: int
    idswr: float
    mt: float
    ml: float
    fp: int
    fn: int
    gt_total: int
    matched: int = 0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    num_tracks: int = 0
    mostly_tracked: int = 0
    mostly_lost: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Counts:
    fp: int = 0
    fn: int = 0
    idsw: int = 0
    gt_total: int = 0
    matched: int = 0
    pred_total: int = 0
    idtp: int = 0
    coverage: list[tuple[int, int]] = field(default_factory=list)  # (matched frames, frames) per GT track

    def __iadd__(self, other: "_Counts") -> "_Counts":
        for name in ("fp", "fn", "idsw", "gt_total", "matched", "pred_total", "idtp"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.coverage.extend(other.coverage)
        return self


def _align(gt: FrameTable, pred: FrameTable) -> tuple[list, list]:
    gt, pred = list(gt), list(pred)
    if len(pred) > len(gt):
        if any(pred[len(gt):]):
            raise ValueError("predictions extend beyond the ground-truth frame range")
        pred = pred[:len(gt)]
    pred = pred + [[] for _ in range(len(gt) - len(pred))]
    return gt, pred


def _clear_counts(gt: FrameTable, pred: FrameTable, iou_gate: float) -> _Counts:
    gt, pred = _align(gt, pred)
    counts = _Counts()
    previous: dict[int, int] = {}
    seen: dict[int, int] = defaultdict(int)
    hit: dict[int, int] = defaultdict(int)
    for f, (g, p) in enumerate(zip(gt, pred)):
        fc = match_frame(g, p, previous, iou_gate, f)
        counts.fp += fc.fp_count
        counts.fn += fc.fn_count
        counts.idsw += fc.switch_count
        counts.matched += len(fc.pairs)
        counts.gt_total += len(g)
        counts.pred_total += len(p)
        for gid, _ in g:
            seen[gid] += 1
        for gid, _ in fc.pairs:
            hit[gid] += 1
    counts.coverage = [(hit[g], seen[g]) for g in sorted(seen)]
    counts.idtp = _idtp(gt, pred, iou_gate)
    return counts


def identity_overlap(gt: FrameTable, pred: FrameTable, iou_gate: float = 0.5):
    """Frames each (GT id, predicted id) pair overlaps with IoU >= gate.

    Returns (gt ids, predicted ids, count matrix).
    """
    gt, pred = _align(gt, pred)
    gt_ids = sorted({g for frame in gt for g, _ in frame})
    pr_ids = sorted({p for frame in pred for p, _ in frame})
    gi = {g: k for k, g in enumerate(gt_ids)}
    pi = {p: k for k, p in enumerate(pr_ids)}
    W = np.zeros((len(gt_ids), len(pr_ids)), dtype=np.int64)
    for g, p in zip(gt, pred):
        if not g or not p:
            continue
        ious = iou_matrix([b for _, b in g], [b for _, b in p])
        rows, cols = np.nonzero(ious >= iou_gate)
        for a, b in zip(rows.tolist(), cols.tolist()):
            W[gi[g[a][0]], pi[p[b][0]]] += 1
    return gt_ids, pr_ids, W


def _idtp(gt: FrameTable, pred: FrameTable, iou_gate: float) -> int:
    _, _, W = identity_overlap(gt, pred, iou_gate)
    if W.size == 0:
        return 0
    result = solve_assignment(W.astype(float))
    return int(sum(W[i, j] for i, j in result.matches))


def _report(c: _Counts) -> EvalReport:
    if c.gt_total == 0:
        raise ValueError("ground truth is empty; metrics are undefined")
    idfn = c.gt_total - c.idtp
    idfp = c.pred_total - c.idtp
    denom = 2 * c.idtp + idfp + idfn
    n_tracks = len(c.coverage)
    mt = sum(1 for h, n in c.coverage if h >= MOSTLY_TRACKED * n)
    ml = sum(1 for h, n in c.coverage if h <= MOSTLY_LOST * n)
    return EvalReport(
        mota=1.0 - (c.fp + c.fn + c.idsw) / c.gt_total,
        idf1=2 * c.idtp / denom if denom else 0.0,
        idsw=c.idsw,
        idswr=100.0 * c.idsw / c.matched if c.matched else 0.0,
        mt=100.0 * mt / n_tracks if n_tracks else 0.0,
        ml=100.0 * ml / n_tracks if n_tracks else 0.0,
        fp=c.fp,
        fn=c.fn,
        gt_total=c.gt_total,
        matched=c.matched,
        idtp=c.idtp,
        idfp=idfp,
        idfn=idfn,
        num_tracks=n_tracks,
        mostly_tracked=mt,
        mostly_lost=ml,
    )


def clear_metrics(gt: FrameTable, pred: FrameTable, iou_gate: float = 0.5) -> EvalReport:
    """MOTA, FP, FN, IDSW, IDSwR, MT, ML (plus IDF1) for one sequence."""
    return _report(_clear_counts(gt, pred, iou_gate))


def idf1(gt: FrameTable, pred: FrameTable, iou_gate: float = 0.5) -> float:
    gt, pred = _align(gt, pred)
    g_total = sum(len(f) for f in gt)
    p_total = sum(len(f) for f in pred)
    if g_total == 0:
        raise ValueError("ground truth is empty; metrics are undefined")
    tp = _idtp(gt, pred, iou_gate)
    return 2 * tp / (g_total + p_total)


def evaluate_many(pairs: Sequence[tuple[FrameTable, FrameTable]], iou_gate: float = 0.5) -> EvalReport:
    """Pool raw counts over several sequences, then derive the metrics."""
    total = _Counts()
    for gt, pred in pairs:
        total += _clear_counts(gt, pred, iou_gate)
    return _report(total)
