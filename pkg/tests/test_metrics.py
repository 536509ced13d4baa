import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motlab.metrics import clear_metrics, evaluate_many, idf1, identity_overlap, match_frame
from fixtures import TEN_FRAME_EXPECTED, perfect_fixture, swap_fixture, ten_frame_fixture
from oracles import brute_idf1, random_instance


# ---------------------------------------------------------------- fixtures

def test_perfect_tracker():
    gt, pred = perfect_fixture()
    r = clear_metrics(gt, pred)
    assert (r.mota, r.idf1, r.idsw, r.mt, r.ml) == (1.0, 1.0, 0, 100.0, 0.0)


def test_ten_frame_fixture():
    gt, pred = ten_frame_fixture()
    r = clear_metrics(gt, pred)
    for key, value in TEN_FRAME_EXPECTED.items():
        assert getattr(r, key) == pytest.approx(value, abs=1e-12), key


def test_swap_fixture():
    r = clear_metrics(*swap_fixture())
    assert (r.idsw, r.fp, r.fn) == (2, 0, 0)


def test_half_coverage_idf1():
    gt, _ = perfect_fixture(4)
    pred = [[(11, gt[f][0][1])] for f in range(4)]
    # GT identity 2 never found: IDTP 4, IDFN 4, IDFP 0
    assert idf1(gt, pred) == pytest.approx(2 / 3)


def test_split_track_idf1():
    gt = [[(1, (0.0, 0.0, 40.0, 80.0))] for _ in range(4)]
    pred = [[(5 if f < 2 else 6, (0.0, 0.0, 40.0, 80.0))] for f in range(4)]
    assert idf1(gt, pred) == pytest.approx(0.5)
    assert clear_metrics(gt, pred).idsw == 1


def test_empty_predictions():
    gt, _ = perfect_fixture(5)
    r = clear_metrics(gt, [[] for _ in gt])
    assert (r.mota, r.idf1, r.ml, r.mt, r.fn) == (0.0, 0.0, 100.0, 0.0, 10)


def test_empty_ground_truth_rejected():
    with pytest.raises(ValueError):
        clear_metrics([[], []], [[], []])


def test_predictions_past_gt_rejected():
    gt, pred = perfect_fixture(3)
    with pytest.raises(ValueError):
        clear_metrics(gt, pred + [[(11, (0.0, 0.0, 5.0, 5.0))]])


# ---------------------------------------------------------------- oracles and properties

def test_idf1_brute_force_oracle():
    rng = np.random.default_rng(20)
    for _ in range(250):
        gt, pred = random_instance(rng)
        assert idf1(gt, pred) == brute_idf1(gt, pred)
        assert clear_metrics(gt, pred).idf1 == pytest.approx(brute_idf1(gt, pred), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_mota_formula_and_bounds(seed):
    gt, pred = random_instance(np.random.default_rng(seed))
    r = clear_metrics(gt, pred)
    assert r.mota == pytest.approx(1 - (r.fp + r.fn + r.idsw) / r.gt_total)
    assert r.matched + r.fn == r.gt_total
    assert r.matched + r.fp == sum(len(f) for f in pred)
    assert 0.0 <= r.idf1 <= 1.0 and r.mota <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_rename_invariance(seed):
    rng = np.random.default_rng(seed)
    gt, pred = random_instance(rng)
    perm = {p: 900 + int(k) for p, k in zip(range(101, 105), rng.permutation(4))}
    renamed = [[(perm[p], b) for p, b in f] for f in pred]
    a, b = clear_metrics(gt, pred), clear_metrics(gt, renamed)
    assert (a.mota, a.idf1, a.idsw) == (b.mota, b.idf1, b.idsw)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_pure_false_positive_track_never_helps(seed):
    gt, pred = random_instance(np.random.default_rng(seed))
    far = [list(f) + [(999, (5000.0, 5000.0, 30.0, 30.0))] for f in pred]
    a, b = clear_metrics(gt, pred), clear_metrics(gt, far)
    assert b.mota <= a.mota and b.idf1 <= a.idf1
    assert b.fp == a.fp + len(gt)


def test_switch_after_track_disappears():
    box = (0.0, 0.0, 40.0, 80.0)
    previous = {}
    counts = [match_frame(g, p, previous).switch_count for g, p in (
        ([(1, box)], [(5, box)]),
        ([(1, box)], []),
        ([(1, box)], [(6, box)]),
        ([(1, box)], [(6, box)]),
    )]
    assert counts == [0, 0, 1, 0]


def test_sticky_match_keeps_identity():
    # track 5 still overlaps GT 1 above the gate, so a better-overlapping newcomer must not steal it
    previous = {1: 5}
    fc = match_frame([(1, (0.0, 0.0, 40.0, 80.0))],
                     [(5, (8.0, 0.0, 40.0, 80.0)), (6, (0.0, 0.0, 40.0, 80.0))], previous)
    assert fc.pairs == [(1, 5)] and fc.switch_count == 0 and fc.fp_count == 1


def test_gate_validation():
    with pytest.raises(ValueError):
        match_frame([], [], {}, iou_gate=1.0)


def test_identity_overlap_matrix():
    gt, pred = ten_frame_fixture()
    gt_ids, pr_ids, W = identity_overlap(gt, pred)
    assert gt_ids == [1, 2] and pr_ids == [11, 12]
    assert W.tolist() == [[5, 4], [5, 5]]


def test_pooling_sums_counts():
    a, b = ten_frame_fixture(), swap_fixture()
    pooled = evaluate_many([a, b])
    ra, rb = clear_metrics(*a), clear_metrics(*b)
    assert pooled.idsw == ra.idsw + rb.idsw
    assert pooled.gt_total == ra.gt_total + rb.gt_total
    assert pooled.mota == pytest.approx(1 - (ra.fp + ra.fn + ra.idsw + rb.fp + rb.fn + rb.idsw) / pooled.gt_total)
    assert evaluate_many([b, a]).to_dict() == pooled.to_dict()


def test_idswr_and_mt_ml():
    gt, pred = ten_frame_fixture()
    r = clear_metrics(gt, pred)
    assert r.idswr == pytest.approx(100 * 2 / 19)
    assert (r.mt, r.ml) == (100.0, 0.0)
