import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from motlab.association.scorer import Scorer, TrainHyperparams, pair_features
from motlab.experiments import (
    TEST_ROLE,
    TRAIN_ROLE,
    FactorGrid,
    TrackerTemplate,
    ablate_features,
    derive_seed,
    evaluate_tracker,
    fit_tracker,
    prepare_sequence,
    run_sweep,
    significance_label,
    track_prepared,
    tune_threshold,
    welch_test,
)
from motlab.sensing import DetectionNoise
from motlab.sim_world import ConfigError, ScenarioConfig

SMALL = ScenarioConfig(duration_frames=40, target_density=6)
QUICK = TrackerTemplate(train=TrainHyperparams(epochs=3), train_sequences=1, test_sequences=1)


# ---------------------------------------------------------------- welch

def test_welch_hand_computed():
    a, b = [1, 2, 3, 4, 5], [2, 4, 6, 8, 10]
    # var_a/n = 0.5, var_b/n = 2.0, t = -3 / sqrt(2.5), df = 2.5^2 / (0.5^2/4 + 2^2/4)
    r = welch_test(a, b)
    assert r.t == pytest.approx(-3 / math.sqrt(2.5))
    assert r.df == pytest.approx(6.25 / 1.0625)
    # |t| = 1.897 sits between the two-sided 20% (1.440) and 10% (1.943) points at df = 6
    assert 0.10 < r.p_value < 0.20
    assert r.p_value == pytest.approx(stats.ttest_ind(a, b, equal_var=False).pvalue, rel=1e-10)
    assert r.label == "n.s."


def test_welch_symmetry():
    rng = np.random.default_rng(1)
    a, b = rng.normal(0, 1, 6), rng.normal(0.8, 2, 9)
    assert welch_test(a, b).p_value == pytest.approx(welch_test(b, a).p_value, rel=1e-12)
    assert welch_test(a, b).t == pytest.approx(-welch_test(b, a).t)


def test_welch_degenerate_cases():
    assert welch_test([2, 2, 2], [2, 2, 2]).p_value == 1.0
    r = welch_test([1, 3, 5], [1, 3, 5])
    assert (r.p_value, r.label) == (1.0, "n.s.")
    with pytest.raises(ValueError):
        welch_test([1], [1, 2])


def test_welch_separated():
    jitter = np.random.default_rng(3).normal(0, 1e-3, 10)
    r = welch_test(np.zeros(5) + jitter[:5], np.full(5, 10.0) + jitter[5:])
    assert r.p_value < 0.001 and r.label == "***"


@pytest.mark.parametrize("p,label", [(0.5, "n.s."), (0.05, "n.s."), (0.049, "*"), (0.01, "*"),
                                     (0.005, "**"), (0.001, "***"), (1e-9, "***")])
def test_significance_labels(p, label):
    assert significance_label(p) == label


# ---------------------------------------------------------------- seeds

def test_derive_seed_stable_and_keyed():
    s = derive_seed(7, 1, 0, 0, 0)
    assert s == derive_seed(7, 1, 0, 0, 0)
    assert 0 <= s < 2**63
    others = {derive_seed(7, 2, 0, 0, 0), derive_seed(8, 1, 0, 0, 0), derive_seed(7, 1, 0, 1, 0),
              derive_seed(7, 1, 0, 0, 1), derive_seed(7, 1, 1, 0, 0)}
    assert s not in others and len(others) == 5


def test_train_test_seed_separation():
    grid = FactorGrid("speed", (1.0, 2.0), (1.0, 2.0), trials=3, base_config=SMALL)
    tmpl = replace(QUICK, kind="cosine", train_sequences=2, test_sequences=2)
    res = run_sweep(grid, tmpl, master_seed=4)
    train = {s for seeds in res.train_seeds.values() for s in seeds}
    test = {s for seeds in res.test_seeds.values() for s in seeds}
    assert len(train) == 12 and len(test) == 12
    assert not train & test


# ---------------------------------------------------------------- sweeps

def test_one_by_one_sweep_equals_direct_run():
    grid = FactorGrid("density", (6,), (6,), trials=1, base_config=SMALL)
    res = run_sweep(grid, QUICK, master_seed=11)
    train = [prepare_sequence(replace(SMALL, seed=derive_seed(11, TRAIN_ROLE, 0, 0, 0)),
                              QUICK.noise, QUICK.reid_noise)]
    test = [prepare_sequence(replace(SMALL, seed=derive_seed(11, TEST_ROLE, 0, 0, 0)),
                             QUICK.noise, QUICK.reid_noise)]
    direct = evaluate_tracker(fit_tracker(QUICK, train), test).to_dict()
    cell = res.cell(6, 6)
    assert len(cell.trials) == 1 and not cell.failed
    for metric, value in cell.trials[0].items():
        assert value == direct[metric], metric


def test_sweep_reproducible_across_workers():
    grid = FactorGrid("speed", (1.0, 3.0), (1.0, 3.0), trials=2, base_config=SMALL)
    a = run_sweep(grid, QUICK, master_seed=2, workers=1).to_dict()
    b = run_sweep(grid, QUICK, master_seed=2, workers=2).to_dict()
    assert a == b
    assert a["trials"] == 2 and len(a["cells"]) == 4


def test_failed_cell_does_not_abort():
    grid = FactorGrid("density", (0, 6), (6,), trials=1, base_config=SMALL)
    res = run_sweep(grid, QUICK, master_seed=0)
    assert set(res.cells) == {(0, 6), (6, 6)}
    # no detections at density 0 -> no training pairs -> the cell is marked failed
    assert res.cell(0, 6).failed and res.cell(0, 6).error


def test_grid_validation():
    with pytest.raises((ValueError, ConfigError)):
        FactorGrid("speed", (0.0,), (1.0,)).validate()
    with pytest.raises((ValueError, ConfigError)):
        FactorGrid("weather", (1,), (1,)).validate()
    with pytest.raises((ValueError, ConfigError)):
        FactorGrid("speed", (1.0,), (1.0,), trials=0).validate()


def test_diagonal_test_requires_square_grid():
    grid = FactorGrid("density", (6,), (6, 8), trials=1, base_config=SMALL)
    res = run_sweep(grid, replace(QUICK, kind="cosine"), master_seed=0)
    with pytest.raises(ValueError):
        res.diagonal_test("idf1")


# ---------------------------------------------------------------- tuning

@pytest.fixture(scope="module")
def tune_set():
    return [prepare_sequence(replace(SMALL, seed=s), DetectionNoise(0.03, 0.03, 0.05, 0.5)) for s in (1, 2)]


def test_tune_single_value(tune_set):
    best, curve = tune_threshold(tune_set, [0.35])
    assert best == 0.35 and len(curve) == 1


def test_tune_rejects_bad_grids(tune_set):
    with pytest.raises(ValueError):
        tune_threshold(tune_set, [])
    with pytest.raises(ValueError):
        tune_threshold(tune_set, [0.0, 0.05])
    with pytest.raises(ValueError):
        tune_threshold(tune_set, [0.2, 0.4])


def test_tune_returns_argmax_with_low_tie_break(tune_set):
    grid = [round(0.05 * k, 2) for k in range(1, 20)]
    best, curve = tune_threshold(tune_set, grid)
    motas = [r.mota for _, r in curve]
    assert [t for t, _ in curve] == grid
    assert best == grid[motas.index(max(motas))]


def test_tune_tie_goes_low():
    # with no detections every threshold scores the same
    seqs = [prepare_sequence(replace(SMALL, seed=3), DetectionNoise(fn_prob=1.0))]
    best, _ = tune_threshold(seqs, [0.3, 0.25, 0.35])
    assert best == 0.25


# ---------------------------------------------------------------- ablation

def test_ablation_modes():
    s = Scorer.init(seed=0)
    assert ablate_features("A+M", s) is s
    blind_a = ablate_features("w/o A", s)
    assert (blind_a.use_appearance, blind_a.use_motion) == (False, True)
    blind_m = ablate_features("w/o M", s)
    assert (blind_m.use_appearance, blind_m.use_motion) == (True, False)
    with pytest.raises(ValueError):
        ablate_features("none", s)


def test_without_appearance_scores_ignore_appearance():
    s = ablate_features("w/o A", Scorer.init(seed=1))
    box_a, box_b = (10.0, 10.0, 30.0, 60.0), (14.0, 12.0, 30.0, 60.0)
    u = np.eye(8)[0]
    x1 = pair_features(u, box_a, 0, u, box_b, 1, 30.0)
    x2 = pair_features(u, box_a, 0, np.eye(8)[1], box_b, 1, 30.0)
    assert not np.array_equal(x1, x2)
    assert s.predict(x1[None])[0] == s.predict(x2[None])[0]


def test_without_appearance_latent_permutation_is_bitwise_invariant():
    cfg = replace(SMALL, duration_frames=60, target_density=10, seed=9)
    tmpl = replace(QUICK, mode="w/o A")
    base = prepare_sequence(cfg, tmpl.noise, 0.1)
    ids = base.truth.identities
    perm = dict(zip(ids, np.random.default_rng(0).permutation(ids).tolist()))
    permuted = prepare_sequence(cfg, tmpl.noise, 0.1, latent_permutation=perm)
    assert any(not np.array_equal(a.appearance, b.appearance)
               for fa, fb in zip(base.detections, permuted.detections) for a, b in zip(fa, fb))
    tracker = fit_tracker(tmpl, [base])
    assert track_prepared(base, tracker) == track_prepared(permuted, tracker)
    # training is blind too
    assert np.array_equal(tracker.scorer.params(), fit_tracker(tmpl, [permuted]).scorer.params())
