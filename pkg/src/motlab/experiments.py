"""Seeded experiment designs: factor sweeps, feature ablations, threshold tuning.

Every random quantity in a sweep is derived from ``(master_seed, role, value
index, trial, sequence index)`` so results do not depend on scheduling.
Training sets for a given train value and trial are shared by all test
values, and test sets for a given test value and trial are shared by all
train values, which makes columns of a sweep directly comparable.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from .association import (
    Scorer,
    TrackerConfig,
    TrainHyperparams,
    TrainingSequence,
    train_scorer,
    track_sequence,
)
from .metrics import EvalReport, evaluate_many
from .sensing import DetectionNoise, DomainShift, embed_detections, identity_latents, perturb_detections
from .sim_world import CameraMotion, ConfigError, ScenarioConfig, SequenceTruth, generate_scenario

FACTORS = ("camera_view", "camera_motion", "speed", "density", "fps")
ABLATION_MODES = ("A+M", "w/o A", "w/o M")
METRIC_NAMES = ("mota", "idf1", "idsw", "idswr", "mt", "ml", "fp", "fn")

TRAIN_ROLE, TEST_ROLE = 1, 2


def derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# ---------------------------------------------------------------- sequences

@dataclass
class PreparedSequence:
    truth: SequenceTruth
    detections: list
    gt: list  # frame table of evaluable GT boxes

    @property
    def fps(self) -> float:
        return self.truth.config.fps


def gt_table(truth: SequenceTruth, min_visibility: float = 0.25) -> list[list[tuple]]:
    """Visible-part boxes of GT objects whose visibility exceeds ``min_visibility``."""
    return [[(b.identity, b.visible_box) for b in boxes
             if b.visible_box is not None and b.visibility > min_visibility]
            for boxes in truth.frames]


def prepare_sequence(config: ScenarioConfig, noise: DetectionNoise = DetectionNoise(),
                     reid_noise: float = 0.0, shift: Optional[DomainShift] = None,
                     latent_seed: Optional[int] = None, latent_permutation: Optional[dict] = None
                     ) -> PreparedSequence:
    """Simulate, detect and embed one sequence.

    ``latent_permutation`` remaps identities onto other identities' latents.
    """
    truth = generate_scenario(config)
    seed = config.seed if latent_seed is None else latent_seed
    dets = perturb_detections(truth, noise, seed)
    latents = identity_latents(truth.identities, seed)
    if latent_permutation:
        latents = {i: latents[latent_permutation.get(i, i)] for i in latents}
    dets = embed_detections(dets, latents, seed, reid_noise=reid_noise, shift=shift)
    return PreparedSequence(truth, dets, gt_table(truth, noise.min_visibility))


# ---------------------------------------------------------------- ablation

def mask_for(mode: str) -> tuple[bool, bool]:
    if mode not in ABLATION_MODES:
        raise ValueError(f"unknown ablation mode {mode!r}; expected one of {ABLATION_MODES}")
    return mode != "w/o A", mode != "w/o M"


def ablate_features(mode: str, scorer: Scorer) -> Scorer:
    """Blind the scorer to appearance and/or motion by all-ones substitution."""
    use_a, use_m = mask_for(mode)
    if mode == "A+M":
        return scorer
    return scorer.with_mask(scorer.use_appearance and use_a, scorer.use_motion and use_m)


# ---------------------------------------------------------------- templates

@dataclass(frozen=True)
class TrackerTemplate:
    """How to build, train and evaluate one tracker family inside an experiment."""

    kind: str = "parametric"  # parametric | sort | cosine
    mode: str = "A+M"
    threshold: float = 0.5
    max_age: int = 3
    min_hits: int = 2
    train: TrainHyperparams = TrainHyperparams()
    threshold_grid: tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(1, 20))
    noise: DetectionNoise = DetectionNoise(0.02, 0.02, 0.05, 0.0)
    reid_noise: float = 0.1
    train_sequences: int = 2
    test_sequences: int = 2

    def tracker_config(self, scorer: Optional[Scorer] = None, threshold: Optional[float] = None) -> TrackerConfig:
        if self.kind == "parametric" and scorer is None:
            raise ValueError("a parametric template needs a scorer")
        if self.kind == "sort":
            scorer = Scorer("iou")
        elif self.kind == "cosine":
            scorer = Scorer("cosine")
        use_a, use_m = mask_for(self.mode)
        if self.kind != "parametric":
            scorer = scorer.with_mask(use_a, use_m)
        return TrackerConfig(scorer, self.threshold if threshold is None else threshold,
                             self.max_age, self.min_hits).validate()


def track_prepared(seq: PreparedSequence, cfg: TrackerConfig) -> list[list[tuple]]:
    return track_sequence(seq.detections, cfg, seq.fps)


def evaluate_tracker(cfg: TrackerConfig, sequences: Sequence[PreparedSequence]) -> EvalReport:
    return evaluate_many([(s.gt, track_prepared(s, cfg)) for s in sequences])


def tune_threshold(sequences: Sequence[PreparedSequence], thresholds: Sequence[float],
                   template: TrackerTemplate = TrackerTemplate(kind="sort", max_age=1, min_hits=3)
                   ) -> tuple[float, list[tuple[float, EvalReport]]]:
    """Grid-search the match threshold by MOTA; ties go to the lower threshold."""
    grid = sorted(float(t) for t in thresholds)
    if not grid:
        raise ValueError("threshold grid is empty")
    if grid[0] <= 0 or grid[-1] >= 1:
        raise ValueError("thresholds must lie strictly inside (0, 1)")
    if len(grid) > 1 and max(np.diff(grid)) > 0.05 + 1e-9:
        raise ValueError("threshold grid step must be <= 0.05")
    curve = []
    best, best_mota = grid[0], -math.inf
    for thr in grid:
        report = evaluate_tracker(template.tracker_config(threshold=thr), sequences)
        curve.append((thr, report))
        if report.mota > best_mota:
            best, best_mota = thr, report.mota
    return best, curve


def fit_tracker(template: TrackerTemplate, sequences: Sequence[PreparedSequence]) -> TrackerConfig:
    """Train (parametric) or tune (SORT) a tracker on labelled sequences."""
    if template.kind == "parametric":
        use_a, use_m = mask_for(template.mode)
        hp = replace(template.train, use_appearance=use_a, use_motion=use_m)
        scorer = train_scorer([TrainingSequence(s.detections, s.fps) for s in sequences], hp)
        return template.tracker_config(scorer)
    if template.kind == "sort":
        best, _ = tune_threshold(sequences, template.threshold_grid, template)
        return template.tracker_config(threshold=best)
    return template.tracker_config()


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class FactorGrid:
    factor: str
    train_values: tuple
    test_values: tuple
    trials: int = 5
    base_config: ScenarioConfig = ScenarioConfig(duration_frames=200, target_density=15)
    test_overrides: tuple = ()  # (field, value) pairs applied to test scenarios only

    def validate(self) -> "FactorGrid":
        if self.factor not in FACTORS:
            raise ConfigError("factor", f"must be one of {FACTORS}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not self.train_values or not self.test_values:
            raise ConfigError("train_values", "train and test value lists must be non-empty")
        for v in (*self.train_values, *self.test_values):
            apply_factor(self.base_config, self.factor, v)
        return self


def apply_factor(config: ScenarioConfig, factor: str, value) -> ScenarioConfig:
    if factor == "camera_view":
        cfg = replace(config, camera_view=str(value))
    elif factor == "camera_motion":
        if value in ("static", 0, 0.0):
            motion = CameraMotion()
        elif value == "moving":
            motion = CameraMotion.moving(2.0)
        else:
            motion = CameraMotion.moving(float(value))
        cfg = replace(config, camera_motion=motion)
    elif factor == "speed":
        if not float(value) > 0:
            raise ConfigError("speed", "must be > 0 m/s")
        std = config.speed_dist[1] / config.speed_dist[0] * float(value)
        cfg = replace(config, speed_dist=(float(value), std))
    elif factor == "density":
        cfg = replace(config, target_density=int(value))
    elif factor == "fps":
        cfg = replace(config, fps=float(value))
    else:
        raise ConfigError("factor", f"must be one of {FACTORS}")
    return cfg.validate()


@dataclass
class CellResult:
    train_value: Any
    test_value: Any
    trials: list[dict] = field(default_factory=list)
    failed: bool = False
    error: str = ""

    def values(self, metric: str) -> list[float]:
        return [t[metric] for t in self.trials]

    def mean(self, metric: str) -> float:
        return float(np.mean(self.values(metric)))

    def std(self, metric: str) -> float:
        v = self.values(metric)
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0


@dataclass
class SweepResult:
    factor: str
    train_values: tuple
    test_values: tuple
    trials: int
    master_seed: int
    cells: dict = field(default_factory=dict)  # (train_value, test_value) -> CellResult
    train_seeds: dict = field(default_factory=dict)  # (train_value, trial) -> [scenario seeds]
    test_seeds: dict = field(default_factory=dict)  # (test_value, trial) -> [scenario seeds]

    def cell(self, train_value, test_value) -> CellResult:
        return self.cells[(train_value, test_value)]

    def compare(self, test_value, train_a, train_b, metric: str) -> "WelchResult":
        return welch_test(self.cell(train_a, test_value).values(metric),
                          self.cell(train_b, test_value).values(metric))

    def diagonal_test(self, metric: str = "idf1") -> tuple[float, float, "WelchResult"]:
        """Matched (diagonal) versus mismatched cells on a square grid.

        Every cell in a test column is scored on the same test scenarios per
        trial, so each trial's column mean is subtracted first; the Welch test
        then compares pooled diagonal residuals with pooled off-diagonal ones.
        Returns (diagonal mean, off-diagonal mean, test on residuals).
        """
        if tuple(self.train_values) != tuple(self.test_values):
            raise ValueError("diagonal_test needs identical train and test values")
        diag, off, diag_res, off_res = [], [], [], []
        for te in self.test_values:
            column = [self.cell(tr, te) for tr in self.train_values]
            if any(c.failed for c in column):
                continue
            n = min(len(c.trials) for c in column)
            for r in range(n):
                vals = [c.trials[r][metric] for c in column]
                base = float(np.mean(vals))
                for tr, v in zip(self.train_values, vals):
                    (diag if tr == te else off).append(v)
                    (diag_res if tr == te else off_res).append(v - base)
        return float(np.mean(diag)), float(np.mean(off)), welch_test(diag_res, off_res)

    def pvalues(self, metric: str = "idf1") -> list[dict]:
        out = []
        for tv in self.test_values:
            for a_i, a in enumerate(self.train_values):
                for b in self.train_values[a_i + 1:]:
                    ca, cb = self.cell(a, tv), self.cell(b, tv)
                    if ca.failed or cb.failed or len(ca.trials) < 2 or len(cb.trials) < 2:
                        continue
                    w = welch_test(ca.values(metric), cb.values(metric))
                    out.append({"test": tv, "train_a": a, "train_b": b, "metric": metric,
                                "p": w.p_value, "label": w.label})
        return out

    def to_dict(self) -> dict:
        cells = []
        for (tr, te), c in self.cells.items():
            entry = {"train": tr, "test": te, "failed": c.failed, "trials": c.trials}
            if c.failed:
                entry["error"] = c.error
            else:
                entry["mean"] = {m: c.mean(m) for m in METRIC_NAMES}
                entry["std"] = {m: c.std(m) for m in METRIC_NAMES}
            cells.append(entry)
        return {
            "factor": self.factor,
            "train_values": list(self.train_values),
            "test_values": list(self.test_values),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "cells": cells,
            "pvalues": self.pvalues("idf1") + self.pvalues("idsw"),
        }


def _scenario_set(grid: FactorGrid, role: int, value_index: int, trial: int, n: int,
                  master_seed: int) -> list[ScenarioConfig]:
    values = grid.train_values if role == TRAIN_ROLE else grid.test_values
    base = apply_factor(grid.base_config, grid.factor, values[value_index])
    if role == TEST_ROLE and grid.test_overrides:
        base = replace(base, **dict(grid.test_overrides)).validate()
    return [replace(base, seed=derive_seed(master_seed, role, value_index, trial, s)) for s in range(n)]


def _prepare_all(configs: Sequence[ScenarioConfig], template: TrackerTemplate,
                 shift: Optional[DomainShift] = None) -> list[PreparedSequence]:
    return [prepare_sequence(c, template.noise, template.reid_noise, shift) for c in configs]


def _test_job(args):
    grid, template, j, trial, master_seed = args
    return _prepare_all(_scenario_set(grid, TEST_ROLE, j, trial, template.test_sequences, master_seed), template)


def _train_job(args):
    grid, template, i, trial, master_seed, test_sets = args
    train = _prepare_all(_scenario_set(grid, TRAIN_ROLE, i, trial, template.train_sequences, master_seed), template)
    try:
        cfg = fit_tracker(template, train)
    except Exception as exc:  # a failed cell must not abort the sweep
        return None, f"{type(exc).__name__}: {exc}"
    reports = [evaluate_tracker(cfg, test_sets[j]).to_dict() for j in range(len(grid.test_values))]
    return reports, ""


def _run_jobs(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_sweep(grid: FactorGrid, template: TrackerTemplate, master_seed: int = 0,
              workers: int = 1) -> SweepResult:
    """Train at every train value, test at every test value, ``grid.trials`` times."""
    grid.validate()
    result = SweepResult(grid.factor, tuple(grid.train_values), tuple(grid.test_values), grid.trials, master_seed)
    for r in range(grid.trials):
        for i, v in enumerate(grid.train_values):
            result.train_seeds[(v, r)] = [c.seed for c in _scenario_set(grid, TRAIN_ROLE, i, r,
                                                                         template.train_sequences, master_seed)]
        for j, v in enumerate(grid.test_values):
            result.test_seeds[(v, r)] = [c.seed for c in _scenario_set(grid, TEST_ROLE, j, r,
                                                                        template.test_sequences, master_seed)]
    for tr in grid.train_values:
        for te in grid.test_values:
            result.cells[(tr, te)] = CellResult(tr, te)
    for r in range(grid.trials):
        test_sets = _run_jobs(_test_job, [(grid, template, j, r, master_seed)
                                          for j in range(len(grid.test_values))], workers)
        outcomes = _run_jobs(_train_job, [(grid, template, i, r, master_seed, test_sets)
                                          for i in range(len(grid.train_values))], workers)
        for i, (reports, error) in enumerate(outcomes):
            for j, te in enumerate(grid.test_values):
                cell = result.cells[(grid.train_values[i], te)]
                if reports is None:
                    cell.failed, cell.error = True, error
                else:
                    cell.trials.append({m: reports[j][m] for m in METRIC_NAMES})
    return result


# ---------------------------------------------------------------- statistics

@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_value: float
    label: str


def significance_label(p: float) -> str:
    if p >= 0.05:
        return "n.s."
    if p >= 0.01:
        return "*"
    if p > 0.001:
        return "**"
    return "***"


def welch_test(samples_a, samples_b) -> WelchResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least two samples per side")
    va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        p = 1.0 if diff == 0 else 0.0
        t = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return WelchResult(t, float(len(a) + len(b) - 2), p, significance_label(p))
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (len(a) - 1) + vb ** 2 / (len(b) - 1))
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))
    return WelchResult(float(t), float(df), p, significance_label(p))
