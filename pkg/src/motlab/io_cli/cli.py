"""Command-line entry point: ``motlab <subcommand> ...`` or ``python -m motlab``.

Exit codes: 0 success, 1 usage error, 2 data error. Errors are printed to
stderr as a single JSON object.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .. import __version__
from ..association.scorer import TrainHyperparams, TrainingSequence, train_scorer
from ..association.tracker import track_sequence
from ..experiments import (
    ABLATION_MODES,
    METRIC_NAMES,
    PreparedSequence,
    TrackerTemplate,
    derive_seed,
    mask_for,
    run_sweep,
    tune_threshold,
)
from ..metrics import evaluate_many
from ..sensing import DomainShift, embed_detections, identity_latents, perturb_detections
from ..sim_world import ConfigError, generate_scenario
from . import dataset as ds
from .config import (
    LockError,
    RunConfig,
    default_out,
    load_json,
    noise_from_dict,
    run_lock,
    template_from_dict,
    write_csv,
    write_report,
)
from .motfile import MotFormatError, read_mot, records_to_table
from .render import render_frame
from .scorer_file import ScorerFileError, load_scorer, save_scorer

USAGE_EXIT = 1
DATA_EXIT = 2
GENERATE_ROLE = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


# ---------------------------------------------------------------- subcommands

def cmd_generate(args) -> dict:
    cfg = RunConfig.from_dict(load_json(args.config))
    if args.sequences is not None:
        cfg = replace(cfg, sequences=args.sequences).validate()
    if args.master_seed is not None:
        cfg = replace(cfg, master_seed=args.master_seed)
    out = default_out(args.out or cfg.out_dir, "gt")
    entries = []
    with run_lock(out):
        for i in range(cfg.sequences):
            scenario = replace(cfg.scenario, seed=derive_seed(cfg.master_seed, GENERATE_ROLE, cfg.scenario.seed, i))
            entry = ds.SequenceEntry(ds.sequence_name(i), scenario)
            ds.write_gt(generate_scenario(scenario), out / entry.name)
            entries.append(entry)
        ds.write_manifest(out, "gt", entries, cfg.master_seed, run_config=cfg.to_dict())
    return {"out": str(out), "sequences": len(entries)}


def _parse_noise(spec: Optional[str], manifest: dict):
    if spec is None:
        run = manifest.get("run_config") or {}
        return RunConfig.from_dict(run).noise if run else RunConfig().noise
    path = Path(spec)
    data = load_json(path) if path.is_file() else None
    if data is None:
        try:
            data = json.loads(spec)
        except json.JSONDecodeError:
            raise ConfigError("noise", "expected a JSON file or an inline JSON object") from None
    return noise_from_dict(data)


def cmd_detect(args) -> dict:
    src = Path(args.gt)
    manifest, entries = ds.read_manifest(src)
    noise = _parse_noise(args.noise, manifest)
    reid = args.reid_noise
    if reid is None:
        reid = float((manifest.get("run_config") or {}).get("reid_noise", RunConfig().reid_noise))
    shift = None
    if args.shift_sigma is not None or args.shift_seed is not None:
        shift = DomainShift.random(seed=args.shift_seed or 0, noise_sigma=args.shift_sigma or 0.0)
    out = default_out(args.out, "det")
    with run_lock(out):
        for e in entries:
            truth = ds.truth_from_records(ds.read_gt_records(src / e.name), e.scenario)
            seed = e.scenario.seed
            dets = perturb_detections(truth, noise, seed)
            dets = embed_detections(dets, identity_latents(truth.identities, seed), seed, reid, shift)
            ds.write_detections(dets, out / e.name)
            ds.copy_gt(src / e.name, out / e.name)
        ds.write_manifest(out, "det", entries, manifest.get("master_seed"), run_config=manifest.get("run_config"),
                          noise=vars(noise), reid_noise=reid,
                          shift=None if shift is None else {"seed": args.shift_seed or 0,
                                                            "sigma": args.shift_sigma or 0.0})
    return {"out": str(out), "sequences": len(entries)}


def _template(args) -> tuple[TrackerTemplate, object]:
    """Tracker template plus an optional pre-trained scorer."""
    spec = args.tracker
    scorer = None
    if spec in ("sort", "cosine"):
        t = TrackerTemplate(kind=spec, threshold=0.3, max_age=1, min_hits=3) if spec == "sort" \
            else TrackerTemplate(kind="cosine")
    else:
        path = Path(spec)
        if not path.is_file():
            raise FileNotFoundError(f"tracker spec {spec!r} is neither 'sort', 'cosine' nor a file")
        if path.suffix == ".json":
            t = template_from_dict(load_json(path))
        else:
            scorer = load_scorer(path)
            t = TrackerTemplate(kind=scorer.kind if scorer.kind != "iou" else "sort")
    kw = {}
    for name in ("threshold", "max_age", "min_hits", "mode"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    t = replace(t, **kw)
    if t.kind == "parametric" and scorer is None:
        raise ConfigError("tracker", "a parametric tracker needs a trained scorer file")
    if scorer is not None and "mode" in kw:
        scorer = scorer.with_mask(*mask_for(t.mode))
    return t, scorer


def _prepared(run_dir: Path, entries, min_visibility: float) -> list[PreparedSequence]:
    seqs = []
    for e in entries:
        n = e.scenario.duration_frames
        truth = ds.truth_from_records(ds.read_gt_records(run_dir / e.name), e.scenario)
        dets = ds.read_detections(run_dir / e.name, n)
        seqs.append(PreparedSequence(truth, dets, ds.gt_table_from_dir(run_dir / e.name, n, min_visibility)))
    return seqs


def cmd_track(args) -> dict:
    src = Path(args.det)
    manifest, entries = ds.read_manifest(src)
    template, scorer = _template(args)
    cfg = template.tracker_config(scorer)
    out = default_out(args.out, "pred")
    with run_lock(out):
        for e in entries:
            n = e.scenario.duration_frames
            table = track_sequence(ds.read_detections(src / e.name, n), cfg, e.scenario.fps)
            ds.write_predictions(table, out / e.name)
            if (src / e.name / "gt.txt").is_file():
                ds.copy_gt(src / e.name, out / e.name)
        ds.write_manifest(out, "pred", entries, manifest.get("master_seed"),
                          tracker={"kind": template.kind, "mode": template.mode,
                                   "threshold": cfg.match_threshold, "max_age": cfg.max_age,
                                   "min_hits": cfg.min_hits})
    return {"out": str(out), "sequences": len(entries)}


def cmd_train(args) -> dict:
    src = Path(args.data)
    manifest, entries = ds.read_manifest(src)
    use_a, use_m = mask_for(args.mode)
    hp = TrainHyperparams(epochs=args.epochs, lr=args.lr, seed=args.seed, use_appearance=use_a, use_motion=use_m)
    seqs = []
    for e in entries:
        dets = ds.read_detections(src / e.name, e.scenario.duration_frames)
        if not (src / e.name / "det_labels.npy").is_file():
            raise ConfigError("data", f"{src / e.name} lacks det_labels.npy; training needs labelled detections")
        if use_a and any(d.appearance is None for f in dets for d in f):
            raise ConfigError("data", f"{src / e.name} lacks det.npy; use --mode 'w/o A' or re-run detect")
        seqs.append(TrainingSequence(dets, e.scenario.fps))
    scorer = train_scorer(seqs, hp)
    out = default_out(args.out, "scorer.txt")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scorer(scorer, out)
    return {"out": str(out), "final_loss": scorer.loss_curve[-1] if scorer.loss_curve else None}


def _sequence_pairs(gt_path: Path, pred_path: Path):
    """(name, gt dir or file, pred file, frame count) for each sequence to score."""
    if gt_path.is_file() and pred_path.is_file():
        return [("sequence", gt_path, pred_path, None)]
    if not (gt_path.is_dir() and pred_path.is_dir()):
        raise FileNotFoundError("--gt and --pred must both be files or both be run directories")
    if (pred_path / ds.MANIFEST).is_file():
        _, entries = ds.read_manifest(pred_path)
        names = [(e.name, e.scenario.duration_frames) for e in entries]
    else:
        names = [(p.parent.name, None) for p in sorted(pred_path.glob("*/pred.txt"))]
    if not names:
        raise FileNotFoundError(f"no sequences found under {pred_path}")
    return [(name, gt_path / name / "gt.txt", pred_path / name / "pred.txt", n) for name, n in names]


def cmd_eval(args) -> dict:
    pairs, per_seq = [], []
    for name, gt_file, pred_file, n in _sequence_pairs(Path(args.gt), Path(args.pred)):
        gt_records = read_mot(gt_file, kind="gt")
        pred_records = read_mot(pred_file, kind="pred")
        if n is None:
            n = max([r.frame for r in gt_records] + [r.frame for r in pred_records] + [0])
        gt = records_to_table(gt_records, n, args.min_visibility)
        pred = records_to_table(pred_records, n)
        pairs.append((gt, pred))
        per_seq.append({"sequence": name, **evaluate_many([(gt, pred)], args.iou_gate).to_dict()})
    overall = evaluate_many(pairs, args.iou_gate).to_dict()
    master = _master_seed(Path(args.pred))
    report = default_out(args.report, "eval.json")
    report.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, "eval", {"iou_gate": args.iou_gate, "min_visibility": args.min_visibility,
                                  "overall": overall, "sequences": per_seq}, master)
    keys = list(overall)
    write_csv(report.with_suffix(".csv"), ["sequence"] + keys,
              [[s["sequence"]] + [s[k] for k in keys] for s in per_seq] + [["overall"] + [overall[k] for k in keys]])
    return {"report": str(report), "mota": overall["mota"], "idf1": overall["idf1"]}


def _master_seed(path: Path):
    try:
        return ds.read_manifest(path if path.is_dir() else path.parent.parent)[0].get("master_seed")
    except (FileNotFoundError, ConfigError):
        return None


def cmd_sweep(args) -> dict:
    cfg = RunConfig.from_dict(load_json(args.grid))
    if cfg.grid is None:
        raise ConfigError("grid", "the sweep file needs a 'grid' section")
    master = cfg.master_seed if args.master_seed is None else args.master_seed
    result = run_sweep(cfg.grid, cfg.tracker, master_seed=master, workers=args.workers)
    report = default_out(args.report, "sweep.json")
    report.parent.mkdir(parents=True, exist_ok=True)
    payload = result.to_dict()
    payload.pop("master_seed", None)
    payload["tracker"] = cfg.to_dict()["tracker"]
    payload["base_config"] = cfg.grid.base_config.to_dict()
    payload["test_overrides"] = dict(cfg.grid.test_overrides)
    if tuple(cfg.grid.train_values) == tuple(cfg.grid.test_values) and len(cfg.grid.train_values) > 1:
        d, o, w = result.diagonal_test("idf1")
        payload["diagonal_idf1"] = {"diagonal_mean": d, "off_diagonal_mean": o, "p": w.p_value, "label": w.label}
    write_report(report, "sweep", payload, master)
    rows = []
    for (tr, te), c in result.cells.items():
        if c.failed:
            rows.append([tr, te, "failed"] + [""] * (2 * len(METRIC_NAMES)))
            continue
        rows.append([tr, te, len(c.trials)] + [c.mean(m) for m in METRIC_NAMES] + [c.std(m) for m in METRIC_NAMES])
    write_csv(report.with_suffix(".csv"), ["train", "test", "trials"] + [f"{m}_mean" for m in METRIC_NAMES]
              + [f"{m}_std" for m in METRIC_NAMES], rows)
    return {"report": str(report), "cells": len(result.cells)}


def parse_threshold_grid(spec: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma list."""
    try:
        if ":" in spec:
            lo, hi, step = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((hi - lo) / step))
            return [round(lo + k * step, 10) for k in range(n + 1)]
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("grid", f"cannot parse threshold grid {spec!r}") from None


def cmd_tune(args) -> dict:
    src = Path(args.data)
    manifest, entries = ds.read_manifest(src)
    template = TrackerTemplate(kind="sort", max_age=args.max_age, min_hits=args.min_hits)
    seqs = _prepared(src, entries, args.min_visibility)
    try:
        best, curve = tune_threshold(seqs, parse_threshold_grid(args.grid), template)
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    report = default_out(args.report, "tune.json")
    report.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, "tune", {"best_threshold": best, "max_age": args.max_age, "min_hits": args.min_hits,
                                  "curve": [{"threshold": t, **r.to_dict()} for t, r in curve]},
                 manifest.get("master_seed"))
    write_csv(report.with_suffix(".csv"), ["threshold"] + list(METRIC_NAMES),
              [[t] + [getattr(r, m) for m in METRIC_NAMES] for t, r in curve])
    return {"report": str(report), "best_threshold": best}


def cmd_render(args) -> dict:
    path = Path(args.input)
    records = read_mot(path, kind="pred")
    n = max((r.frame for r in records), default=0)
    resolution = (1024, 768)
    run_dir = path.parent.parent
    if (run_dir / ds.MANIFEST).is_file():
        _, entries = ds.read_manifest(run_dir)
        for e in entries:
            if e.name == path.parent.name:
                n, resolution = e.scenario.duration_frames, tuple(e.scenario.resolution)
    if args.width and args.height:
        resolution = (args.width, args.height)
    if not 1 <= args.frame <= max(n, 1) or (n == 0 and args.frame != 1):
        raise IndexError(f"frame {args.frame} outside [1, {n}]")
    table = records_to_table(records, max(n, 1))
    out = default_out(args.out, f"frame-{args.frame:06d}.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    render_frame(table, args.frame - 1, out, resolution)
    return {"out": str(out), "boxes": len(table[args.frame - 1])}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="motlab", description="Synthetic multi-object tracking lab.")
    p.add_argument("--version", action="version", version=f"motlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="simulate scenarios and write ground truth")
    g.add_argument("--config", required=True)
    g.add_argument("--out")
    g.add_argument("--sequences", type=int)
    g.add_argument("--master-seed", type=int)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="turn ground truth into noisy detections with appearance")
    d.add_argument("--gt", required=True)
    d.add_argument("--noise", help="JSON file or inline JSON with DetectionNoise fields")
    d.add_argument("--out")
    d.add_argument("--reid-noise", type=float)
    d.add_argument("--shift-sigma", type=float)
    d.add_argument("--shift-seed", type=int)
    d.set_defaults(func=cmd_detect)

    t = sub.add_parser("track", help="run a tracker over detection files")
    t.add_argument("--det", required=True)
    t.add_argument("--tracker", required=True, help="'sort', 'cosine', a scorer file or a tracker JSON")
    t.add_argument("--out")
    t.add_argument("--threshold", type=float)
    t.add_argument("--max-age", type=int)
    t.add_argument("--min-hits", type=int)
    t.add_argument("--mode", choices=ABLATION_MODES)
    t.set_defaults(func=cmd_track)

    tr = sub.add_parser("train", help="train the parametric scorer on labelled detections")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out")
    tr.add_argument("--mode", choices=ABLATION_MODES, default="A+M")
    tr.add_argument("--epochs", type=int, default=TrainHyperparams.epochs)
    tr.add_argument("--lr", type=float, default=TrainHyperparams.lr)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score predictions against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--report")
    e.add_argument("--iou-gate", type=float, default=0.5)
    e.add_argument("--min-visibility", type=float, default=0.25)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="run a train/test factor sweep")
    s.add_argument("--grid", required=True, help="JSON run config with a 'grid' section")
    s.add_argument("--report")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--master-seed", type=int)
    s.set_defaults(func=cmd_sweep)

    u = sub.add_parser("tune", help="grid-search the SORT IoU threshold")
    u.add_argument("--data", required=True)
    u.add_argument("--grid", default="0.05:0.95:0.05")
    u.add_argument("--report")
    u.add_argument("--max-age", type=int, default=1)
    u.add_argument("--min-hits", type=int, default=3)
    u.add_argument("--min-visibility", type=float, default=0.25)
    u.set_defaults(func=cmd_tune)

    r = sub.add_parser("render", help="draw one frame of a MOT file")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--frame", type=int, required=True, help="1-based frame number")
    r.add_argument("--out")
    r.add_argument("--width", type=int)
    r.add_argument("--height", type=int)
    r.set_defaults(func=cmd_render)
    return p


DATA_ERRORS = (ConfigError, MotFormatError, ScorerFileError, LockError, FileNotFoundError, IndexError,
               ValueError, OSError)


def _error(kind: str, exc: BaseException) -> None:
    doc = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    for attr in ("field", "line"):
        if getattr(exc, attr, None) is not None:
            doc[attr] = getattr(exc, attr)
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _error("usage", exc)
        return USAGE_EXIT
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        summary = args.func(args)
    except UsageError as exc:
        _error("usage", exc)
        return USAGE_EXIT
    except DATA_ERRORS as exc:
        _error("data", exc)
        return DATA_EXIT
    except Exception as exc:  # anything unforeseen still yields a machine-readable error
        _error("internal", exc)
        return DATA_EXIT
    _emit({"status": "ok", "command": args.command, **summary})
    return 0


if __name__ == "__main__":
    sys.exit(main())
