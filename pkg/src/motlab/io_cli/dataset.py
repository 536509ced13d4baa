"""On-disk run directories shared by the CLI stages.

A run directory holds ``manifest.json`` plus one sub-directory per sequence::

    <run>/manifest.json
    <run>/<seq>/gt.txt          ground truth (visible boxes, visibility column)
    <run>/<seq>/det.txt         detections, id -1
    <run>/<seq>/det.npy         appearance vectors, one row per det.txt line
    <run>/<seq>/det_labels.npy  true identity per det.txt line (-1 for clutter)
    <run>/<seq>/pred.txt        tracker output

Each stage copies the sequence list forward so later stages need only their
immediate input directory.
"""
from __future__ import annotations

import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..sensing import Detection
from ..sim_world import ConfigError, GtBox, ScenarioConfig, SequenceTruth
from .config import dump_json, load_json, report_document
from .motfile import MotRecord, read_mot, records_to_table, table_to_records, write_mot

MANIFEST = "manifest.json"


@dataclass(frozen=True)
class SequenceEntry:
    name: str
    scenario: ScenarioConfig

    def to_dict(self) -> dict:
        return {"name": self.name, "scenario": self.scenario.to_dict()}


def sequence_name(index: int) -> str:
    return f"seq-{index:03d}"


def write_manifest(run_dir, stage: str, entries: list[SequenceEntry], master_seed: Optional[int],
                   **extra) -> None:
    payload = {"stage": stage, "sequences": [e.to_dict() for e in entries], **extra}
    dump_json(report_document("manifest", payload, master_seed), Path(run_dir) / MANIFEST)


def read_manifest(run_dir) -> tuple[dict, list[SequenceEntry]]:
    path = Path(run_dir) / MANIFEST
    if not path.is_file():
        raise FileNotFoundError(f"{run_dir} has no {MANIFEST}")
    doc = load_json(path)
    try:
        entries = [SequenceEntry(s["name"], ScenarioConfig.from_dict(s["scenario"])) for s in doc["sequences"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError("manifest", f"{path}: malformed sequence list ({exc})") from None
    return doc, entries


# ---------------------------------------------------------------- ground truth

def truth_records(truth: SequenceTruth) -> list[MotRecord]:
    return [MotRecord(b.frame + 1, b.identity, *b.visible_box, 1.0, 1, b.visibility)
            for boxes in truth.frames for b in boxes if b.visible_box is not None]


def write_gt(truth: SequenceTruth, seq_dir) -> None:
    Path(seq_dir).mkdir(parents=True, exist_ok=True)
    write_mot(truth_records(truth), Path(seq_dir) / "gt.txt", kind="gt")


def read_gt_records(seq_dir) -> list[MotRecord]:
    return read_mot(Path(seq_dir) / "gt.txt", kind="gt")


def truth_from_records(records: list[MotRecord], scenario: ScenarioConfig) -> SequenceTruth:
    """Rebuild the annotation part of a SequenceTruth (no 3D states) from a gt file."""
    frames: list[list[GtBox]] = [[] for _ in range(scenario.duration_frames)]
    for r in records:
        if r.frame > scenario.duration_frames:
            raise ConfigError("gt", f"frame {r.frame} beyond duration {scenario.duration_frames}")
        frames[r.frame - 1].append(GtBox(r.frame - 1, r.id, r.box, r.box, r.visibility))
    return SequenceTruth(scenario, frames)


def gt_table_from_dir(seq_dir, n_frames: int, min_visibility: float = 0.25) -> list[list[tuple]]:
    return records_to_table(read_gt_records(seq_dir), n_frames, min_visibility)


def copy_gt(src_seq: Path, dst_seq: Path) -> None:
    dst_seq.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(src_seq / "gt.txt", dst_seq / "gt.txt")


# ---------------------------------------------------------------- detections

def write_detections(dets: list[list[Detection]], seq_dir) -> None:
    seq_dir = Path(seq_dir)
    seq_dir.mkdir(parents=True, exist_ok=True)
    flat = [d for frame in dets for d in frame]
    write_mot([MotRecord(d.frame + 1, -1, *d.box, d.confidence) for d in flat], seq_dir / "det.txt", kind="det")
    apps = [d.appearance for d in flat]
    if flat and all(a is not None for a in apps):
        np.save(seq_dir / "det.npy", np.asarray(apps, dtype=float))
    np.save(seq_dir / "det_labels.npy",
            np.asarray([-1 if d.true_identity is None else d.true_identity for d in flat], dtype=np.int64))


def read_detections(seq_dir, n_frames: int) -> list[list[Detection]]:
    seq_dir = Path(seq_dir)
    records = read_mot(seq_dir / "det.txt", kind="det")
    apps = np.load(seq_dir / "det.npy") if (seq_dir / "det.npy").is_file() else None
    labels = np.load(seq_dir / "det_labels.npy") if (seq_dir / "det_labels.npy").is_file() else None
    for name, arr in (("det.npy", apps), ("det_labels.npy", labels)):
        if arr is not None and len(arr) != len(records):
            raise ConfigError(name, f"{len(arr)} rows but det.txt has {len(records)} lines")
    out: list[list[Detection]] = [[] for _ in range(n_frames)]
    for k, r in enumerate(records):
        if r.frame > n_frames:
            raise ConfigError("det", f"frame {r.frame} beyond duration {n_frames}")
        ident = None if labels is None or labels[k] < 0 else int(labels[k])
        out[r.frame - 1].append(Detection(r.frame - 1, r.box, r.confidence, ident,
                                          None if apps is None else apps[k]))
    return out


def copy_detections(src_seq: Path, dst_seq: Path) -> None:
    dst_seq.mkdir(parents=True, exist_ok=True)
    for name in ("det.txt", "det.npy", "det_labels.npy"):
        if (src_seq / name).is_file():
            shutil.copyfile(src_seq / name, dst_seq / name)


# ---------------------------------------------------------------- predictions

def write_predictions(table, seq_dir) -> None:
    Path(seq_dir).mkdir(parents=True, exist_ok=True)
    write_mot(table_to_records(table), Path(seq_dir) / "pred.txt", kind="pred")


def read_prediction_table(path, n_frames: int) -> list[list[tuple]]:
    return records_to_table(read_mot(path, kind="pred"), n_frames)
