"""JSON configs, reports, CSV tables and the run-directory lock."""
from __future__ import annotations

import csv
import json
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .. import TOOL_NAME, __version__
from ..association.scorer import Scorer, TrainHyperparams
from ..experiments import FactorGrid, TrackerTemplate
from ..sensing import DetectionNoise
from ..sim_world import ConfigError, ScenarioConfig

LOCK_NAME = ".motlab.lock"
OUT_ENV = "MOTLAB_OUT"


def _check_keys(data: dict, allowed, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(where, "must be a JSON object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown key")


def _names(cls) -> list[str]:
    return [f.name for f in fields(cls)]


def noise_from_dict(data: dict) -> DetectionNoise:
    _check_keys(data, _names(DetectionNoise), "noise")
    try:
        return DetectionNoise(**{k: float(v) for k, v in data.items()}).validate()
    except ValueError as exc:
        raise ConfigError("noise", str(exc)) from None


def train_from_dict(data: dict) -> TrainHyperparams:
    _check_keys(data, _names(TrainHyperparams), "train")
    return TrainHyperparams(**data)


def template_to_dict(t: TrackerTemplate) -> dict:
    d = asdict(t)
    d["threshold_grid"] = list(t.threshold_grid)
    return d


def template_from_dict(data: dict) -> TrackerTemplate:
    _check_keys(data, _names(TrackerTemplate), "tracker")
    kw = dict(data)
    if "train" in kw:
        kw["train"] = train_from_dict(kw["train"])
    if "noise" in kw:
        kw["noise"] = noise_from_dict(kw["noise"])
    if "threshold_grid" in kw:
        kw["threshold_grid"] = tuple(float(v) for v in kw["threshold_grid"])
    t = TrackerTemplate(**kw)
    if t.kind not in ("parametric", "sort", "cosine"):
        raise ConfigError("tracker.kind", "must be 'parametric', 'sort' or 'cosine'")
    try:
        t.tracker_config(Scorer("parametric") if t.kind == "parametric" else None)
    except ValueError as exc:
        raise ConfigError("tracker", str(exc)) from None
    return t


def _value(v):
    return tuple(v) if isinstance(v, list) else v


def grid_from_dict(data: dict) -> FactorGrid:
    _check_keys(data, ("factor", "train_values", "test_values", "trials", "base_config", "test_overrides"), "grid")
    for key in ("factor", "train_values", "test_values"):
        if key not in data:
            raise ConfigError(f"grid.{key}", "required")
    base = ScenarioConfig.from_dict(data["base_config"]) if "base_config" in data else FactorGrid.__dataclass_fields__[
        "base_config"].default
    overrides = data.get("test_overrides", {})
    _check_keys(overrides, _names(ScenarioConfig), "grid.test_overrides")
    return FactorGrid(data["factor"], tuple(_value(v) for v in data["train_values"]),
                      tuple(_value(v) for v in data["test_values"]), int(data.get("trials", 5)), base,
                      tuple(sorted(overrides.items()))).validate()


def grid_to_dict(g: FactorGrid) -> dict:
    return {"factor": g.factor, "train_values": list(g.train_values), "test_values": list(g.test_values),
            "trials": g.trials, "base_config": g.base_config.to_dict(), "test_overrides": dict(g.test_overrides)}


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs; unknown keys are rejected on load."""

    scenario: ScenarioConfig = ScenarioConfig()
    sequences: int = 1
    noise: DetectionNoise = DetectionNoise(0.02, 0.02, 0.05, 0.0)
    reid_noise: float = 0.1
    tracker: TrackerTemplate = TrackerTemplate()
    grid: Optional[FactorGrid] = None
    out_dir: Optional[str] = None
    master_seed: int = 0

    def validate(self) -> "RunConfig":
        self.scenario.validate()
        self.noise.validate()
        if self.sequences < 1:
            raise ConfigError("sequences", "must be >= 1")
        if self.reid_noise < 0:
            raise ConfigError("reid_noise", "must be >= 0")
        if self.grid is not None:
            self.grid.validate()
        return self

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "sequences": self.sequences,
            "noise": asdict(self.noise),
            "reid_noise": self.reid_noise,
            "tracker": template_to_dict(self.tracker),
            "grid": None if self.grid is None else grid_to_dict(self.grid),
            "out_dir": self.out_dir,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _check_keys(data, _names(cls), "")
        kw: dict[str, Any] = {}
        if "scenario" in data:
            kw["scenario"] = ScenarioConfig.from_dict(data["scenario"])
        if "noise" in data:
            kw["noise"] = noise_from_dict(data["noise"])
        if "tracker" in data:
            kw["tracker"] = template_from_dict(data["tracker"])
        if data.get("grid") is not None:
            kw["grid"] = grid_from_dict(data["grid"])
        for key, conv in (("sequences", int), ("reid_noise", float), ("master_seed", int)):
            if key in data:
                kw[key] = conv(data[key])
        if data.get("out_dir") is not None:
            kw["out_dir"] = str(data["out_dir"])
        return cls(**kw).validate()


def load_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("json", f"{path}: line {exc.lineno}: {exc.msg}") from None


def dump_json(data: Any, path) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def report_document(kind: str, payload: dict, master_seed: Optional[int]) -> dict:
    return {"tool": TOOL_NAME, "version": __version__, "report": kind, "master_seed": master_seed, **payload}


def write_report(path, kind: str, payload: dict, master_seed: Optional[int] = None) -> dict:
    doc = report_document(kind, payload, master_seed)
    dump_json(doc, path)
    return doc


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def default_out(explicit: Optional[str], name: str = "") -> Path:
    """``explicit`` if given, else ``$MOTLAB_OUT/name``."""
    if explicit:
        return Path(explicit)
    base = os.environ.get(OUT_ENV)
    if not base:
        raise ConfigError("out", f"no output path given and ${OUT_ENV} is not set")
    return Path(base) / name if name else Path(base)


class LockError(RuntimeError):
    pass


@contextmanager
def run_lock(directory):
    """Exclusive ownership of a run directory for the life of the block."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(f"{directory} is locked by another run ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield directory
    finally:
        lock.unlink(missing_ok=True)
