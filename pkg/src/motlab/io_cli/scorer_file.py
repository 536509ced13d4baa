"""Plain-text scorer weights.

Layout::

    motlab-scorer 1 kind=parametric inputs=7 hidden=16 appearance=1 motion=1
    <W1 row 0>
    ...
    <W1 row hidden-1>
    <b1>
    <w2>
    <b2>

Each weight line holds whitespace-separated decimals written with enough
digits to round-trip exactly. Input order inside a W1 row is: appearance
cosine, IoU, dx/h, dy/h, log width ratio, log height ratio, gap in seconds.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..association.scorer import N_INPUTS, Scorer

MAGIC = "motlab-scorer"
FORMAT_VERSION = 1


class ScorerFileError(ValueError):
    pass


def _row(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def dumps_scorer(scorer: Scorer) -> str:
    head = (f"{MAGIC} {FORMAT_VERSION} kind={scorer.kind} inputs={N_INPUTS} hidden={scorer.hidden} "
            f"appearance={int(scorer.use_appearance)} motion={int(scorer.use_motion)}")
    lines = [head]
    if scorer.kind == "parametric":
        lines += [_row(r) for r in scorer.W1]
        lines += [_row(scorer.b1), _row(scorer.w2), _row([scorer.b2])]
    return "\n".join(lines) + "\n"


def loads_scorer(text: str) -> Scorer:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ScorerFileError("empty scorer file")
    head = lines[0].split()
    if len(head) < 2 or head[0] != MAGIC:
        raise ScorerFileError(f"missing '{MAGIC}' header")
    if head[1] != str(FORMAT_VERSION):
        raise ScorerFileError(f"unsupported scorer file version {head[1]}")
    meta = {}
    for tok in head[2:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ScorerFileError(f"malformed header token {tok!r}")
        meta[key] = value
    for key in ("kind", "inputs", "hidden", "appearance", "motion"):
        if key not in meta:
            raise ScorerFileError(f"header lacks '{key}'")
    kind = meta["kind"]
    use_a, use_m = meta["appearance"] == "1", meta["motion"] == "1"
    if kind != "parametric":
        return Scorer(kind, use_appearance=use_a, use_motion=use_m)
    if int(meta["inputs"]) != N_INPUTS:
        raise ScorerFileError(f"expected {N_INPUTS} inputs, header says {meta['inputs']}")
    hidden = int(meta["hidden"])
    body = lines[1:]
    if len(body) != hidden + 3:
        raise ScorerFileError(f"expected {hidden + 3} weight lines, found {len(body)}")
    try:
        rows = [np.array([float(x) for x in ln.split()]) for ln in body]
    except ValueError as exc:
        raise ScorerFileError(f"bad weight: {exc}") from None
    W1 = np.vstack(rows[:hidden]) if hidden else np.zeros((0, N_INPUTS))
    if W1.shape != (hidden, N_INPUTS) or rows[hidden].shape != (hidden,) or rows[hidden + 1].shape != (hidden,) \
            or rows[hidden + 2].shape != (1,):
        raise ScorerFileError("weight line lengths do not match the header")
    return Scorer("parametric", W1, rows[hidden], rows[hidden + 1], float(rows[hidden + 2][0]), use_a, use_m)


def save_scorer(scorer: Scorer, path) -> None:
    Path(path).write_text(dumps_scorer(scorer), encoding="ascii")


def load_scorer(path) -> Scorer:
    return loads_scorer(Path(path).read_text(encoding="ascii"))
