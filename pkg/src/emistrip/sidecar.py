"""JSON sidecars recording how an attacked image was produced."""
from __future__ import annotations

import json
import os
from pathlib import Path

from .drops import DropSet, strip_layout, validate_drop_set


def sidecar_path(image_path: str | os.PathLike) -> Path:
    return Path(image_path).with_suffix(".json")


def sidecar_record(drops: DropSet, pattern: str, padding: str, seed: int | None = None,
                   **extra) -> dict:
    rec = {
        "drops": list(drops.indices),
        "image_height": drops.image_height,
        "pattern": pattern,
        "padding": padding,
        "seed": seed,
        "strips": strip_layout(drops).to_records(),
    }
    rec.update(extra)
    return rec


def write_sidecar(path: str | os.PathLike, record: dict) -> None:
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8", newline="\n")


def read_sidecar(path: str | os.PathLike) -> tuple[DropSet, dict]:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    drops = validate_drop_set(rec["drops"], int(rec["image_height"]), allow_collapsed=True)
    return drops, rec
