"""Bounding-box annotations: file I/O, box conventions, and shifting boxes onto
row-dropped images.

Boxes are stored centre-based in pixel-index coordinates: a box of height
``h`` whose top row is ``t`` covers rows ``t .. t + h - 1`` and has
``center_y = t + (h - 1) / 2``. Files use the common top-left ``[x, y, w, h]``
layout; the conversion is exact on the half-pixel grid.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .drops import DropSet

log = logging.getLogger(__name__)

DEFAULT_MIN_HEIGHT = 2


class AnnotationFormatError(ValueError):
    """Problems found while reading an annotation file.

    ``problems`` lists ``(location, message)`` pairs where location is a
    record description such as ``"annotations[3]"`` or ``"line 7"``.
    """

    def __init__(self, path, problems: list[tuple[str, str]]):
        self.path = str(path)
        self.problems = problems
        lines = "\n".join(f"  {loc}: {msg}" for loc, msg in problems[:20])
        more = f"\n  ... {len(problems) - 20} more" if len(problems) > 20 else ""
        super().__init__(f"{path}: {len(problems)} problem(s)\n{lines}{more}")


@dataclass(frozen=True)
class BoundingBox:
    center_x: float
    center_y: float
    height: float
    width: float
    class_id: int
    score: float | None = None

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float, class_id: int,
                  score: float | None = None) -> "BoundingBox":
        return cls(x + (w - 1) / 2, y + (h - 1) / 2, h, w, class_id, score)

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.center_x - (self.width - 1) / 2, self.center_y - (self.height - 1) / 2,
                self.width, self.height)

    @property
    def top(self) -> float:
        return self.center_y - (self.height - 1) / 2

    @property
    def bottom(self) -> float:
        return self.center_y + (self.height - 1) / 2

    def in_bounds(self, width: int, height: int) -> bool:
        x, y, w, h = self.to_xywh()
        return x >= 0 and y >= 0 and x + w <= width and y + h <= height


@dataclass(frozen=True)
class AnnotationSet:
    """Boxes for one image. Detection sets are the same type with scored boxes."""

    image_id: int
    width: int
    height: int
    boxes: tuple[BoundingBox, ...] = ()
    file_name: str = ""

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image {self.image_id}: dimensions must be positive")
        object.__setattr__(self, "boxes", tuple(self.boxes))


DetectionSet = AnnotationSet


def shift_box(
    box: BoundingBox,
    drops: DropSet | Iterable[int],
    min_height: float = DEFAULT_MIN_HEIGHT,
    count_above_top: bool = False,
) -> BoundingBox | None:
    """Move a box onto the attacked image; ``None`` when it shrinks below ``min_height``.

    The centre moves up by the number of drops before ``center_y`` (or, with
    ``count_above_top``, before the box's top row); the height loses the
    drops inside the box. Counting is on original-image rows.
    """
    rows = list(drops)
    top, bottom = box.top, box.bottom
    ref = top if count_above_top else box.center_y
    n_before = sum(1 for x in rows if x < ref)
    n_inside = sum(1 for x in rows if top <= x <= bottom)
    height = box.height - n_inside
    if height < min_height:
        return None
    return replace(box, center_y=box.center_y - n_before, height=height)


def shift_annotation_set(
    ann: AnnotationSet,
    drops: DropSet | Iterable[int],
    min_height: float = DEFAULT_MIN_HEIGHT,
    count_above_top: bool = False,
) -> AnnotationSet:
    rows = list(drops)
    kept = []
    for box in ann.boxes:
        moved = shift_box(box, rows, min_height, count_above_top)
        if moved is None:
            continue
        if not moved.in_bounds(ann.width, ann.height):
            log.warning("image %s: shifted box %s leaves the image", ann.image_id, moved)
        kept.append(moved)
    return replace(ann, boxes=tuple(kept))


# -- file I/O ---------------------------------------------------------------

def _num(value, loc: str, what: str, problems: list) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append((loc, f"{what} must be a number, got {value!r}"))
        return None
    return float(value)


def _int(value, loc: str, what: str, problems: list) -> int | None:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        problems.append((loc, f"{what} must be an integer, got {value!r}"))
        return None
    return value


def parse_annotations(doc, source: str = "<memory>") -> list[AnnotationSet]:
    problems: list[tuple[str, str]] = []
    if not isinstance(doc, dict):
        raise AnnotationFormatError(source, [("document", "top level must be an object")])
    images = doc.get("images")
    anns = doc.get("annotations", [])
    if not isinstance(images, list):
        raise AnnotationFormatError(source, [("document", "missing 'images' list")])
    if not isinstance(anns, list):
        raise AnnotationFormatError(source, [("document", "'annotations' must be a list")])

    order: list[int] = []
    meta: dict[int, dict] = {}
    for i, rec in enumerate(images):
        loc = f"images[{i}]"
        if not isinstance(rec, dict):
            problems.append((loc, "record must be an object"))
            continue
        missing = [k for k in ("id", "width", "height") if k not in rec]
        if missing:
            problems.append((loc, f"missing field(s) {', '.join(missing)}"))
            continue
        img_id = _int(rec["id"], loc, "id", problems)
        w = _int(rec["width"], loc, "width", problems)
        h = _int(rec["height"], loc, "height", problems)
        if None in (img_id, w, h):
            continue
        if w <= 0 or h <= 0:
            problems.append((loc, f"non-positive dimensions {w}x{h}"))
            continue
        if img_id in meta:
            problems.append((loc, f"duplicate image id {img_id}"))
            continue
        order.append(img_id)
        meta[img_id] = {"width": w, "height": h, "file_name": str(rec.get("file_name", ""))}

    boxes: dict[int, list[BoundingBox]] = {i: [] for i in order}
    for i, rec in enumerate(anns):
        loc = f"annotations[{i}]"
        if not isinstance(rec, dict):
            problems.append((loc, "record must be an object"))
            continue
        missing = [k for k in ("image_id", "category_id", "bbox") if k not in rec]
        if missing:
            problems.append((loc, f"missing field(s) {', '.join(missing)}"))
            continue
        img_id = _int(rec["image_id"], loc, "image_id", problems)
        cat = _int(rec["category_id"], loc, "category_id", problems)
        bbox = rec["bbox"]
        if not isinstance(bbox, list) or len(bbox) != 4:
            problems.append((loc, f"bbox must be [x, y, w, h], got {bbox!r}"))
            continue
        vals = [_num(v, loc, "bbox value", problems) for v in bbox]
        score = None
        if rec.get("score") is not None:
            score = _num(rec["score"], loc, "score", problems)
            if score is None:
                continue
        if img_id is None or cat is None or None in vals:
            continue
        if img_id not in meta:
            problems.append((loc, f"unknown image_id {img_id}"))
            continue
        x, y, w, h = vals
        if w < 1 or h < 1:
            problems.append((loc, f"box width/height must be >= 1, got {w}x{h}"))
            continue
        W, H = meta[img_id]["width"], meta[img_id]["height"]
        if x < 0 or y < 0 or x + w > W or y + h > H:
            problems.append((loc, f"box {vals} outside image {W}x{H}"))
            continue
        boxes[img_id].append(BoundingBox.from_xywh(x, y, w, h, cat, score))

    if problems:
        raise AnnotationFormatError(source, problems)
    return [AnnotationSet(i, meta[i]["width"], meta[i]["height"], tuple(boxes[i]),
                          meta[i]["file_name"]) for i in order]


def load_annotations(path: str | os.PathLike) -> list[AnnotationSet]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationFormatError(path, [(f"line {exc.lineno}", exc.msg)]) from None
    return parse_annotations(doc, str(path))


def _f6(v: float) -> str:
    return f"{v:.6f}"


def dump_annotations(sets: Iterable[AnnotationSet]) -> str:
    """Serialise to the JSON layout with every float at 6 decimals."""
    sets = list(sets)
    img_lines = []
    ann_lines = []
    for s in sets:
        img_lines.append(
            "    {" + f'"id": {s.image_id}, "width": {s.width}, "height": {s.height}, '
            f'"file_name": {json.dumps(s.file_name)}' + "}"
        )
        for b in s.boxes:
            bbox = ", ".join(_f6(v) for v in b.to_xywh())
            rec = f'"image_id": {s.image_id}, "category_id": {b.class_id}, "bbox": [{bbox}]'
            if b.score is not None:
                rec += f', "score": {_f6(b.score)}'
            ann_lines.append("    {" + rec + "}")
    return ('{\n  "images": [\n' + ",\n".join(img_lines) + '\n  ],\n'
            '  "annotations": [\n' + ",\n".join(ann_lines) + "\n  ]\n}\n")


def save_annotations(sets: Iterable[AnnotationSet], path: str | os.PathLike) -> None:
    Path(path).write_text(dump_annotations(sets), encoding="utf-8", newline="\n")
