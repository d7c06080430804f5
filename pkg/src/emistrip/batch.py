"""Dataset-scale attack generation and SSIM evaluation."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotations import AnnotationSet, load_annotations, save_annotations, shift_annotation_set
from .cfa import CfaPattern, RawImage, RgbImage, demosaic, mosaic
from .drops import DropSetError, sample_drop_set
from .metrics.ssim import SsimParams, ssim
from .netpbm import encode_ppm, read_image
from .report import EvalReport
from .sidecar import sidecar_record
from .simulate import Padding, apply_attack

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".ppm", ".pgm", ".png")
SEED_ENV = "EMISTRIP_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def derive_seed(global_seed: int, image_id: str) -> int:
    """Stable 64-bit per-image seed; independent of which other images exist."""
    digest = hashlib.blake2b(f"{global_seed}:{image_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def variant_label(n_strips: int) -> str:
    return f"strips={n_strips}"


@dataclass
class BatchConfig:
    input_dir: str
    output_dir: str
    pattern: str = "GRBG"
    sweep: list[int] = field(default_factory=lambda: list(range(1, 21)))
    padding: str = "wrap-top"
    seed: int = field(default_factory=default_seed)
    workers: int = 1
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])
    images: list[str] | None = None
    annotations: str | None = None
    min_gap: int = 2
    ssim_window: int = 8
    force: bool = False

    def __post_init__(self) -> None:
        if any(n < 0 for n in self.sweep):
            raise ValueError(f"strip counts must be >= 0, got {self.sweep}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        CfaPattern.parse(self.pattern)
        if Padding.parse(self.padding) is Padding.NEXT_FRAME:
            raise ValueError("batch mode has no companion frames; next-frame padding unavailable")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ValueError(f"unknown report format(s): {sorted(bad)}")

    @classmethod
    def from_json(cls, path: str | os.PathLike, **overrides) -> "BatchConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**doc)


@dataclass
class BatchResult:
    report: EvalReport
    written: int = 0
    skipped: int = 0

    @property
    def failed(self) -> bool:
        return bool(self.report.failures)


def attacked_name(stem: str, n_strips: int) -> str:
    return f"{stem}_s{n_strips:02d}"


def image_ssims(clean: RawImage, attacked: RawImage, window: int = 8) -> tuple[float, float]:
    """(raw-domain SSIM, reconstructed-RGB SSIM) of a clean/attacked pair."""
    params = SsimParams(window=window)
    return (ssim(clean, attacked, params),
            ssim(demosaic(clean), demosaic(attacked), params))


def _load_raw(path: Path, pattern: str) -> RawImage:
    img = read_image(path)
    if isinstance(img, RgbImage):
        return mosaic(img, pattern)
    return img


def _write_if_needed(path: Path, data: bytes, force: bool) -> bool:
    if path.exists() and not force:
        return False
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return True


def _process_image(cfg: BatchConfig, name: str) -> dict:
    stem = Path(name).stem
    out = {"image_id": stem, "source": name, "entries": [], "failures": [],
           "written": 0, "skipped": 0}
    try:
        raw = _load_raw(Path(cfg.input_dir) / name, cfg.pattern)
    except (OSError, ValueError) as exc:
        out["failures"].append({"image_id": stem, "stage": "read", "error": str(exc)})
        return out
    seed = derive_seed(cfg.seed, stem)
    att_dir = Path(cfg.output_dir) / "attacked"
    for n in cfg.sweep:
        try:
            drops = sample_drop_set(n, raw.height, np.random.default_rng([seed, n]), cfg.min_gap)
        except DropSetError as exc:
            out["failures"].append({"image_id": stem, "stage": variant_label(n),
                                    "error": str(exc)})
            continue
        attacked = apply_attack(raw, drops, cfg.padding)
        s_raw, s_rgb = image_ssims(raw, attacked, cfg.ssim_window)
        base = attacked_name(stem, n)
        img_path = att_dir / f"{base}.ppm"
        record = sidecar_record(drops, raw.pattern.value, Padding.parse(cfg.padding).value,
                                seed, source=name, image_id=stem, strip_count=n)
        side = json.dumps(record, indent=2, sort_keys=True) + "\n"
        for path, data in ((img_path, encode_ppm(demosaic(attacked))),
                           (att_dir / f"{base}.json", side.encode())):
            if _write_if_needed(path, data, cfg.force):
                out["written"] += 1
            else:
                out["skipped"] += 1
        out["entries"].append({"n": n, "drops": drops, "ssim_raw": s_raw, "ssim_rgb": s_rgb,
                               "artifact": f"attacked/{base}.ppm"})
    return out


def list_images(cfg: BatchConfig) -> list[str]:
    if cfg.images is not None:
        return list(cfg.images)
    return sorted(p.name for p in Path(cfg.input_dir).iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _shift_annotations(cfg: BatchConfig, results: list[dict]) -> int:
    sets = load_annotations(cfg.annotations)
    by_file = {}
    for res in results:
        for e in res["entries"]:
            by_file.setdefault(res["source"], {})[e["n"]] = e
    written = 0
    for n in cfg.sweep:
        shifted: list[AnnotationSet] = []
        for ann in sets:
            entry = by_file.get(ann.file_name, {}).get(n)
            if entry is None:
                continue
            moved = shift_annotation_set(ann, entry["drops"])
            shifted.append(dataclasses.replace(moved, file_name=entry["artifact"]))
        save_annotations(shifted, Path(cfg.output_dir) / f"annotations_s{n:02d}.json")
        written += 1
    return written


def run_batch(cfg: BatchConfig) -> BatchResult:
    names = list_images(cfg)
    (Path(cfg.output_dir) / "attacked").mkdir(parents=True, exist_ok=True)
    if cfg.workers == 1:
        results = [_process_image(cfg, name) for name in names]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda name: _process_image(cfg, name), names))

    report = EvalReport()
    written = skipped = 0
    # results are in input order whatever the worker count
    for res in results:
        report.failures.extend(res["failures"])
        written += res["written"]
        skipped += res["skipped"]
        for e in res["entries"]:
            report.add(res["image_id"], "ssim_raw", variant_label(e["n"]), e["ssim_raw"],
                       e["artifact"])
            report.add(res["image_id"], "ssim_rgb", variant_label(e["n"]), e["ssim_rgb"],
                       e["artifact"])
    report.finalize()
    if cfg.annotations:
        written += _shift_annotations(cfg, results)

    out = Path(cfg.output_dir)
    if "csv" in cfg.formats:
        (out / "report.csv").write_text(report.to_csv(), encoding="utf-8", newline="\n")
    if "json" in cfg.formats:
        (out / "report.json").write_text(report.to_json(), encoding="utf-8", newline="\n")
    return BatchResult(report, written, skipped)
