"""``emistrip`` command line.

Exit codes: 0 success, 1 I/O error, 2 validation error, 3 partial batch failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import __version__
from .annotations import (
    AnnotationFormatError,
    load_annotations,
    save_annotations,
    shift_annotation_set,
)
from .batch import BatchConfig, default_seed, image_ssims, run_batch, variant_label
from .cfa import CfaPattern, RawImage, RgbImage, demosaic, mosaic
from .drops import DropSetError, parse_drop_text, sample_drop_set
from .identify import (
    ThresholdPolicy,
    detect_strip_edges,
    identify_dropped_rows,
    row_difference_profile,
)
from .metrics.detection import MAP_VARIANTS, UndefinedMetric, mean_ap
from .netpbm import NetpbmError, read_image, read_pgm, write_pgm, write_ppm
from .report import ALL_IMAGES, EvalReport, MetricRow, all_pairs
from .sidecar import read_sidecar, sidecar_path, sidecar_record, write_sidecar
from .simulate import Padding, apply_attack

log = logging.getLogger("emistrip")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _raw_of(path: str, pattern: str | None) -> RawImage:
    img = read_image(path)
    if isinstance(img, RgbImage):
        return mosaic(img, pattern or "GRBG")
    if pattern and CfaPattern.parse(pattern) != img.pattern:
        img = img.replace(pattern=CfaPattern.parse(pattern))
    return img


def _drops_from_args(args, height: int):
    given = [a for a in (args.drops, args.drops_file, getattr(args, "sidecar", None)) if a]
    if len(given) > 1:
        raise UsageError("give only one of --drops, --drops-file, --sidecar")
    # attacking and box shifting only delete rows, so collapsed strips are fine
    if args.drops is not None:
        return parse_drop_text(args.drops, height, allow_collapsed=True)
    if args.drops_file:
        lines = [ln for ln in Path(args.drops_file).read_text().splitlines() if ln.strip()]
        return parse_drop_text(lines[0] if lines else "", height, allow_collapsed=True)
    if getattr(args, "sidecar", None):
        drops, _ = read_sidecar(args.sidecar)
        if drops.image_height != height:
            raise UsageError(f"sidecar drop set is for height {drops.image_height}, "
                             f"image has {height}")
        return drops
    return None


# -- commands ----------------------------------------------------------------

def cmd_mosaic(args) -> int:
    img = read_image(args.input)
    if not isinstance(img, RgbImage):
        raise UsageError(f"{args.input} is already a raw (P5) image")
    write_pgm(args.output, mosaic(img, args.pattern))
    return EXIT_OK


def cmd_demosaic(args) -> int:
    raw = read_pgm(args.input)
    if args.pattern:
        raw = raw.replace(pattern=CfaPattern.parse(args.pattern))
    write_ppm(args.output, demosaic(raw))
    return EXIT_OK


def cmd_attack(args) -> int:
    img = read_image(args.input)
    is_rgb = isinstance(img, RgbImage)
    raw = mosaic(img, args.pattern or "GRBG") if is_rgb else img
    if args.pattern and not is_rgb:
        raw = raw.replace(pattern=CfaPattern.parse(args.pattern))
    seed = None
    drops = _drops_from_args(args, raw.height)
    if drops is None:
        if args.strips is None:
            raise UsageError("attack needs --drops, --drops-file or --strips")
        seed = args.seed if args.seed is not None else default_seed()
        drops = sample_drop_set(args.strips, raw.height, seed, args.min_gap)
    elif args.strips is not None:
        raise UsageError("--strips cannot be combined with an explicit drop set")
    companion = None
    if Padding.parse(args.pad) is Padding.NEXT_FRAME:
        if not args.next_frame:
            raise UsageError("--pad next-frame needs --next-frame FILE")
        companion = _raw_of(args.next_frame, raw.pattern.value)
    attacked = apply_attack(raw, drops, args.pad, companion)
    if is_rgb:
        write_ppm(args.output, demosaic(attacked))
    else:
        write_pgm(args.output, attacked)
    side = Path(args.sidecar_out) if args.sidecar_out else sidecar_path(args.output)
    write_sidecar(side, sidecar_record(drops, raw.pattern.value, Padding.parse(args.pad).value,
                                       seed, source=Path(args.input).name))
    print(drops.to_text())
    return EXIT_OK


def cmd_detect(args) -> int:
    clean = _raw_of(args.clean, args.pattern)
    attacked = _raw_of(args.attacked, args.pattern or clean.pattern.value)
    policy = ThresholdPolicy(kind=args.policy, noise_floor=args.noise_floor)
    profile = row_difference_profile(clean, attacked)
    if args.profile_csv:
        Path(args.profile_csv).write_text(profile.to_csv(), encoding="utf-8", newline="\n")
    edges = detect_strip_edges(profile, policy)
    for w in edges.warnings:
        print(f"warning: {w}", file=sys.stderr)
    drops = identify_dropped_rows(clean, attacked, policy, refine=not args.edges_only)
    text = drops.to_text()
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8", newline="\n")
    print(text)
    return EXIT_OK


def _eval_images(report: EvalReport, clean_dir: Path, attacked_dir: Path,
                 pattern: str, window: int) -> None:
    sidecars = sorted(attacked_dir.glob("*.json"))
    if not sidecars:
        raise UsageError(f"no sidecar files in {attacked_dir}")
    for side in sidecars:
        drops, rec = read_sidecar(side)
        source = rec.get("source")
        if not source:
            raise UsageError(f"{side}: sidecar lacks a 'source' entry")
        clean = _raw_of(str(clean_dir / source), rec.get("pattern", pattern))
        att_path = next((p for p in (side.with_suffix(".ppm"), side.with_suffix(".pgm"))
                         if p.exists()), None)
        if att_path is None:
            raise FileNotFoundError(f"no attacked image next to {side}")
        # the attacked RGB re-mosaics to the attacked raw exactly
        attacked = _raw_of(str(att_path), clean.pattern.value)
        s_raw, s_rgb = image_ssims(clean, attacked, window)
        n = int(rec.get("strip_count", (drops.m + 1) // 2))
        image_id = rec.get("image_id", Path(source).stem)
        report.add(image_id, "ssim_raw", variant_label(n), s_raw, att_path.name)
        report.add(image_id, "ssim_rgb", variant_label(n), s_rgb, att_path.name)


def _eval_detections(report: EvalReport, truth_path: str, det_paths: list[str],
                     labels: list[str]) -> list[str]:
    """Per-image mAP rows for each detection file, plus dataset-level mAP."""
    truth = load_annotations(truth_path)
    if labels and len(labels) != len(det_paths):
        raise UsageError("--label must be given once per --detections")
    labels = labels or [Path(p).stem for p in det_paths]
    if len(set(labels)) != len(labels):
        raise UsageError(f"condition labels must be unique: {labels}")
    for label, path in zip(labels, det_paths):
        dets = load_annotations(path)
        by_id = {d.image_id: d for d in dets}
        for variant in MAP_VARIANTS:
            for gt in truth:
                if not gt.boxes:
                    continue
                det = by_id.get(gt.image_id)
                report.add(str(gt.image_id), variant, label,
                           mean_ap([det] if det else [], [gt], variant))
    return labels


def cmd_eval(args) -> int:
    if not args.truth and not args.attacked_dir:
        raise UsageError("eval needs --truth/--detections and/or --clean-dir/--attacked-dir")
    report = EvalReport()
    if args.attacked_dir:
        if not args.clean_dir:
            raise UsageError("--attacked-dir needs --clean-dir")
        _eval_images(report, Path(args.clean_dir), Path(args.attacked_dir), args.pattern,
                     args.ssim_window)
    compare = None
    labels: list[str] = []
    if args.truth:
        if not args.detections:
            raise UsageError("--truth needs at least one --detections file")
        labels = _eval_detections(report, args.truth, args.detections, args.label or [])
        if args.all_pairs:
            compare = all_pairs(labels)
        elif not args.attacked_dir:
            # first condition is the reference
            compare = [(labels[0], other) for other in labels[1:]]
    report.finalize(compare)
    if args.truth:
        truth = load_annotations(args.truth)
        for label, path in zip(labels, args.detections):
            dets = load_annotations(path)
            for variant in MAP_VARIANTS:
                report.aggregates.append(MetricRow(ALL_IMAGES, f"{variant}_dataset", label,
                                                   mean_ap(dets, truth, variant)))
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_shift_ann(args) -> int:
    sets = load_annotations(args.input)
    out = []
    removed = 0
    for ann in sets:
        if args.image_id is not None and ann.image_id != args.image_id:
            out.append(ann)
            continue
        drops = _drops_from_args(args, ann.height)
        if drops is None:
            raise UsageError("shift-ann needs --drops, --drops-file or --sidecar")
        moved = shift_annotation_set(ann, drops, args.min_height, args.above_top)
        removed += len(ann.boxes) - len(moved.boxes)
        out.append(moved)
    save_annotations(out, args.output)
    print(f"removed {removed} box(es) below min height", file=sys.stderr)
    return EXIT_OK


def cmd_batch(args) -> int:
    overrides = dict(input_dir=args.input_dir, output_dir=args.output_dir,
                     pattern=args.pattern, sweep=args.sweep, padding=args.pad,
                     seed=args.seed, workers=args.workers, annotations=args.annotations,
                     min_gap=args.min_gap, force=args.force or None,
                     formats=args.formats)
    if args.config:
        cfg = BatchConfig.from_json(args.config, **overrides)
    else:
        if not args.input_dir or not args.output_dir:
            raise UsageError("batch needs --config or both --input-dir and --output-dir")
        cfg = BatchConfig(**{k: v for k, v in overrides.items() if v is not None})
    result = run_batch(cfg)
    for f in result.report.failures:
        print(f"failed: {f['image_id']} [{f['stage']}]: {f['error']}", file=sys.stderr)
    n_rows = len(result.report.rows) // 2
    print(f"{n_rows} attacked image(s), {result.written} file(s) written, "
          f"{result.skipped} skipped, {len(result.report.failures)} failure(s)",
          file=sys.stderr)
    return EXIT_PARTIAL if result.failed else EXIT_OK


# -- parser -------------------------------------------------------------------

def _sweep(text: str) -> list[int]:
    vals: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            vals.extend(range(int(lo), int(hi) + 1))
        elif part:
            vals.append(int(part))
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emistrip", description=(
        "Simulate row-drop signal-injection attacks on Bayer raw images, "
        "detect them, and evaluate the damage."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mosaic", help="RGB PPM -> raw PGM")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--pattern", default="GRBG")
    s.set_defaults(func=cmd_mosaic)

    s = sub.add_parser("demosaic", help="raw PGM -> RGB PPM (bilinear)")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--pattern", help="override the pattern recorded in the file")
    s.set_defaults(func=cmd_demosaic)

    def drop_args(s):
        s.add_argument("--drops", help="comma-separated 0-based dropped rows, e.g. 10,20")
        s.add_argument("--drops-file", help="text file whose first line is a drop list")

    s = sub.add_parser("attack", help="drop rows from a raw or RGB image")
    s.add_argument("input")
    s.add_argument("output")
    drop_args(s)
    s.add_argument("--strips", type=int, help="draw a random drop set with this many strips")
    s.add_argument("--seed", type=int, help="random seed (default $EMISTRIP_SEED or 0)")
    s.add_argument("--min-gap", type=int, default=2)
    s.add_argument("--pad", default="wrap-top",
                   choices=[x.value for x in Padding])
    s.add_argument("--next-frame", help="companion frame for --pad next-frame")
    s.add_argument("--pattern", help="CFA pattern for RGB input (default GRBG)")
    s.add_argument("--sidecar-out", help="sidecar path (default: OUTPUT with .json suffix)")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("detect", help="recover dropped rows from a clean/attacked pair")
    s.add_argument("clean")
    s.add_argument("attacked")
    s.add_argument("--pattern")
    s.add_argument("--policy", default="midpoint", choices=["midpoint", "two-means"])
    s.add_argument("--noise-floor", type=float, default=0.02)
    s.add_argument("--edges-only", action="store_true",
                   help="skip the re-simulation check and alignment fallback")
    s.add_argument("--profile-csv", help="write the row difference profile here")
    s.add_argument("-o", "--output", help="write the drop list here as well")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("eval", help="SSIM and mAP reports")
    s.add_argument("--clean-dir")
    s.add_argument("--attacked-dir", help="directory of attacked images with sidecars")
    s.add_argument("--pattern", default="GRBG")
    s.add_argument("--ssim-window", type=int, default=8)
    s.add_argument("--truth", help="ground-truth annotation JSON")
    s.add_argument("--detections", action="append", help="detection JSON, once per condition")
    s.add_argument("--label", action="append", help="condition name per --detections")
    s.add_argument("--all-pairs", action="store_true",
                   help="t-test every pair of conditions, not just first-vs-rest")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("-o", "--output", help="report path (default stdout)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("shift-ann", help="shift annotation boxes onto an attacked image")
    s.add_argument("input")
    s.add_argument("output")
    drop_args(s)
    s.add_argument("--sidecar", help="take the drop set from an attack sidecar")
    s.add_argument("--image-id", type=int, help="only shift this image's boxes")
    s.add_argument("--min-height", type=float, default=2)
    s.add_argument("--above-top", action="store_true",
                   help="count drops above the box top instead of above its centre")
    s.set_defaults(func=cmd_shift_ann)

    s = sub.add_parser("batch", help="attack a dataset over a strip-count sweep")
    s.add_argument("--config", help="JSON file with BatchConfig fields")
    s.add_argument("--input-dir")
    s.add_argument("--output-dir")
    s.add_argument("--pattern")
    s.add_argument("--sweep", type=_sweep, help="strip counts, e.g. 1-20 or 3,6,15")
    s.add_argument("--pad", choices=[x.value for x in Padding if x is not Padding.NEXT_FRAME])
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--annotations")
    s.add_argument("--min-gap", type=int)
    s.add_argument("--formats", type=lambda t: [x for x in t.split(",") if x])
    s.add_argument("--force", action="store_true", help="rewrite existing outputs")
    s.set_defaults(func=cmd_batch)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (NetpbmError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"emistrip: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, DropSetError, AnnotationFormatError, UndefinedMetric,
            ValueError, KeyError) as exc:
        print(f"emistrip: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"emistrip: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
