"""Simulation, detection and evaluation of row-drop attacks on Bayer raw images."""
from __future__ import annotations

__version__ = "0.1.0"

from .annotations import (
    AnnotationFormatError,
    AnnotationSet,
    BoundingBox,
    DetectionSet,
    load_annotations,
    save_annotations,
    shift_annotation_set,
    shift_box,
)
from .cfa import CfaPattern, DimensionError, RawImage, RgbImage, channel_at, demosaic, mosaic
from .drops import (
    AdjacentRows,
    DegenerateStrip,
    DropSet,
    DropSetError,
    Infeasible,
    NotAscending,
    OutOfRange,
    StripLayout,
    dropped_rows_from_positions,
    sample_drop_set,
    strip_count,
    strip_layout,
    strip_positions,
    validate_drop_set,
)
from .identify import (
    EdgeDetection,
    RowDifferenceProfile,
    ThresholdPolicy,
    detect_strip_edges,
    identify_dropped_rows,
    row_difference_profile,
)
from .simulate import Padding, apply_attack, simulate_attacked_rgb

import types as _types

__all__ = sorted(name for name, obj in globals().items()
                 if not name.startswith("_") and not isinstance(obj, _types.ModuleType))
