"""Evaluation reports: per-image metric rows, per-condition aggregates and
t-tests, serialised to CSV (image_id, metric, variant, value) and JSON."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .metrics.stats import TooFewSamples, ZeroVariance, welch_t_test

CSV_COLUMNS = ("image_id", "metric", "variant", "value")
ALL_IMAGES = "*"


@dataclass(frozen=True)
class MetricRow:
    image_id: str
    metric: str
    variant: str
    value: float
    artifact: str = ""


@dataclass
class EvalReport:
    rows: list[MetricRow] = field(default_factory=list)
    aggregates: list[MetricRow] = field(default_factory=list)
    ttests: list[MetricRow] = field(default_factory=list)
    failures: list[dict[str, str]] = field(default_factory=list)

    def add(self, image_id: str, metric: str, variant: str, value: float,
            artifact: str = "") -> None:
        self.rows.append(MetricRow(str(image_id), metric, variant, float(value), artifact))

    def values(self, metric: str, variant: str) -> list[float]:
        return [r.value for r in self.rows if r.metric == metric and r.variant == variant]

    def finalize(self, compare: Sequence[tuple[str, str]] | None = None) -> "EvalReport":
        """Recompute aggregates and t-tests from the per-image rows.

        ``compare`` lists variant pairs to test; default is every pair of
        consecutive variants (first-seen order) per metric.
        """
        self.aggregates = []
        self.ttests = []
        groups: dict[tuple[str, str], list[float]] = {}
        for r in self.rows:
            groups.setdefault((r.metric, r.variant), []).append(r.value)
        for (metric, variant), vals in groups.items():
            mean, std = mean_std(vals)
            self.aggregates.append(MetricRow(ALL_IMAGES, f"{metric}_mean", variant, mean))
            self.aggregates.append(MetricRow(ALL_IMAGES, f"{metric}_std", variant, std))
            self.aggregates.append(MetricRow(ALL_IMAGES, f"{metric}_n", variant, len(vals)))
        metrics = list(dict.fromkeys(m for m, _ in groups))
        for metric in metrics:
            variants = [v for m, v in groups if m == metric]
            pairs = compare if compare is not None else list(zip(variants, variants[1:]))
            for a, b in pairs:
                if (metric, a) not in groups or (metric, b) not in groups:
                    continue
                label = f"{a}|{b}"
                try:
                    res = welch_t_test(groups[(metric, a)], groups[(metric, b)])
                except ZeroVariance:
                    # both samples constant: equal means or an infinitely sharp split
                    diff = groups[(metric, a)][0] - groups[(metric, b)][0]
                    if diff == 0:
                        t, df, p = 0.0, math.nan, 1.0
                    else:
                        t, df, p = math.copysign(math.inf, diff), math.nan, 0.0
                except TooFewSamples:
                    continue
                else:
                    t, df, p = res.t_statistic, res.degrees_of_freedom, res.p_value
                self.ttests += [MetricRow(ALL_IMAGES, f"{metric}_ttest_t", label, t),
                                MetricRow(ALL_IMAGES, f"{metric}_ttest_df", label, df),
                                MetricRow(ALL_IMAGES, f"{metric}_ttest_p", label, p)]
        return self

    def all_rows(self) -> list[MetricRow]:
        return self.rows + self.aggregates + self.ttests

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.all_rows():
            w.writerow([r.image_id, r.metric, r.variant, _fmt(r.value)])
        return buf.getvalue()

    def to_json(self) -> str:
        def rec(r: MetricRow) -> dict:
            d = {"image_id": r.image_id, "metric": r.metric, "variant": r.variant,
                 "value": r.value if math.isfinite(r.value) else None}
            if r.artifact:
                d["artifact"] = r.artifact
            return d
        doc = {
            "rows": [rec(r) for r in self.rows],
            "aggregates": [rec(r) for r in self.aggregates],
            "ttests": [rec(r) for r in self.ttests],
            "failures": self.failures,
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return repr(float(v))


def mean_std(values: Iterable[float]) -> tuple[float, float]:
    """Mean and sample (n - 1) standard deviation; std is 0 for a single value."""
    vals = list(values)
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (n - 1))


def all_pairs(variants: Sequence[str]) -> list[tuple[str, str]]:
    return list(combinations(variants, 2))
