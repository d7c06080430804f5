from .detection import (
    ApResult,
    PrCurve,
    UndefinedMetric,
    average_precision,
    iou,
    mean_ap,
    pr_curve,
)
from .ssim import SsimParams, ssim
from .stats import TTestResult, TooFewSamples, ZeroVariance, welch_t_test

__all__ = [
    "ApResult", "PrCurve", "UndefinedMetric", "average_precision", "iou", "mean_ap",
    "pr_curve", "SsimParams", "ssim", "TTestResult", "TooFewSamples", "ZeroVariance",
    "welch_t_test",
]
