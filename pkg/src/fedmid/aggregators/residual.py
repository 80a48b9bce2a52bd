"""Residual-based reweighting around a repeated-median fit per coordinate."""

import numpy as np

from .base import AggregationResult, Aggregator, as_delta


def repeated_median_fit(values):
    """Repeated-median slope/intercept of sorted values against their ranks.

    ``values`` is (n, dim); the fit runs per coordinate on the sorted
    sequence. Returns residuals in the original client order.
    """
    values = np.asarray(values, dtype=np.float64)
    n, dim = values.shape
    order = np.argsort(values, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(values, order, axis=0)
    x = np.arange(n, dtype=np.float64)
    dx = x[:, None] - x[None, :]  # (n, n)
    np.fill_diagonal(dx, 1.0)  # avoid 0/0; diagonal is masked out below
    diffs = sorted_vals[:, None, :] - sorted_vals[None, :, :]  # (n, n, dim)
    slopes = diffs / dx[:, :, None]
    mask = ~np.eye(n, dtype=bool)
    per_point = np.median(
        slopes[mask].reshape(n, n - 1, dim), axis=1
    )  # median over j != i
    slope = np.median(per_point, axis=0)
    intercept = np.median(sorted_vals - slope[None, :] * x[:, None], axis=0)
    fitted_sorted = intercept[None, :] + slope[None, :] * x[:, None]
    residuals_sorted = sorted_vals - fitted_sorted
    residuals = np.empty_like(residuals_sorted)
    np.put_along_axis(residuals, order, residuals_sorted, axis=0)
    return residuals


def residual_confidences(values, confidence=2.0, clip_threshold=0.05):
    """Hard-threshold confidence per (client, coordinate) from standardized residuals."""
    residuals = repeated_median_fit(values)
    mad = np.median(np.abs(residuals - np.median(residuals, axis=0)), axis=0)
    scale = np.maximum(1.4826 * mad, 1e-12)
    standardized = residuals / scale
    return np.where(np.abs(standardized) <= confidence, 1.0, clip_threshold)


def residual_base(values, confidence=2.0, clip_threshold=0.05):
    """Confidence-weighted coordinate mean; needs at least 3 updates."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 3:
        raise ValueError("residual reweighting needs at least 3 updates")
    conf = residual_confidences(values, confidence, clip_threshold)
    return (conf * values).sum(axis=0) / conf.sum(axis=0)


class ResidualBase(Aggregator):
    name = "residual_base"

    def __init__(self, confidence=2.0, clip_threshold=0.05):
        self.confidence = confidence
        self.clip_threshold = clip_threshold

    def aggregate(self, ctx):
        combined = residual_base(ctx.stacked(), self.confidence, self.clip_threshold)
        return AggregationResult(delta=as_delta(combined, ctx.global_params))
