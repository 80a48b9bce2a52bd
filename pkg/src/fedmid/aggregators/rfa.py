"""Robust federated averaging via the smoothed geometric median."""

import numpy as np

from .base import AggregationResult, Aggregator, as_delta


def geometric_median(points, smoothing=1e-6, max_iter=100, rel_tol=1e-6):
    """Smoothed Weiszfeld iteration from the coordinate-wise mean.

    Stops after ``max_iter`` iterations or when the iterate moves by less
    than ``rel_tol`` relative to its norm. Returns (median, objective_trace)
    where the trace holds sum_i ||u_i - v|| per iterate.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("need at least one point")
    v = points.mean(axis=0)
    trace = [float(np.linalg.norm(points - v, axis=1).sum())]
    for _ in range(max_iter):
        dist = np.linalg.norm(points - v, axis=1)
        w = 1.0 / np.maximum(dist, smoothing)
        new_v = (w[:, None] * points).sum(axis=0) / w.sum()
        trace.append(float(np.linalg.norm(points - new_v, axis=1).sum()))
        step = np.linalg.norm(new_v - v)
        v = new_v
        if step <= rel_tol * max(np.linalg.norm(v), smoothing):
            break
    return v, trace


class Rfa(Aggregator):
    name = "rfa"

    def __init__(self, smoothing=1e-6, max_iter=100):
        self.smoothing = smoothing
        self.max_iter = max_iter

    def aggregate(self, ctx):
        median, trace = geometric_median(ctx.stacked(), self.smoothing, self.max_iter)
        return AggregationResult(
            delta=as_delta(median, ctx.global_params),
            diagnostics={"iterations": len(trace) - 1, "objective": trace[-1]},
        )
