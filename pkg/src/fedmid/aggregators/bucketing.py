"""Bucketing: average random groups of s updates before a robust inner rule."""

import numpy as np

from ..rng import STREAM_AGGREGATOR, child_rng
from .base import AggregationResult, Aggregator, as_delta
from .rfa import geometric_median


def bucketize(updates, s, rng):
    """Shuffle and partition into ceil(n/s) buckets of size <= s; return means."""
    updates = np.asarray(updates, dtype=np.float64)
    n = updates.shape[0]
    if s < 1:
        raise ValueError("bucket size must be >= 1")
    order = rng.permutation(n)
    means = []
    for start in range(0, n, s):
        means.append(updates[order[start : start + s]].mean(axis=0))
    return np.stack(means)


class Bucket(Aggregator):
    """Buckets feed the smoothed geometric median."""

    name = "bucket"

    def __init__(self, s=2, master_seed=0, smoothing=1e-6, max_iter=100):
        self.s = s
        self.master_seed = master_seed
        self.smoothing = smoothing
        self.max_iter = max_iter

    def aggregate(self, ctx):
        rng = child_rng(self.master_seed, STREAM_AGGREGATOR, ctx.round_index)
        means = bucketize(ctx.stacked(), self.s, rng)
        combined, _ = geometric_median(means, self.smoothing, self.max_iter)
        return AggregationResult(
            delta=as_delta(combined, ctx.global_params),
            diagnostics={"buckets": means.shape[0]},
        )
