"""Coordinate-wise robust statistics: mean, median, trimmed mean."""

import numpy as np

from ..federation import size_proportional_weights, uniform_weights
from .base import AggregationResult, Aggregator, as_delta


class FedAvg(Aggregator):
    """Plain averaging; size-proportional weights by default, uniform on demand."""

    name = "fedavg"

    def __init__(self, size_weighted=True):
        self.size_weighted = size_weighted

    def aggregate(self, ctx):
        if self.size_weighted:
            weights = size_proportional_weights(ctx.participants, ctx.data_sizes)
        else:
            weights = uniform_weights(ctx.participants)
        return AggregationResult(weights=weights)


def coordinate_median(updates):
    """Per-coordinate median; even counts average the two middle values."""
    updates = np.asarray(updates, dtype=np.float64)
    if updates.ndim != 2 or updates.shape[0] < 1:
        raise ValueError("need at least one update")
    return np.median(updates, axis=0)


def trimmed_mean(updates, trim_k):
    """Drop the k smallest and k largest values per coordinate, then average."""
    updates = np.asarray(updates, dtype=np.float64)
    n = updates.shape[0]
    if trim_k < 0 or 2 * trim_k >= n:
        raise ValueError(f"cannot trim {trim_k} from both ends of {n} updates")
    if trim_k == 0:
        return updates.mean(axis=0)
    ordered = np.sort(updates, axis=0)
    return ordered[trim_k : n - trim_k].mean(axis=0)


class Median(Aggregator):
    name = "median"

    def aggregate(self, ctx):
        return AggregationResult(delta=as_delta(coordinate_median(ctx.stacked()), ctx.global_params))


class TrimmedMean(Aggregator):
    name = "trimmed_mean"

    def __init__(self, trim_k=None, attacker_ratio=0.2):
        self.trim_k = trim_k
        self.attacker_ratio = attacker_ratio

    def aggregate(self, ctx):
        n = len(ctx.participants)
        k = self.trim_k if self.trim_k is not None else int(np.ceil(self.attacker_ratio * n))
        k = min(k, (n - 1) // 2)
        return AggregationResult(
            delta=as_delta(trimmed_mean(ctx.stacked(), k), ctx.global_params),
            diagnostics={"trim_k": k},
        )
