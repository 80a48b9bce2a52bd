"""Spectral outlier filtering on random coordinate subsamples."""

import numpy as np

from ..rng import STREAM_AGGREGATOR, child_rng
from .base import AggregationResult, Aggregator, as_delta


def dnc_scores(subsampled):
    """Squared projection of centered updates on their top right-singular vector."""
    centered = subsampled - subsampled.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return (centered @ vt[0]) ** 2


def dnc(updates, n_mal, n_iters=1, c=1.0, sub_dim=10_000, rng=None):
    """Iteratively drop the ceil(c * n_mal) highest-projection updates.

    Each iteration subsamples min(sub_dim, dim) coordinates; survivors are
    the intersection of the per-iteration keep sets and their mean is the
    aggregate. Raises when filtering would leave no survivors.
    """
    updates = np.asarray(updates, dtype=np.float64)
    n, dim = updates.shape
    if n < 2:
        raise ValueError("dnc needs at least 2 updates")
    if n_mal >= n:
        raise ValueError("expected attacker count must be below the update count")
    rng = rng or np.random.default_rng()
    n_remove = min(int(np.ceil(c * n_mal)), n - 1)
    survivors = set(range(n))
    for _ in range(n_iters):
        if sub_dim < dim:
            coords = rng.choice(dim, size=sub_dim, replace=False)
            view = updates[:, coords]
        else:
            view = updates
        scores = dnc_scores(view)
        keep = np.argsort(scores, kind="stable")[: n - n_remove]
        survivors &= set(int(k) for k in keep)
    if not survivors:
        raise ValueError("dnc filtering removed every update")
    idx = sorted(survivors)
    return updates[idx].mean(axis=0), idx


class Dnc(Aggregator):
    name = "dnc"

    def __init__(self, n_mal, n_iters=1, c=1.0, sub_dim=10_000, master_seed=0):
        self.n_mal = n_mal
        self.n_iters = n_iters
        self.c = c
        self.sub_dim = sub_dim
        self.master_seed = master_seed

    def aggregate(self, ctx):
        rng = child_rng(self.master_seed, STREAM_AGGREGATOR, ctx.round_index)
        combined, idx = dnc(
            ctx.stacked(), self.n_mal, self.n_iters, self.c, self.sub_dim, rng
        )
        chosen = [ctx.participants[i] for i in idx]
        weights = {cid: (1.0 / len(chosen) if cid in chosen else 0.0) for cid in ctx.participants}
        return AggregationResult(
            delta=as_delta(combined, ctx.global_params),
            diagnostics={"selected": chosen, "weights": weights},
        )
