"""Down-weight coordinated clients whose update histories look too alike."""

import numpy as np

from .base import AggregationResult, Aggregator, normalized_weights


def foolsgold_weights(histories, eps=1e-9):
    """Per-client weights in [0, 1] from pairwise history cosine similarity.

    Follows the original scheme: maximum similarity per client, pardoning of
    clients that look less suspicious than their counterparts, then a logit
    rescaling clamped to [0, 1]. Zero-norm histories get similarity 0 and
    end up with weight 1 before rescaling.
    """
    hist = np.asarray(histories, dtype=np.float64)
    n = hist.shape[0]
    if n == 1:
        return np.ones(1)
    norms = np.linalg.norm(hist, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = hist / safe[:, None]
    cs = unit @ unit.T
    np.fill_diagonal(cs, 0.0)
    vmax = cs.max(axis=1)
    for i in range(n):
        for j in range(n):
            if vmax[j] > vmax[i] and vmax[j] > 0:
                cs[i, j] *= vmax[i] / vmax[j]
    alpha = np.clip(1.0 - cs.max(axis=1), 0.0, 1.0)
    top = alpha.max()
    if top > 0:
        alpha = alpha / top
    with np.errstate(divide="ignore"):
        alpha = np.log(alpha / np.clip(1.0 - alpha, eps, None) + eps) + 0.5
    return np.clip(alpha, 0.0, 1.0)


class FoolsGold(Aggregator):
    """Stateful: accumulates each client's updates across rounds."""

    name = "foolsgold"

    def __init__(self):
        self.history = {}

    def aggregate(self, ctx):
        for cid in ctx.participants:
            values = ctx.updates[cid].values.astype(np.float64)
            if cid in self.history:
                self.history[cid] = self.history[cid] + values
            else:
                self.history[cid] = values.copy()
        ids = list(ctx.participants)
        raw = foolsgold_weights([self.history[cid] for cid in ids])
        weights = normalized_weights(ids, raw)
        return AggregationResult(weights=weights, diagnostics={"raw": dict(zip(ids, raw))})
