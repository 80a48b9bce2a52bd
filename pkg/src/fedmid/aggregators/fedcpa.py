"""Critical-parameter comparison: agree on which coordinates matter most."""

import numpy as np
from scipy.stats import spearmanr

from .base import AggregationResult, Aggregator, normalized_weights


def jaccard(a, b):
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def importance(delta, theta):
    """Coordinate importance: |delta * theta|."""
    return np.abs(np.asarray(delta, dtype=np.float64) * np.asarray(theta, dtype=np.float64))


def pairwise_similarity(imp_i, imp_j, top_i, top_j, bot_i, bot_j):
    """Average of the top/bottom Jaccard agreement and the Spearman correlation
    of importances over the union of the two top sets."""
    set_sim = 0.5 * (jaccard(top_i, top_j) + jaccard(bot_i, bot_j))
    union = np.array(sorted(set(top_i) | set(top_j)))
    a, b = imp_i[union], imp_j[union]
    if union.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        # rank correlation undefined on constant slices; exact agreement
        # counts as 1, anything else as neutral 0
        rank_sim = 1.0 if np.array_equal(a, b) else 0.0
    else:
        rho = spearmanr(a, b).statistic
        rank_sim = 0.0 if np.isnan(rho) else float(rho)
    return 0.5 * (set_sim + rank_sim)


def fedcpa_weights(deltas, thetas, k_frac=0.01):
    """Min-max normalized mean similarity of each client to the others."""
    deltas = np.asarray(deltas, dtype=np.float64)
    thetas = np.asarray(thetas, dtype=np.float64)
    n, dim = deltas.shape
    if n < 2:
        raise ValueError("fedcpa needs at least 2 clients")
    k = max(1, int(k_frac * dim))
    if k > dim // 2:
        raise ValueError(f"top-k of {k} exceeds half the dimension {dim}")
    imps, tops, bots = [], [], []
    for i in range(n):
        imp = importance(deltas[i], thetas[i])
        order = np.argsort(imp, kind="stable")
        imps.append(imp)
        bots.append(order[:k])
        tops.append(order[-k:])
    sims = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = pairwise_similarity(imps[i], imps[j], tops[i], tops[j], bots[i], bots[j])
            sims[i, j] = sims[j, i] = s
    scores = sims.sum(axis=1) / (n - 1)
    lo, hi = scores.min(), scores.max()
    if hi - lo < 1e-12:
        return np.full(n, 0.5), scores
    return (scores - lo) / (hi - lo), scores


class FedCpa(Aggregator):
    name = "fedcpa"

    def __init__(self, k_frac=0.01):
        self.k_frac = k_frac

    def aggregate(self, ctx):
        deltas = ctx.stacked()
        thetas = deltas + ctx.global_params.values.astype(np.float64)[None, :]
        raw, scores = fedcpa_weights(deltas, thetas, self.k_frac)
        ids = list(ctx.participants)
        return AggregationResult(
            weights=normalized_weights(ids, raw),
            diagnostics={"similarity": dict(zip(ids, scores))},
        )
