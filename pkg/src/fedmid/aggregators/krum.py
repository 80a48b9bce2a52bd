"""Krum / Multi-Krum: keep the updates closest to their nearest neighbours."""

import numpy as np

from .base import AggregationResult, Aggregator, as_delta


def krum_scores(updates, n_expected_attackers):
    """Sum of squared distances to each update's n-f-2 nearest neighbours.

    The neighbourhood size is clipped to [1, n-1] so the rule stays defined
    below the classical n >= 2f+3 regime.
    """
    updates = np.asarray(updates, dtype=np.float64)
    n = updates.shape[0]
    if n < 2:
        raise ValueError("krum needs at least 2 updates")
    sq = ((updates[:, None, :] - updates[None, :, :]) ** 2).sum(axis=-1)
    k = int(np.clip(n - n_expected_attackers - 2, 1, n - 1))
    scores = np.empty(n)
    for i in range(n):
        others = np.delete(sq[i], i)
        others.sort()
        scores[i] = others[:k].sum()
    return scores


def multi_krum(updates, f, m):
    """Average the m lowest-scoring updates (ties broken by input order)."""
    updates = np.asarray(updates, dtype=np.float64)
    scores = krum_scores(updates, f)
    m = int(np.clip(m, 1, updates.shape[0]))
    selected = np.argsort(scores, kind="stable")[:m]
    return updates[selected].mean(axis=0), selected, scores


class MultiKrum(Aggregator):
    name = "multi_krum"

    def __init__(self, f=None, m=None, attacker_ratio=0.2):
        self.f = f
        self.m = m
        self.attacker_ratio = attacker_ratio

    def aggregate(self, ctx):
        n = len(ctx.participants)
        f = self.f if self.f is not None else int(np.ceil(self.attacker_ratio * n))
        m = self.m if self.m is not None else n - f
        combined, selected, scores = multi_krum(ctx.stacked(), f, m)
        chosen = [ctx.participants[i] for i in selected]
        weights = {cid: (1.0 / len(chosen) if cid in chosen else 0.0) for cid in ctx.participants}
        return AggregationResult(
            delta=as_delta(combined, ctx.global_params),
            diagnostics={"selected": chosen, "scores": dict(zip(ctx.participants, scores)), "weights": weights},
        )
