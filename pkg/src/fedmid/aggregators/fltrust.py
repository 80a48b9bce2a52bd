"""Trust-bootstrapped aggregation against a server-side root update."""

import numpy as np

from .base import AggregationResult, Aggregator, as_delta


def fltrust_combine(updates, server_update):
    """ReLU-clipped cosine trust scores, norm-rescaled weighted mean.

    Each client update is rescaled to the server update's norm; trust is
    max(0, cos(server, client)). Returns the zero vector when every score
    clips to zero.
    """
    updates = np.asarray(updates, dtype=np.float64)
    g0 = np.asarray(server_update, dtype=np.float64)
    g0_norm = np.linalg.norm(g0)
    if g0_norm == 0:
        raise ValueError("server root update has zero norm")
    norms = np.linalg.norm(updates, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    trust = np.maximum((updates @ g0) / (safe * g0_norm), 0.0)
    trust = np.where(norms > 0, trust, 0.0)
    total = trust.sum()
    if total == 0:
        return np.zeros_like(g0), trust, np.zeros_like(trust)
    rescaled = updates * (g0_norm / safe)[:, None]
    combined = (trust[:, None] * rescaled).sum(axis=0) / total
    return combined, trust, trust / total


class FlTrust(Aggregator):
    """Needs the harness to train a root-dataset update each round."""

    name = "fltrust"

    def aggregate(self, ctx):
        if ctx.server_update is None:
            raise ValueError("fltrust requires a server root update in the round context")
        combined, trust, weights = fltrust_combine(
            ctx.stacked(), ctx.server_update.values.astype(np.float64)
        )
        return AggregationResult(
            delta=as_delta(combined, ctx.global_params),
            diagnostics={
                "trust": dict(zip(ctx.participants, trust)),
                "weights": dict(zip(ctx.participants, weights)),
            },
        )
