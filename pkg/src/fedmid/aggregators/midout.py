"""Aggregation by functional-mapping comparison on a synthetic probe.

Each participant's model (global + update) is run on a fresh standard-normal
probe batch with batchnorm on current-batch statistics. Per tap layer, the
probe samples' pairwise-distance matrix summarizes the model's relational
knowledge; clients whose matrices sit far from everyone else's get high
anomaly scores, low normality, and near-zero aggregation weight.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..engine import unflatten_params
from ..relational import layer_distance, model_distance_matrices, probe_batch
from .base import AggregationResult, Aggregator


def minmax_normalize(values, degenerate=0.5):
    """Scale to [0, 1]; an all-equal vector maps to the neutral midpoint."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi - lo < 1e-12:
        return np.full(values.shape, degenerate)
    return (values - lo) / (hi - lo)


def anomaly_scores(layer_dist):
    """Median distance from each client to the others, per layer.

    ``layer_dist`` is (n_layers, n, n) of pairwise layer distances; the
    median over j != i uses the even-count middle-pair mean.
    """
    n_layers, n, _ = layer_dist.shape
    if n < 2:
        raise ValueError("anomaly scores need at least 2 participating clients")
    mask = ~np.eye(n, dtype=bool)
    others = layer_dist[:, mask].reshape(n_layers, n, n - 1)
    return np.median(others, axis=2)


def normality_scores(anomalies):
    """Negated mean of per-layer min-max-normalized anomalies, rescaled.

    Returns (normality, rescaled) where rescaled is the min-max of the
    normality across clients (all-equal degenerates to 0.5 at both stages).
    """
    anomalies = np.asarray(anomalies, dtype=np.float64)
    per_layer = np.stack([minmax_normalize(row) for row in anomalies])
    normality = -per_layer.mean(axis=0)
    return normality, minmax_normalize(normality)


def weights_from_normality(n_tilde):
    """Inverse-sigmoid weights with majority and worst-client overrides.

    a_i = clamp_[0,1](ln(n/(1-n)) + 0.5) with the limits at n in {0, 1}
    defined as 0 and 1. The ceil(n/2) clients with the largest rescaled
    normality are forced to weight 1 (ties by lower client index). The
    single client with the smallest pre-override weight is forced to 0;
    clamping makes ties there common, so they break toward the smallest
    rescaled normality (the most suspicious client) and then the lowest
    index. The zero override wins should both ever select the same client.
    """
    n_tilde = np.asarray(n_tilde, dtype=np.float64)
    n = n_tilde.size
    raw = np.empty(n)
    for i, value in enumerate(n_tilde):
        if value <= 0.0:
            raw[i] = 0.0
        elif value >= 1.0:
            raw[i] = 1.0
        else:
            raw[i] = np.clip(np.log(value / (1.0 - value)) + 0.5, 0.0, 1.0)
    weights = raw.copy()
    majority = np.lexsort((np.arange(n), -n_tilde))[: int(np.ceil(n / 2))]
    weights[majority] = 1.0
    weights[np.lexsort((np.arange(n), n_tilde, raw))[0]] = 0.0
    return weights, raw


def positive_count_weights(a):
    """Final weights a_i / #{j : a_j > 0}; they need not sum to one."""
    positive = int(np.count_nonzero(np.asarray(a) > 0))
    if positive == 0:
        return None
    return np.asarray(a, dtype=np.float64) / positive


class MidOutputDefense(Aggregator):
    name = "fedmid"

    def __init__(self, model_template, m_probe=200, master_seed=0, n_threads=1):
        self.model_template = model_template
        self.m_probe = m_probe
        self.master_seed = master_seed
        self.n_threads = max(1, n_threads)

    def _client_matrices(self, ctx, probe, cid):
        model = self.model_template.copy()
        unflatten_params(model, ctx.global_params + ctx.updates[cid])
        return model_distance_matrices(model, probe)

    def aggregate(self, ctx):
        ids = list(ctx.participants)
        n = len(ids)
        if n < 2:
            raise ValueError("the defense needs at least 2 participating clients")
        probe = probe_batch(
            self.model_template.input_shape, self.m_probe, self.master_seed, ctx.round_index
        )
        if self.n_threads > 1:
            with ThreadPoolExecutor(max_workers=self.n_threads) as pool:
                matrices = list(pool.map(lambda c: self._client_matrices(ctx, probe, c), ids))
        else:
            matrices = [self._client_matrices(ctx, probe, cid) for cid in ids]
        n_layers = len(matrices[0])
        layer_dist = np.zeros((n_layers, n, n))
        for layer in range(n_layers):
            for i in range(n):
                for j in range(i + 1, n):
                    d = layer_distance(matrices[i][layer], matrices[j][layer])
                    layer_dist[layer, i, j] = layer_dist[layer, j, i] = d
        anomalies = anomaly_scores(layer_dist)
        normality, rescaled = normality_scores(anomalies)
        a, raw = weights_from_normality(rescaled)
        final = positive_count_weights(a)
        diagnostics = {
            "anomaly": {cid: anomalies[:, i].tolist() for i, cid in enumerate(ids)},
            "normality": dict(zip(ids, normality)),
            "normality_rescaled": dict(zip(ids, rescaled)),
            "a_raw": dict(zip(ids, raw)),
            "a": dict(zip(ids, a)),
        }
        if final is None:
            # theoretically excluded by the majority override; stay safe
            logging.getLogger("fedmid").warning(
                "all defense weights zero in round %d; falling back to uniform", ctx.round_index
            )
            final = np.full(n, 1.0 / n)
        diagnostics["weights"] = dict(zip(ids, final))
        return AggregationResult(weights=dict(zip(ids, final.tolist())), diagnostics=diagnostics)
