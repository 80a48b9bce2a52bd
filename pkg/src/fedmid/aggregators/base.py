"""Common contract for aggregation rules.

A rule consumes the round context and returns either a directly combined
update (``delta``) or final per-client weights (``weights``), in which case
the server applies phi + sum_i w_i * delta_i. Weight-producing rules return
weights already in their final form; ``diagnostics`` carries anything worth
recording (scores, selections, trust values).
"""

from dataclasses import dataclass, field

import numpy as np

from ..engine import ParamVector


@dataclass
class AggregationResult:
    delta: ParamVector | None = None
    weights: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.delta is None) == (self.weights is None):
            raise ValueError("aggregation result needs exactly one of delta or weights")
        if self.weights is not None and any(w < 0 for w in self.weights.values()):
            raise ValueError("aggregation weights must be non-negative")


class Aggregator:
    name = "base"

    def aggregate(self, ctx):
        raise NotImplementedError


def as_delta(values, like):
    """Wrap a float64 row back into a ParamVector with the round's layout."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise ValueError("aggregated update contains non-finite values")
    return ParamVector(values.astype(like.values.dtype), like.layout)


def normalized_weights(participants, raw):
    """Scale non-negative raw scores to sum one (uniform if all zero)."""
    raw = np.asarray(raw, dtype=np.float64)
    total = raw.sum()
    if total <= 0:
        raw = np.ones_like(raw)
        total = raw.sum()
    return {cid: float(w / total) for cid, w in zip(participants, raw)}
