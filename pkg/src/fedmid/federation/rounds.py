"""Round-level plumbing: client sampling, round context, weighted aggregation."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..engine import ParamVector


@dataclass
class ClientState:
    client_id: int
    indices: np.ndarray  # rows of the training arrays owned by this client
    malicious: bool = False
    attack = None  # AttackConfig for malicious clients, None otherwise

    @property
    def data_size(self):
        return int(self.indices.size)


@dataclass
class RoundContext:
    """Everything an aggregation rule may look at for one round."""

    round_index: int
    participants: tuple
    global_params: ParamVector
    updates: dict  # client id -> ParamVector delta
    data_sizes: dict  # client id -> local dataset size
    server_update: ParamVector | None = None
    extras: dict = field(default_factory=dict)

    def stacked(self, dtype=np.float64):
        """Updates stacked in participant order as an (n, dim) matrix."""
        return np.stack([self.updates[i].values for i in self.participants]).astype(dtype)


def sample_participants(n_clients, fraction, rng):
    """Uniformly sample ceil(fraction * N) distinct clients for a round."""
    k = max(1, math.ceil(n_clients * fraction))
    chosen = rng.choice(n_clients, size=k, replace=False)
    return tuple(sorted(int(c) for c in chosen))


def weighted_aggregate(global_params, updates, weights):
    """Apply phi + sum_i w_i * delta_i; weights must be non-negative."""
    total = None
    for cid, delta in updates.items():
        global_params.check_layout(delta)
        w = weights[cid]
        if w < 0:
            raise ValueError(f"negative aggregation weight for client {cid}")
        term = w * delta.values.astype(np.float64)
        total = term if total is None else total + term
    if total is None:
        raise ValueError("no updates to aggregate")
    new_values = global_params.values.astype(np.float64) + total
    return ParamVector(new_values.astype(global_params.values.dtype), global_params.layout)


def size_proportional_weights(participants, data_sizes):
    total = sum(data_sizes[i] for i in participants)
    return {i: data_sizes[i] / total for i in participants}


def uniform_weights(participants):
    return {i: 1.0 / len(participants) for i in participants}
