"""Federated simulation core: partitioning, local training, aggregation plumbing."""

from .partition import PartitionSpec, dirichlet_partition
from .rounds import (
    ClientState,
    RoundContext,
    sample_participants,
    size_proportional_weights,
    uniform_weights,
    weighted_aggregate,
)
from .training import Hyperparams, local_train, minibatches

__all__ = [
    "ClientState",
    "Hyperparams",
    "PartitionSpec",
    "RoundContext",
    "dirichlet_partition",
    "local_train",
    "minibatches",
    "sample_participants",
    "size_proportional_weights",
    "uniform_weights",
    "weighted_aggregate",
]
