"""Non-IID data partitioning across clients."""

from dataclasses import dataclass

import numpy as np

from ..rng import STREAM_PARTITION, child_rng


@dataclass
class PartitionSpec:
    n_clients: int
    beta: float
    n_classes: int
    seed: int

    def __post_init__(self):
        if self.n_clients < 2:
            raise ValueError("partition needs at least 2 clients")
        if self.beta <= 0:
            raise ValueError("Dirichlet concentration beta must be positive")


def dirichlet_partition(labels, spec):
    """Split sample indices across clients with class proportions ~ Dir(beta).

    For each class the per-client proportions are drawn from a symmetric
    Dirichlet and the class's samples are assigned multinomially. Clients
    left empty by extreme draws receive one sample moved from the currently
    largest client, so every client ends up non-empty. Deterministic per
    seed; the returned index arrays are disjoint and cover the dataset.
    """
    labels = np.asarray(labels)
    n = spec.n_clients
    if labels.size < n:
        raise ValueError(f"dataset of {labels.size} samples cannot cover {n} clients")
    rng = child_rng(spec.seed, STREAM_PARTITION)
    assigned = [[] for _ in range(n)]
    for cls in range(spec.n_classes):
        idx = np.flatnonzero(labels == cls)
        if idx.size == 0:
            continue
        rng.shuffle(idx)
        proportions = rng.dirichlet(np.full(n, spec.beta))
        counts = rng.multinomial(idx.size, proportions)
        start = 0
        for client, count in enumerate(counts):
            if count:
                assigned[client].extend(idx[start : start + count].tolist())
            start += count
    parts = [np.array(sorted(a), dtype=np.int64) for a in assigned]
    # degenerate-draw repair: move one sample from the largest client into
    # each empty one
    while any(p.size == 0 for p in parts):
        empty = min(i for i, p in enumerate(parts) if p.size == 0)
        donor = int(np.argmax([p.size for p in parts]))
        if parts[donor].size <= 1:
            raise ValueError("dataset too small to repair empty partitions")
        moved, parts[donor] = parts[donor][0], parts[donor][1:]
        parts[empty] = np.array([moved], dtype=np.int64)
    return parts
