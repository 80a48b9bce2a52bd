"""Relational signatures of a model's functional mapping.

A model's behaviour on a probe batch is summarized per tap layer as the
matrix of pairwise Euclidean distances between the probe samples' embeddings.
Two models are compared by the mean absolute difference between their
matrices, which is invariant to parameter permutations that leave the
function unchanged.
"""

import numpy as np

from .engine import BnMode
from .kernels import pairwise_distances
from .rng import STREAM_PROBE, child_rng


def probe_batch(input_shape, m_samples, seed, round_index=0):
    """Standard-normal synthetic probe, regenerated per (seed, round)."""
    if m_samples < 2:
        raise ValueError("probe needs at least 2 samples")
    rng = child_rng(seed, STREAM_PROBE, round_index)
    return rng.standard_normal(size=(m_samples,) + tuple(input_shape)).astype(np.float32)


def build_distance_matrix(embeddings):
    """M x M Euclidean distances between flattened sample embeddings."""
    embeddings = np.asarray(embeddings)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise ValueError("need at least 2 embeddings of equal dimension")
    return pairwise_distances(embeddings)


def layer_distance(mat_a, mat_b):
    """Mean absolute difference between two distance matrices."""
    if mat_a.shape != mat_b.shape:
        raise ValueError(f"distance matrix shapes differ: {mat_a.shape} vs {mat_b.shape}")
    return float(np.abs(mat_a - mat_b).mean())


def model_distance_matrices(model, probe, mode=BnMode.CURRENT_BATCH):
    """One distance matrix per tap layer for the given model and probe."""
    acts = model.forward_with_taps(probe, mode)
    return [build_distance_matrix(emb) for emb in acts.embeddings]


def relational_distance(mats_a, mats_b):
    """Mean layer distance across taps; the diagnostics' scalar comparison."""
    if len(mats_a) != len(mats_b):
        raise ValueError("tap counts differ")
    return float(np.mean([layer_distance(a, b) for a, b in zip(mats_a, mats_b)]))
