"""Dirichlet partitioning: conservation, determinism, degenerate repairs."""

import numpy as np
import pytest

from fedmid.federation import PartitionSpec, dirichlet_partition


def balanced_labels(n_classes, per_class):
    return np.repeat(np.arange(n_classes), per_class)


def test_huge_beta_approaches_uniform():
    # multinomial assignment keeps O(1/sqrt(n)) noise, so the 5% band needs
    # a reasonably large per-class count
    labels = balanced_labels(10, 10_000)
    parts = dirichlet_partition(labels, PartitionSpec(n_clients=5, beta=1e6, n_classes=10, seed=1))
    for part in parts:
        hist = np.bincount(labels[part], minlength=10)
        expected = part.size / 10
        assert np.abs(hist - expected).max() / expected < 0.05


def test_single_client_rejected():
    with pytest.raises(ValueError):
        PartitionSpec(n_clients=1, beta=0.5, n_classes=4, seed=0)


def test_nonpositive_beta_rejected():
    with pytest.raises(ValueError):
        PartitionSpec(n_clients=4, beta=0.0, n_classes=4, seed=0)


def test_dataset_smaller_than_clients_rejected():
    with pytest.raises(ValueError):
        dirichlet_partition(np.array([0, 1]), PartitionSpec(n_clients=3, beta=1.0, n_classes=2, seed=0))


def test_partition_reproducible_bit_identically():
    labels = balanced_labels(10, 1000)
    spec = PartitionSpec(n_clients=20, beta=0.5, n_classes=10, seed=42)
    parts_a = dirichlet_partition(labels, spec)
    parts_b = dirichlet_partition(labels, spec)
    assert len(parts_a) == len(parts_b) == 20
    for a, b in zip(parts_a, parts_b):
        np.testing.assert_array_equal(a, b)


def test_partition_conserves_and_is_disjoint():
    labels = balanced_labels(4, 500)
    parts = dirichlet_partition(labels, PartitionSpec(n_clients=10, beta=0.5, n_classes=4, seed=7))
    merged = np.concatenate(parts)
    assert merged.size == labels.size
    assert np.unique(merged).size == labels.size
    assert all(p.size >= 1 for p in parts)


def test_empty_clients_repaired_under_extreme_skew():
    # tiny dataset + tiny beta makes empty draws overwhelmingly likely
    labels = balanced_labels(2, 4)
    for seed in range(25):
        parts = dirichlet_partition(
            labels, PartitionSpec(n_clients=4, beta=0.01, n_classes=2, seed=seed)
        )
        assert all(p.size >= 1 for p in parts)
        merged = np.concatenate(parts)
        assert np.unique(merged).size == labels.size
