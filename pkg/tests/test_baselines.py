"""Baseline aggregation rules against independent oracles and stress inputs."""

import itertools

import numpy as np
import pytest

from fedmid.aggregators import (
    bucketize,
    coordinate_median,
    dnc,
    fedcpa_weights,
    fltrust_combine,
    foolsgold_weights,
    geometric_median,
    jaccard,
    krum_scores,
    multi_krum,
    residual_base,
    trimmed_mean,
)


# ------------------------------ oracles ------------------------------ #

def krum_score_oracle(updates, f):
    updates = np.asarray(updates, dtype=np.float64)
    n = len(updates)
    k = int(np.clip(n - f - 2, 1, n - 1))
    scores = []
    for i in range(n):
        dists = sorted(((updates[j] - updates[i]) ** 2).sum() for j in range(n) if j != i)
        scores.append(sum(dists[:k]))
    return np.array(scores)


def geometric_median_objective(points, v):
    return np.linalg.norm(points - v, axis=1).sum()


def grid_search_geometric_median(points, steps=60):
    lo = points.min(axis=0) - 0.1
    hi = points.max(axis=0) + 0.1
    axes = [np.linspace(lo[d], hi[d], steps) for d in range(points.shape[1])]
    best, best_obj = None, np.inf
    for candidate in itertools.product(*axes):
        obj = geometric_median_objective(points, np.array(candidate))
        if obj < best_obj:
            best, best_obj = candidate, obj
    return np.array(best), best_obj


def dnc_score_oracle(updates):
    centered = updates - updates.mean(axis=0)
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    top = eigvecs[:, -1]
    return (centered @ top) ** 2


# --------------------------- coordinate-wise --------------------------- #

def test_median_examples():
    np.testing.assert_array_equal(coordinate_median([[1, 2], [3, 0], [5, 4]]), [3, 2])
    np.testing.assert_array_equal(coordinate_median([[7.0, -1.0]]), [7.0, -1.0])
    np.testing.assert_array_equal(coordinate_median([[0, 0], [2, 2]]), [1, 1])


def test_trimmed_mean_examples():
    values = np.array([[1.0], [2.0], [3.0], [4.0], [100.0]])
    assert trimmed_mean(values, 1)[0] == 3.0
    np.testing.assert_allclose(trimmed_mean(values, 0), values.mean(axis=0))
    same = np.full((5, 3), 2.5)
    np.testing.assert_array_equal(trimmed_mean(same, 2), [2.5, 2.5, 2.5])
    with pytest.raises(ValueError):
        trimmed_mean(values, 3)


# ------------------------------- krum ------------------------------- #

def test_krum_outlier_excluded(rng):
    base = rng.normal(size=6)
    updates = np.stack([base, base, base, base, base + 50.0])
    combined, selected, _ = multi_krum(updates, f=1, m=4)
    assert 4 not in selected
    np.testing.assert_allclose(combined, base)


def test_krum_identical_updates(rng):
    updates = np.tile(rng.normal(size=4), (5, 1))
    combined, _, _ = multi_krum(updates, f=1, m=3)
    np.testing.assert_allclose(combined, updates[0])


def test_classical_krum_matches_exhaustive_oracle(rng):
    for _ in range(20):
        updates = rng.normal(size=(5, 7))
        combined, selected, scores = multi_krum(updates, f=1, m=1)
        oracle = krum_score_oracle(updates, 1)
        np.testing.assert_allclose(scores, oracle, rtol=1e-10)
        assert selected[0] == np.argmin(oracle)
        np.testing.assert_allclose(combined, updates[np.argmin(oracle)])


def test_krum_needs_two_updates(rng):
    with pytest.raises(ValueError):
        krum_scores(rng.normal(size=(1, 3)), 0)


# ------------------------------- rfa ------------------------------- #

def test_geometric_median_symmetric_cross():
    points = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    median, _ = geometric_median(points)
    np.testing.assert_allclose(median, [0.0, 0.0], atol=1e-5)


def test_geometric_median_single_point():
    median, _ = geometric_median(np.array([[3.0, -2.0, 1.0]]))
    np.testing.assert_allclose(median, [3.0, -2.0, 1.0], atol=1e-9)


def test_geometric_median_matches_grid_search(rng):
    points = rng.normal(size=(5, 3))
    median, trace = geometric_median(points, max_iter=200)
    _, grid_obj = grid_search_geometric_median(points)
    assert geometric_median_objective(points, median) <= grid_obj + 1e-4


def test_weiszfeld_objective_non_increasing(rng):
    for _ in range(10):
        points = rng.normal(size=(6, 4)) * rng.uniform(0.1, 10)
        _, trace = geometric_median(points)
        diffs = np.diff(trace)
        assert diffs.max() <= 1e-9


# ------------------------------- dnc ------------------------------- #

def test_dnc_removes_colinear_outliers(rng):
    benign = rng.normal(size=(8, 3)) * 0.01
    direction = np.array([1.0, 2.0, -1.0])
    outliers = np.stack([direction * 30.0, direction * 31.0])
    updates = np.concatenate([benign, outliers])
    combined, survivors = dnc(updates, n_mal=2, sub_dim=10)
    assert 8 not in survivors and 9 not in survivors
    oracle = dnc_score_oracle(updates)
    assert set(np.argsort(oracle)[-2:]) == {8, 9}
    np.testing.assert_allclose(combined, benign.mean(axis=0))


def test_dnc_scores_match_eigh_oracle(rng):
    updates = rng.normal(size=(6, 3))
    from fedmid.aggregators.dnc import dnc_scores

    np.testing.assert_allclose(dnc_scores(updates), dnc_score_oracle(updates), rtol=1e-8)


def test_dnc_identical_updates_mean_preserved(rng):
    updates = np.tile(rng.normal(size=5), (6, 1))
    combined, survivors = dnc(updates, n_mal=1)
    np.testing.assert_allclose(combined, updates[0])
    assert len(survivors) == 5


def test_dnc_subsample_identity_when_dim_small(rng):
    updates = rng.normal(size=(5, 4))
    a, _ = dnc(updates, n_mal=1, sub_dim=4, rng=np.random.default_rng(0))
    b, _ = dnc(updates, n_mal=1, sub_dim=100, rng=np.random.default_rng(1))
    np.testing.assert_allclose(a, b)


def test_dnc_rejects_removal_of_everything(rng):
    updates = rng.normal(size=(3, 4))
    with pytest.raises(ValueError):
        dnc(updates, n_mal=3)


# ----------------------------- bucketing ----------------------------- #

def test_bucketize_sizes_and_determinism(rng):
    updates = rng.normal(size=(4, 6))
    means_a = bucketize(updates, 2, np.random.default_rng(5))
    means_b = bucketize(updates, 2, np.random.default_rng(5))
    assert means_a.shape == (2, 6)
    np.testing.assert_array_equal(means_a, means_b)


def test_bucket_s1_is_inner_on_raw_updates(rng):
    updates = rng.normal(size=(5, 4))
    means = bucketize(updates, 1, np.random.default_rng(0))
    np.testing.assert_allclose(np.sort(means, axis=0), np.sort(updates, axis=0))


def test_bucket_sn_is_global_mean(rng):
    updates = rng.normal(size=(5, 4))
    means = bucketize(updates, 5, np.random.default_rng(0))
    assert means.shape == (1, 4)
    np.testing.assert_allclose(means[0], updates.mean(axis=0))
    median, _ = geometric_median(means)
    np.testing.assert_allclose(median, updates.mean(axis=0))


# ----------------------------- foolsgold ----------------------------- #

def test_foolsgold_sybils_downweighted_over_rounds(rng):
    """Two attackers repeat identical updates; three benign stay diverse."""
    histories = np.zeros((5, 20))
    attacker_update = rng.normal(size=20)
    for _ in range(5):
        histories[0] += attacker_update
        histories[1] += attacker_update
        for b in (2, 3, 4):
            histories[b] += rng.normal(size=20)
    weights = foolsgold_weights(histories)
    assert max(weights[0], weights[1]) < min(weights[2], weights[3], weights[4])


def test_foolsgold_orthogonal_histories_equal_weights():
    histories = np.eye(4)
    weights = foolsgold_weights(histories)
    assert np.allclose(weights, weights[0])
    assert np.all(weights >= 0) and np.all(weights <= 1)


def test_foolsgold_single_client_weight_one():
    np.testing.assert_array_equal(foolsgold_weights(np.ones((1, 5))), [1.0])


def test_foolsgold_zero_norm_history_not_penalized(rng):
    histories = np.vstack([np.zeros(6), rng.normal(size=(3, 6))])
    weights = foolsgold_weights(histories)
    assert weights[0] > 0


# ---------------------------- residual base ---------------------------- #

def test_residual_base_identical_updates(rng):
    updates = np.tile(rng.normal(size=6), (5, 1))
    np.testing.assert_allclose(residual_base(updates), updates[0])


def test_residual_base_outlier_within_agreeing_range(rng):
    agree = rng.normal(size=(9, 4))
    outlier = np.full((1, 4), 25.0)
    updates = np.concatenate([agree, outlier])
    combined = residual_base(updates)
    lo, hi = agree.min(axis=0), agree.max(axis=0)
    median_oracle = np.median(updates, axis=0)
    assert np.all(combined >= lo) and np.all(combined <= hi)
    assert np.all(np.abs(combined - median_oracle) <= (hi - lo) + 1e-6)


def test_residual_base_needs_three(rng):
    with pytest.raises(ValueError):
        residual_base(rng.normal(size=(2, 3)))


def test_residual_confidences_bounded(rng):
    from fedmid.aggregators.residual import residual_confidences

    conf = residual_confidences(rng.normal(size=(7, 9)))
    assert np.all((conf == 1.0) | (conf == 0.05))


# ------------------------------ fltrust ------------------------------ #

def test_fltrust_perfect_alignment(rng):
    g0 = rng.normal(size=8)
    updates = np.tile(g0, (4, 1))
    combined, trust, _ = fltrust_combine(updates, g0)
    np.testing.assert_allclose(combined, g0, rtol=1e-10)
    np.testing.assert_allclose(trust, 1.0)


def test_fltrust_negative_cosine_clipped(rng):
    g0 = np.array([1.0, 0.0])
    combined, trust, _ = fltrust_combine(np.array([[-1.0, 0.0]]), g0)
    np.testing.assert_array_equal(combined, [0.0, 0.0])
    assert trust[0] == 0.0


def test_fltrust_weights_example():
    # cos 1 and cos 0.5 with unit norms -> weights 2/3 and 1/3
    g0 = np.array([1.0, 0.0])
    updates = np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    combined, trust, weights = fltrust_combine(updates, g0)
    np.testing.assert_allclose(weights, [2 / 3, 1 / 3])
    oracle = (2 / 3) * updates[0] + (1 / 3) * updates[1]
    np.testing.assert_allclose(combined, oracle)


def test_fltrust_zero_server_norm_rejected():
    with pytest.raises(ValueError):
        fltrust_combine(np.ones((2, 3)), np.zeros(3))


# ------------------------------ fedcpa ------------------------------ #

def test_jaccard_examples():
    assert jaccard([1, 2, 3], [1, 2, 3]) == 1.0
    assert jaccard([1, 2], [3, 4]) == 0.0


def test_fedcpa_identical_clients_equal_weights(rng):
    delta = rng.normal(size=10)
    theta = rng.normal(size=10)
    weights, scores = fedcpa_weights(np.tile(delta, (4, 1)), np.tile(theta, (4, 1)), k_frac=0.2)
    assert np.allclose(weights, 0.5)  # degenerate min-max
    assert np.allclose(scores, 1.0)


def test_fedcpa_disjoint_topk_gets_lowest_weight():
    dim, k_frac = 10, 0.2
    base_imp = np.zeros(dim)
    base_imp[[0, 1]] = 10.0  # top-2 at coords 0,1
    base_imp[[8, 9]] = 0.0
    base_imp[2:8] = 1.0
    odd_imp = np.zeros(dim)
    odd_imp[[4, 5]] = 10.0  # disjoint top-2
    odd_imp[2:4] = 1.0
    odd_imp[6:8] = 1.0
    odd_imp[[0, 1]] = 0.5
    thetas = np.ones((4, dim))
    deltas = np.vstack([base_imp, base_imp, base_imp, odd_imp])  # |delta*theta| = imp
    weights, scores = fedcpa_weights(deltas, thetas, k_frac=k_frac)
    assert np.argmin(weights) == 3
    assert weights[3] == 0.0  # min-max puts the odd one at the bottom
    # hand Jaccard oracle for the base/odd pair top sets: disjoint -> 0
    assert jaccard([0, 1], [4, 5]) == 0.0


def test_fedcpa_k_too_large_rejected(rng):
    with pytest.raises(ValueError):
        fedcpa_weights(rng.normal(size=(3, 10)), rng.normal(size=(3, 10)), k_frac=0.9)


# --------------------------- shared properties --------------------------- #

def permute(updates, perm):
    return updates[perm]


@pytest.mark.parametrize("rule", ["median", "trimmed", "krum", "rfa", "residual", "dnc"])
def test_delta_rules_permutation_invariant(rule, rng):
    updates = rng.normal(size=(7, 12))
    perm = rng.permutation(7)

    def run(u):
        if rule == "median":
            return coordinate_median(u)
        if rule == "trimmed":
            return trimmed_mean(u, 2)
        if rule == "krum":
            return multi_krum(u, f=2, m=3)[0]
        if rule == "rfa":
            return geometric_median(u)[0]
        if rule == "residual":
            return residual_base(u)
        return dnc(u, n_mal=2, rng=np.random.default_rng(0))[0]

    np.testing.assert_allclose(run(updates), run(permute(updates, perm)), rtol=1e-10, atol=1e-12)


def test_weight_rules_permutation_equivariant(rng):
    deltas = rng.normal(size=(5, 40))
    thetas = rng.normal(size=(5, 40))
    perm = rng.permutation(5)
    w, _ = fedcpa_weights(deltas, thetas, k_frac=0.05)
    w_perm, _ = fedcpa_weights(deltas[perm], thetas[perm], k_frac=0.05)
    np.testing.assert_allclose(w_perm, w[perm], atol=1e-12)

    histories = rng.normal(size=(5, 40))
    fg = foolsgold_weights(histories)
    fg_perm = foolsgold_weights(histories[perm])
    np.testing.assert_allclose(fg_perm, fg[perm], atol=1e-12)


def test_breakdown_outliers_stay_bounded(rng):
    """<= 20% identical extreme outliers cannot drag robust rules outside
    twice the benign bounding box."""
    n, dim = 10, 15
    benign = rng.normal(size=(8, dim))
    outlier = rng.normal(size=dim)
    outlier *= 100.0 * np.abs(benign).max() / np.abs(outlier).max()
    updates = np.concatenate([benign, np.tile(outlier, (2, 1))])
    lo, hi = benign.min(axis=0), benign.max(axis=0)
    center, half = (lo + hi) / 2, (hi - lo) / 2
    for name, combined in (
        ("median", coordinate_median(updates)),
        ("trimmed", trimmed_mean(updates, 2)),
        ("krum", multi_krum(updates, f=2, m=6)[0]),
        ("rfa", geometric_median(updates)[0]),
        ("dnc", dnc(updates, n_mal=2, rng=np.random.default_rng(3))[0]),
    ):
        assert np.all(np.abs(combined - center) <= 2 * half + 1e-9), name
