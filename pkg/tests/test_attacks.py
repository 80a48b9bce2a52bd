"""Poisoning transforms, omniscient calibration, adaptive regularizer."""

import numpy as np
import pytest
from scipy.stats import chisquare

from fedmid.attacks import (
    AttackConfig,
    TriggerPatch,
    adaptive_regularizer,
    benign_statistics,
    lie_calibrate,
    poison_targeted,
    poison_untargeted,
    probe_activations,
    regularizer_backward,
    stamp_trigger,
)
from fedmid.engine import BnMode, ParamVector, build_model, flatten_params, unflatten_params


def toy_dataset(rng, n=100, n_classes=10, hw=16):
    images = rng.normal(size=(n, 1, hw, hw)).astype(np.float32)
    labels = rng.integers(0, n_classes, size=n)
    return images, labels


def test_full_flip_changes_every_label(rng):
    images, labels = toy_dataset(rng)
    _, flipped = poison_untargeted(images, labels, 1.0, 10, rng)
    assert np.all(flipped != labels)


def test_minimum_one_sample_flipped(rng):
    images, labels = toy_dataset(rng, n=50)
    out_images, flipped = poison_untargeted(images, labels, 1e-9, 10, rng)
    assert (flipped != labels).sum() == 1
    np.testing.assert_array_equal(out_images, images)


def test_flip_count_is_floor_of_fraction(rng):
    images, labels = toy_dataset(rng, n=100)
    for gamma, expected in ((0.8, 80), (0.5, 50), (0.013, 1)):
        _, flipped = poison_untargeted(images, labels, gamma, 10, rng)
        assert (flipped != labels).sum() == expected


def test_single_class_label_space_rejected(rng):
    images, labels = toy_dataset(rng, n_classes=1)
    with pytest.raises(ValueError):
        poison_untargeted(images, labels * 0, 0.5, 1, rng)


def test_flipped_labels_uniform_over_alternatives(rng):
    n = 10_000
    images = np.zeros((n, 1, 2, 2), dtype=np.float32)
    labels = np.full(n, 3)
    _, flipped = poison_untargeted(images, labels, 1.0, 10, rng)
    counts = np.bincount(flipped, minlength=10)
    assert counts[3] == 0
    result = chisquare(counts[np.arange(10) != 3])
    assert result.pvalue > 1e-3


def test_targeted_poison_stamps_and_retargets(rng):
    images, labels = toy_dataset(rng, n=100)
    patch = TriggerPatch(height=5, width=5, target_class=2)
    out_images, out_labels = poison_targeted(images, labels, 0.5, patch, rng)
    changed = np.flatnonzero(out_labels == 2)
    touched = np.any(out_images != images, axis=(1, 2, 3))
    assert touched.sum() <= 50  # some stamped images may equal originals only off-patch
    stamped = np.flatnonzero(
        np.all(out_images[:, :, -5:, -5:] == patch.values, axis=(1, 2, 3))
    )
    assert stamped.size == 50
    assert np.all(out_labels[stamped] == 2)
    untouched = np.setdiff1d(np.arange(100), stamped)
    np.testing.assert_array_equal(out_images[untouched], images[untouched])
    np.testing.assert_array_equal(out_labels[untouched], labels[untouched])


def test_targeted_poison_exact_count_small_images(rng):
    images = rng.normal(size=(100, 1, 16, 16)).astype(np.float32)
    labels = rng.integers(0, 4, size=100)
    patch = TriggerPatch(height=4, width=4, target_class=0)
    out_images, _ = poison_targeted(images, labels, 0.5, patch, rng)
    stamped = np.all(out_images[:, :, -4:, -4:] == patch.values, axis=(1, 2, 3))
    assert stamped.sum() == 50


def test_zero_pollution_ratio_rejected(rng):
    images, labels = toy_dataset(rng)
    with pytest.raises(ValueError):
        poison_targeted(images, labels, 0.0, TriggerPatch(target_class=0), rng)


def test_patch_larger_than_image_rejected(rng):
    images = np.zeros((3, 1, 4, 4), dtype=np.float32)
    with pytest.raises(ValueError):
        stamp_trigger(images, TriggerPatch(height=5, width=5, target_class=0))


def test_checkerboard_pattern():
    patch = TriggerPatch(height=3, width=3, target_class=0, hi=1.0, lo=0.0)
    np.testing.assert_array_equal(patch.values, [[1, 0, 1], [0, 1, 0], [1, 0, 1]])


def vec(values):
    return ParamVector(np.asarray(values, dtype=np.float32), (("v",),))


def test_lie_zero_z_returns_mean():
    mean, std = vec([1.0, -2.0]), vec([3.0, 4.0])
    np.testing.assert_array_equal(lie_calibrate(mean, std, 0.0).values, mean.values)


def test_lie_formula_example():
    out = lie_calibrate(vec([1.0, 1.0]), vec([2.0, 0.0]), 1.5)
    np.testing.assert_allclose(out.values, [4.0, 1.0])


def test_lie_negative_sign_via_config():
    cfg = AttackConfig(scenario="2u", z=1.5, lie_negate=True)
    out = lie_calibrate(vec([1.0, 1.0]), vec([2.0, 0.0]), cfg.signed_z)
    # coordinate oracle: mean - 1.5 * std
    np.testing.assert_allclose(out.values, [1.0 - 1.5 * 2.0, 1.0])


def test_lie_linear_in_z(rng):
    mean = vec(rng.normal(size=8))
    std = vec(np.abs(rng.normal(size=8)))
    d0, d1, d2 = (lie_calibrate(mean, std, z).values for z in (0.0, 0.7, 1.3))
    np.testing.assert_allclose(d1 + d2 - 2 * d0, (0.7 + 1.3) * std.values, rtol=1e-6)


def test_lie_rejects_negative_std():
    with pytest.raises(ValueError):
        lie_calibrate(vec([0.0]), vec([-1.0]), 1.0)


def test_benign_statistics_match_numpy(rng):
    updates = [vec(rng.normal(size=5)) for _ in range(4)]
    mean, std = benign_statistics(updates)
    stacked = np.stack([u.values for u in updates]).astype(np.float64)
    np.testing.assert_allclose(mean.values, stacked.mean(axis=0), rtol=1e-6)
    np.testing.assert_allclose(std.values, stacked.std(axis=0), rtol=1e-5)


def probe_pair(seed=0, variant="mlp"):
    rng = np.random.default_rng(seed)
    global_model = build_model(variant, (1, 4, 4), 3, rng, hidden=8)
    local_model = global_model.copy()
    probe = np.random.default_rng(77).normal(size=(6, 1, 4, 4)).astype(np.float32)
    return global_model, local_model, probe


def test_regularizer_zero_for_identical_models():
    global_model, local_model, probe = probe_pair()
    assert adaptive_regularizer(probe, global_model, local_model) == 0.0


def test_regularizer_decreases_with_perturbation_size():
    values = []
    for eps in (1e-1, 1e-2, 1e-3):
        global_model, local_model, probe = probe_pair()
        last = local_model.layers[-1]
        last.params["weight"] = last.params["weight"] + np.float32(eps)
        values.append(adaptive_regularizer(probe, global_model, local_model, taps=(local_model.taps[-1],)))
    assert values[0] > values[1] > values[2] > 0


def test_regularizer_symmetric_under_model_swap():
    global_model, local_model, probe = probe_pair()
    local_model.layers[-1].params["weight"] += np.float32(0.1)
    ab = adaptive_regularizer(probe, global_model, local_model)
    ba = adaptive_regularizer(probe, local_model, global_model)
    assert ab == pytest.approx(ba, rel=1e-6)


def test_regularizer_architecture_mismatch_rejected(rng):
    a = build_model("mlp", (1, 4, 4), 3, rng)
    b = build_model("mlp_nobn", (1, 4, 4), 3, rng)
    probe = rng.normal(size=(4, 1, 4, 4)).astype(np.float32)
    with pytest.raises(ValueError):
        adaptive_regularizer(probe, a, b)


def test_regularizer_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    global_model = build_model("mlp_nobn", (1, 3, 3), 3, rng, hidden=5, dtype=np.float64)
    local_model = build_model("mlp_nobn", (1, 3, 3), 3, np.random.default_rng(3), hidden=5, dtype=np.float64)
    probe = rng.normal(size=(5, 1, 3, 3))
    ref = probe_activations(global_model, probe)

    local_model.zero_grads()
    regularizer_backward(local_model, probe, ref)

    def value():
        return adaptive_regularizer(probe, global_model, local_model)

    h = 1e-6
    for lay in local_model.layers:
        for name, p in lay.params.items():
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = p[idx]
                p[idx] = orig + h
                fp = value()
                p[idx] = orig - h
                fm = value()
                p[idx] = orig
                numeric = (fp - fm) / (2 * h)
                analytic = lay.grads[name][idx]
                assert abs(analytic - numeric) <= 1e-7 + 1e-4 * (abs(analytic) + abs(numeric))


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(scenario="4t")
    with pytest.raises(ValueError):
        AttackConfig(scenario="1u", gamma_p=0.0)
    with pytest.raises(ValueError):
        AttackConfig(scenario="1t", trigger=None)
    with pytest.raises(ValueError):
        AttackConfig(scenario="2u", z=-1.0)
    cfg = AttackConfig(scenario="2t", trigger=TriggerPatch(target_class=1))
    assert cfg.targeted and cfg.omniscient and not cfg.adaptive
