"""Divergence diagnostics: parameter distances vs relational distances.

Several clients train independently from identical initialization on the
same data (attackers optionally label-flip theirs). Per epoch the report
tracks the mean pairwise distance between parameter vectors and between
relational probe signatures, each relative to its value after the first
epoch, plus the benign-intra / benign-to-malicious distance ratios and the
per-layer variance of the final updates.
"""

import numpy as np

from ..attacks import poison_untargeted
from ..engine import build_model, flatten_params
from ..federation import Hyperparams, PartitionSpec, local_train
from ..relational import layer_distance, model_distance_matrices, probe_batch
from ..rng import STREAM_ATTACK, STREAM_INIT, STREAM_TRAIN, child_rng
from .data import make_desk_data


def _mean_pairwise(values, pairs):
    return float(np.mean([values[i][j] for i, j in pairs])) if pairs else float("nan")


def _pairs(ids_a, ids_b=None):
    if ids_b is None:
        return [(i, j) for n, i in enumerate(ids_a) for j in ids_a[n + 1 :]]
    return [(i, j) for i in ids_a for j in ids_b]


def diagnose_divergence(cfg, epochs=10, shuffle_per_client=True):
    """Train cfg.n_clients copies side by side and compare the two metrics."""
    train, _ = make_desk_data(
        cfg.n_classes,
        cfg.image_size,
        cfg.channels,
        cfg.train_size,
        cfg.test_size,
        cfg.noise_sigma,
        cfg.effective_data_seed,
    )
    n = cfg.n_clients
    n_attackers = int(round(n * cfg.attacker_ratio)) if cfg.scenario != "none" else 0
    attacker_ids = list(range(n - n_attackers, n))
    benign_ids = [i for i in range(n) if i not in attacker_ids]

    template = build_model(
        cfg.model,
        (cfg.channels, cfg.image_size, cfg.image_size),
        train.n_classes,
        child_rng(cfg.master_seed, STREAM_INIT),
    )
    start = flatten_params(template)
    hp = Hyperparams(cfg.lr, cfg.momentum, cfg.weight_decay, cfg.batch_size)
    probe = probe_batch(template.input_shape, cfg.m_probe, cfg.master_seed)

    datasets = {}
    for cid in range(n):
        images, labels = train.images, train.labels
        if cid in attacker_ids:
            rng = child_rng(cfg.master_seed, STREAM_ATTACK, cid)
            images, labels = poison_untargeted(
                images, labels, cfg.effective_gamma_p, train.n_classes, rng
            )
        datasets[cid] = (images, labels)

    models = {cid: template.copy() for cid in range(n)}
    params = {cid: start for cid in range(n)}
    report = {
        "epochs": [],
        "param_distance": [],
        "relational_distance": [],
        "param_relative": [],
        "relational_relative": [],
        "param_ratio": [],
        "relational_ratio": [],
    }
    for epoch in range(epochs):
        for cid in range(n):
            rng_key = (epoch, cid) if shuffle_per_client else (epoch,)
            rng = child_rng(cfg.master_seed, STREAM_TRAIN, *rng_key)
            images, labels = datasets[cid]
            delta, _ = local_train(models[cid], images, labels, params[cid], 1, hp, rng)
            params[cid] = params[cid] + delta
        vectors = {cid: params[cid].values.astype(np.float64) for cid in range(n)}
        param_dist = {
            i: {j: float(np.linalg.norm(vectors[i] - vectors[j])) for j in range(n)}
            for i in range(n)
        }
        mats = {cid: model_distance_matrices(models[cid], probe) for cid in range(n)}
        rel_dist = {
            i: {
                j: float(
                    np.mean([layer_distance(a, b) for a, b in zip(mats[i], mats[j])])
                )
                for j in range(n)
            }
            for i in range(n)
        }
        bb = _pairs(benign_ids)
        bm = _pairs(benign_ids, attacker_ids)
        p_bb, p_bm = _mean_pairwise(param_dist, bb), _mean_pairwise(param_dist, bm)
        r_bb, r_bm = _mean_pairwise(rel_dist, bb), _mean_pairwise(rel_dist, bm)
        report["epochs"].append(epoch + 1)
        report["param_distance"].append(p_bb)
        report["relational_distance"].append(r_bb)
        report["param_ratio"].append(p_bb / p_bm if bm else float("nan"))
        report["relational_ratio"].append(r_bb / r_bm if bm else float("nan"))

    base_p = report["param_distance"][0]
    base_r = report["relational_distance"][0]
    report["param_relative"] = [
        d / base_p if base_p > 0 else 0.0 for d in report["param_distance"]
    ]
    report["relational_relative"] = [
        d / base_r if base_r > 0 else 0.0 for d in report["relational_distance"]
    ]

    # per-layer variance of the final updates across clients (structure scan)
    layer_variance = {}
    for idx, name, offset, shape, trainable in start.layout:
        if not trainable:
            continue
        size = int(np.prod(shape))
        seg = np.stack(
            [vectors[cid][offset : offset + size] - start.values[offset : offset + size].astype(np.float64) for cid in range(n)]
        )
        layer_variance[f"layer{idx}.{name}"] = float(seg.var())
    report["layer_update_variance"] = layer_variance
    report["attackers"] = attacker_ids
    return report
