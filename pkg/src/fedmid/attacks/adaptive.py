"""Defense-aware attack: pull the attacker's intermediate outputs toward the
global model's on a synthetic probe, so relational comparisons look benign."""

import numpy as np

from ..engine import BnMode


def probe_activations(model, probe, taps=None):
    """Tap embeddings of the probe under current-batch statistics."""
    acts = model.forward_with_taps(probe, BnMode.CURRENT_BATCH)
    if taps is None:
        return list(acts.embeddings)
    index = {tap: emb for tap, emb in zip(acts.taps, acts.embeddings)}
    return [index[t] for t in taps]


def adaptive_regularizer(probe, global_model, local_model, taps=None):
    """Mean per-sample L2 gap between the two models' tap embeddings.

    Both models are evaluated under current-batch statistics; the value is
    summed over the configured tap set and is symmetric in the two models.
    """
    if global_model.taps != local_model.taps or global_model.input_shape != local_model.input_shape:
        raise ValueError("adaptive regularizer requires identical architectures")
    ref = probe_activations(global_model, probe, taps)
    own = probe_activations(local_model, probe, taps)
    m = probe.shape[0]
    total = 0.0
    for z_ref, z_own in zip(ref, own):
        gaps = np.linalg.norm((z_own - z_ref).astype(np.float64), axis=1)
        total += float(gaps.sum()) / m
    return total


def regularizer_backward(local_model, probe, ref_embeddings, taps=None):
    """Accumulate d(regularizer)/d(local params) into the model gradients.

    ``ref_embeddings`` are the global model's tap activations for the same
    probe (constant w.r.t. the attacker). Returns the regularizer value.
    """
    acts = local_model.forward_with_taps(probe, BnMode.CURRENT_BATCH, keep_cache=True)
    selected = dict(zip(acts.taps, range(len(acts.embeddings))))
    use_taps = list(acts.taps) if taps is None else list(taps)
    m = probe.shape[0]
    total = 0.0
    tap_grads = [None] * len(acts.taps)
    for tap, ref in zip(use_taps, ref_embeddings):
        pos = selected[tap]
        own = acts.embeddings[pos]
        diff = (own - ref).astype(np.float64)
        norms = np.linalg.norm(diff, axis=1)
        total += float(norms.sum()) / m
        safe = np.where(norms > 0, norms, 1.0)
        grad = diff / safe[:, None] / m  # zero rows stay zero (flat point)
        tap_grads[pos] = grad.astype(own.dtype)
    local_model.backward_from_taps(tap_grads)
    return total
