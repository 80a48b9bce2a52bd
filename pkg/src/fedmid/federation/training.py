"""Client-side local training for one communication round."""

from dataclasses import dataclass

import numpy as np

from ..engine import SGD, BnMode, cross_entropy, flatten_params, unflatten_params


@dataclass
class Hyperparams:
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-5
    batch_size: int = 64


def minibatches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def local_train(
    model,
    images,
    labels,
    global_params,
    epochs,
    hp,
    rng,
    variant="fedavg",
    prox_mu=0.0,
    regularizer=None,
):
    """Train from the global parameters and return the update delta.

    ``model`` is a scratch instance matching the global layout; it is
    overwritten with the global parameters before training. Under the
    "fedprox" variant a proximal pull of strength ``prox_mu`` toward the
    global parameters is applied after every step via its exact proximal
    map, which stays stable for arbitrarily large ``prox_mu`` (the update
    contracts to zero as mu grows). ``regularizer``, when given, is called
    once per minibatch after the loss backward to accumulate extra
    gradients (adaptive attackers hook in here).
    """
    if images.shape[0] == 0:
        raise ValueError("client dataset is empty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    unflatten_params(model, global_params)
    use_prox = variant == "fedprox" and prox_mu > 0
    if use_prox:
        anchors = {
            (i, name): p.copy()
            for i, lay in enumerate(model.layers)
            for name, p in lay.params.items()
        }
        shrink = 1.0 / (1.0 + hp.lr * prox_mu)
    opt = SGD(hp.lr, hp.momentum, hp.weight_decay)
    losses = []
    for _ in range(epochs):
        for batch_idx in minibatches(images.shape[0], hp.batch_size, rng):
            x = images[batch_idx]
            y = labels[batch_idx]
            logits = model.forward(x, bn_mode=BnMode.CURRENT_BATCH, update_running=True)
            loss, dlogits = cross_entropy(logits, y)
            model.zero_grads()
            model.backward(dlogits)
            if regularizer is not None:
                loss += regularizer(model)
            opt.step(model)
            if use_prox:
                for (i, name), anchor in anchors.items():
                    p = model.layers[i].params[name]
                    p[...] = anchor + (p - anchor) * shrink
            losses.append(loss)
    delta = flatten_params(model) - global_params
    return delta, float(np.mean(losses))
