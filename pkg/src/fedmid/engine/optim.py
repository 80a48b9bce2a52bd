"""Momentum SGD and the cross-entropy objective."""

import numpy as np

from .layers import BnMode
from .model import NonFiniteError


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits.

    Labels must be integers in [0, n_classes). The loss is accumulated in
    float64; the returned gradient matches the logits dtype.
    """
    n, n_classes = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch size {n}")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"label out of range [0, {n_classes})")
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    loss = float((logsumexp - z[np.arange(n), labels]).mean())
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite loss")
    probs = np.exp(z - logsumexp[:, None])
    probs[np.arange(n), labels] -= 1.0
    dlogits = (probs / n).astype(logits.dtype)
    return loss, dlogits


class SGD:
    """SGD with momentum and decoupled-from-nothing classic weight decay.

    The decay term is added to the gradient before the momentum update, so
    with momentum 0 and zero gradients each weight shrinks by lr*wd exactly.
    Only trainable parameters are touched; batchnorm running statistics are
    not optimizer state.
    """

    def __init__(self, lr, momentum=0.0, weight_decay=0.0):
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self._velocity = {}

    def step(self, model):
        for idx, lay in enumerate(model.layers):
            for name, p in lay.params.items():
                g = lay.grads[name]
                if self.weight_decay:
                    g = g + self.weight_decay * p
                key = (idx, name)
                if self.momentum:
                    v = self._velocity.get(key)
                    v = g if v is None else self.momentum * v + g
                    self._velocity[key] = v
                else:
                    v = g
                p -= self.lr * v
                if not np.all(np.isfinite(p)):
                    raise NonFiniteError(f"non-finite parameter after step: layer {idx} {name}")


def backward_sgd_step(model, batch, labels, lr, momentum=0.0, weight_decay=0.0, optimizer=None):
    """One training step: forward (batch statistics), backward, SGD update.

    Batchnorm layers run on the current batch statistics and update their
    running statistics, as in training mode. Returns the mean batch loss.
    """
    logits = model.forward(batch, bn_mode=BnMode.CURRENT_BATCH, update_running=True)
    loss, dlogits = cross_entropy(logits, labels)
    model.zero_grads()
    model.backward(dlogits)
    opt = optimizer or SGD(lr, momentum, weight_decay)
    opt.step(model)
    return loss
