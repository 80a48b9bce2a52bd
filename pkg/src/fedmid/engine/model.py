"""Layered model with intermediate tap points and multi-point backward."""

from dataclasses import dataclass

import numpy as np

from .layers import BnMode, Layer


class NonFiniteError(ArithmeticError):
    """An engine operation produced NaN or Inf."""


@dataclass
class ActivationSet:
    """Flattened per-sample embeddings exported at each tap point."""

    taps: tuple
    embeddings: list  # one (n_samples, dim) array per tap, last one the logits

    def __iter__(self):
        return iter(self.embeddings)

    def __len__(self):
        return len(self.embeddings)


class Model:
    """Ordered layer stack with designated tap points.

    Tap points are layer indices after which activations are exported; they
    must be strictly increasing and end at the output layer, so the logits
    are always part of the exported set.
    """

    def __init__(self, layers, taps, input_shape, n_classes):
        taps = tuple(taps)
        if not taps:
            raise ValueError("model needs at least one tap point")
        if list(taps) != sorted(set(taps)):
            raise ValueError(f"tap points must be strictly increasing, got {taps}")
        if taps[-1] != len(layers) - 1:
            raise ValueError("last tap point must be the output layer")
        self.layers = list(layers)
        self.taps = taps
        self.input_shape = tuple(input_shape)
        self.n_classes = n_classes

    def copy(self):
        return Model([lay.copy() for lay in self.layers], self.taps, self.input_shape, self.n_classes)

    def zero_grads(self):
        for lay in self.layers:
            lay.zero_grads()

    def _check_input(self, x):
        if x.ndim != len(self.input_shape) + 1 or x.shape[1:] != self.input_shape:
            raise ValueError(
                f"input shape {x.shape[1:]} does not match model input {self.input_shape}"
            )

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        """Run the stack and return the logits."""
        self._check_input(x)
        out = x
        for lay in self.layers:
            out = lay.forward(out, bn_mode=bn_mode, update_running=update_running)
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("non-finite logits in forward pass")
        return out

    def backward(self, dlogits):
        """Backpropagate from the logits; gradients accumulate in the layers."""
        g = dlogits
        for lay in reversed(self.layers):
            g = lay.backward(g)
        return g

    def backward_from_taps(self, tap_grads):
        """Backpropagate gradients injected at every tap point.

        ``tap_grads`` aligns with ``self.taps``; entries may be None. Each
        gradient is reshaped to the corresponding layer output and added to
        the stream flowing backwards from later layers.
        """
        grad_at = dict(zip(self.taps, tap_grads))
        g = None
        for idx in range(len(self.layers) - 1, -1, -1):
            inject = grad_at.get(idx)
            if inject is not None:
                inject = inject.reshape(self._out_shapes[idx])
                g = inject if g is None else g + inject
            if g is None:
                continue
            g = self.layers[idx].backward(g)
        return g

    def forward_with_taps(self, x, mode, keep_cache=False):
        """Forward pass exporting flattened activations at every tap point.

        Under CURRENT_BATCH statistics the batch must contain at least two
        samples and the stored running statistics are not modified. Conv
        feature maps are flattened channel-major into the embedding vectors.
        """
        self._check_input(x)
        if mode is BnMode.CURRENT_BATCH and x.shape[0] < 2:
            raise ValueError("CURRENT_BATCH statistics require a batch of at least 2 samples")
        out = x
        embeddings = []
        self._out_shapes = {}
        for idx, lay in enumerate(self.layers):
            out = lay.forward(out, bn_mode=mode, update_running=False)
            if idx in self.taps:
                emb = out.reshape(out.shape[0], -1)
                if not np.all(np.isfinite(emb)):
                    raise NonFiniteError(f"non-finite activation at tap {idx}")
                self._out_shapes[idx] = out.shape
                embeddings.append(emb if keep_cache else emb.copy())
        return ActivationSet(taps=self.taps, embeddings=embeddings)


def forward_with_taps(model, batch, mode=BnMode.CURRENT_BATCH):
    """Module-level convenience wrapper around Model.forward_with_taps."""
    return model.forward_with_taps(batch, mode)
