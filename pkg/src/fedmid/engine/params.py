"""Flat parameter vectors and their layout descriptors.

A ParamVector carries every model array — trainable parameters and batchnorm
running statistics alike — as one flat float vector plus a layout mapping
(layer index, array name) to (offset, shape). Two models built from the same
architecture share an identical layout, which makes client updates directly
comparable and aggregatable.
"""

from dataclasses import dataclass

import numpy as np

RUNNING_VAR_FLOOR = 1e-12


def _entries(model):
    for idx, lay in enumerate(model.layers):
        for name in sorted(lay.params):
            yield idx, name, lay.params[name], True
        for name in sorted(lay.state):
            yield idx, name, lay.state[name], False


def build_layout(model):
    """Layout tuple of (layer_idx, name, offset, shape, trainable)."""
    layout = []
    offset = 0
    for idx, name, arr, trainable in _entries(model):
        layout.append((idx, name, offset, arr.shape, trainable))
        offset += arr.size
    return tuple(layout)


@dataclass
class ParamVector:
    """Flat view of all model arrays; supports elementwise arithmetic."""

    values: np.ndarray
    layout: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values)

    @property
    def size(self):
        return self.values.size

    def check_layout(self, other):
        if self.layout != other.layout:
            raise ValueError("parameter vectors have mismatched layouts")

    def copy(self):
        return ParamVector(self.values.copy(), self.layout)

    def __add__(self, other):
        self.check_layout(other)
        return ParamVector(self.values + other.values, self.layout)

    def __sub__(self, other):
        self.check_layout(other)
        return ParamVector(self.values - other.values, self.layout)

    def __mul__(self, scalar):
        return ParamVector(self.values * scalar, self.layout)

    __rmul__ = __mul__

    def norm(self):
        return float(np.linalg.norm(self.values.astype(np.float64)))

    def segment(self, layer_idx, name):
        for idx, nm, offset, shape, _ in self.layout:
            if idx == layer_idx and nm == name:
                return self.values[offset : offset + int(np.prod(shape))].reshape(shape)
        raise KeyError((layer_idx, name))


def flatten_params(model):
    """Copy every model array into a fresh ParamVector."""
    parts = [arr.reshape(-1) for _, _, arr, _ in _entries(model)]
    return ParamVector(np.concatenate(parts), build_layout(model))


def unflatten_params(model, vector):
    """Write a ParamVector back into the model arrays (in place).

    Batchnorm running variances are floored at a tiny positive value so that
    adversarial aggregates cannot leave the model in an unusable state.
    """
    layout = build_layout(model)
    if layout != vector.layout:
        raise ValueError("parameter vector layout does not match model architecture")
    values = vector.values
    pos = 0
    for idx, name, arr, _ in _entries(model):
        chunk = values[pos : pos + arr.size].reshape(arr.shape).astype(arr.dtype, copy=True)
        if name == "running_var":
            np.maximum(chunk, RUNNING_VAR_FLOOR, out=chunk)
        target = model.layers[idx].params if name in model.layers[idx].params else model.layers[idx].state
        target[name] = chunk
        pos += arr.size
    return model
