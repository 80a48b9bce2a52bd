"""Reference desk-scale architectures."""

import numpy as np

from .layers import AvgPool2D, BatchNorm, Conv2D, Dense, Flatten, ReLU
from .model import Model

VARIANTS = ("tinyblock", "mlp", "mlp_nobn")


def build_model(variant, input_shape, n_classes, rng, dtype=np.float32, hidden=64, channels=8):
    """Build a model variant with tap points after each block and at the logits.

    tinyblock: two conv/batchnorm/relu blocks with average pooling, then a
    dense classifier. mlp / mlp_nobn: two hidden dense blocks (with or
    without batchnorm) on flattened input.
    """
    if variant == "tinyblock":
        c, h, w = input_shape
        layers = [
            Conv2D(c, channels, rng, dtype=dtype),
            BatchNorm(channels, dtype=dtype),
            ReLU(),  # tap
            AvgPool2D(2),
            Conv2D(channels, channels, rng, dtype=dtype),
            BatchNorm(channels, dtype=dtype),
            ReLU(),  # tap
            AvgPool2D(2),
            Flatten(),
            Dense(channels * (h // 4) * (w // 4), n_classes, rng, dtype=dtype),
        ]
        taps = (2, 6, 9)
    elif variant in ("mlp", "mlp_nobn"):
        in_dim = int(np.prod(input_shape))
        with_bn = variant == "mlp"
        layers = [Flatten(), Dense(in_dim, hidden, rng, dtype=dtype)]
        if with_bn:
            layers.append(BatchNorm(hidden, dtype=dtype))
        layers.append(ReLU())
        tap1 = len(layers) - 1
        layers.append(Dense(hidden, hidden, rng, dtype=dtype))
        if with_bn:
            layers.append(BatchNorm(hidden, dtype=dtype))
        layers.append(ReLU())
        tap2 = len(layers) - 1
        layers.append(Dense(hidden, n_classes, rng, dtype=dtype))
        taps = (tap1, tap2, len(layers) - 1)
    else:
        raise ValueError(f"unknown model variant {variant!r}; available: {VARIANTS}")
    return Model(layers, taps, input_shape, n_classes)
