"""Deterministic minimal training engine: layers, taps, SGD, flat parameters."""

from .layers import AvgPool2D, BatchNorm, BnMode, Conv2D, Dense, Flatten, Layer, ReLU
from .model import ActivationSet, Model, NonFiniteError, forward_with_taps
from .optim import SGD, backward_sgd_step, cross_entropy
from .params import ParamVector, build_layout, flatten_params, unflatten_params
from .zoo import VARIANTS, build_model

__all__ = [
    "ActivationSet",
    "AvgPool2D",
    "BatchNorm",
    "BnMode",
    "Conv2D",
    "Dense",
    "Flatten",
    "Layer",
    "Model",
    "NonFiniteError",
    "ParamVector",
    "ReLU",
    "SGD",
    "VARIANTS",
    "backward_sgd_step",
    "build_layout",
    "build_model",
    "cross_entropy",
    "flatten_params",
    "forward_with_taps",
    "unflatten_params",
]
