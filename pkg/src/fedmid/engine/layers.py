"""Layer menu for the training engine.

Each layer owns its trainable parameters (``params``), accumulated gradients
(``grads``) and non-trainable state (``state``, batchnorm running statistics).
Forward passes cache what the following backward pass needs; backward calls
accumulate into ``grads`` and return the gradient w.r.t. the layer input.

Parameters are stored in float32 by default; reductions (batch statistics,
losses) accumulate in float64. Gradient-check tests build float64 layers
through the same code paths.
"""

import enum

import numpy as np

from ..kernels import col2im, im2col


class BnMode(enum.Enum):
    """Batch-normalization statistics source for a forward pass."""

    RUNNING_STATS = "running"
    CURRENT_BATCH = "batch"


class Layer:
    kind = "base"

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.state = {}

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def zero_grads(self):
        for name, p in self.params.items():
            self.grads[name] = np.zeros_like(p)

    def copy(self):
        clone = self.__class__.__new__(self.__class__)
        clone.__dict__.update(
            {k: v for k, v in self.__dict__.items() if k not in ("params", "grads", "state")}
        )
        clone.params = {k: v.copy() for k, v in self.params.items()}
        clone.grads = {k: v.copy() for k, v in self.grads.items()}
        clone.state = {k: v.copy() for k, v in self.state.items()}
        return clone

    def out_shape(self, in_shape):
        return in_shape


def he_uniform(rng, shape, fan_in, dtype):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_dim, out_dim, rng, dtype=np.float32):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.params["weight"] = he_uniform(rng, (in_dim, out_dim), in_dim, dtype)
        self.params["bias"] = np.zeros(out_dim, dtype=dtype)
        self.zero_grads()
        self._cache = None

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        self._cache = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, dout):
        x = self._cache
        self.grads["weight"] += x.T @ dout
        self.grads["bias"] += dout.sum(axis=0)
        return dout @ self.params["weight"].T

    def out_shape(self, in_shape):
        return (self.out_dim,)


class Conv2D(Layer):
    """3x3-style convolution via patch gathering; stride/pad configurable."""

    kind = "conv2d"

    def __init__(self, in_channels, out_channels, rng, kernel_size=3, stride=1, pad=1, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.pad = pad
        fan_in = in_channels * kernel_size * kernel_size
        self.params["weight"] = he_uniform(
            rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in, dtype
        )
        self.params["bias"] = np.zeros(out_channels, dtype=dtype)
        self.zero_grads()
        self._cache = None

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        n, c, h, w = x.shape
        if c != self.in_channels:
            raise ValueError(f"conv2d expected {self.in_channels} input channels, got {c}")
        k, s, p = self.kernel_size, self.stride, self.pad
        oh = (h + 2 * p - k) // s + 1
        ow = (w + 2 * p - k) // s + 1
        cols = im2col(x, k, k, s, p)
        w2d = self.params["weight"].reshape(self.out_channels, -1)
        out = cols @ w2d.T + self.params["bias"]
        out = np.ascontiguousarray(out.reshape(n, oh, ow, self.out_channels).transpose(0, 3, 1, 2))
        self._cache = (cols, x.shape)
        return out

    def backward(self, dout):
        cols, x_shape = self._cache
        n, out_ch, oh, ow = dout.shape
        dmat = np.ascontiguousarray(dout.transpose(0, 2, 3, 1)).reshape(-1, out_ch)
        self.grads["weight"] += (dmat.T @ cols).reshape(self.params["weight"].shape)
        self.grads["bias"] += dmat.sum(axis=0)
        dcols = dmat @ self.params["weight"].reshape(out_ch, -1)
        k, s, p = self.kernel_size, self.stride, self.pad
        return col2im(dcols, x_shape, k, k, s, p)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        k, s, p = self.kernel_size, self.stride, self.pad
        return (self.out_channels, (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)


class BatchNorm(Layer):
    """Batch normalization over features (2-d input) or channels (4-d input).

    CURRENT_BATCH normalizes with the incoming batch's own statistics and,
    unless ``update_running`` is set, leaves the stored running statistics
    untouched. RUNNING_STATS normalizes with the stored statistics.
    """

    kind = "batchnorm"

    def __init__(self, num_features, momentum=0.1, eps=1e-5, dtype=np.float32):
        super().__init__()
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(num_features, dtype=dtype)
        self.params["beta"] = np.zeros(num_features, dtype=dtype)
        self.state["running_mean"] = np.zeros(num_features, dtype=dtype)
        self.state["running_var"] = np.ones(num_features, dtype=dtype)
        self.zero_grads()
        self._cache = None

    def _axes_and_shape(self, x):
        if x.ndim == 2:
            return (0,), (1, self.num_features)
        if x.ndim == 4:
            return (0, 2, 3), (1, self.num_features, 1, 1)
        raise ValueError(f"batchnorm expects 2-d or 4-d input, got shape {x.shape}")

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        axes, bshape = self._axes_and_shape(x)
        dtype = x.dtype
        if bn_mode is BnMode.CURRENT_BATCH:
            mean = x.mean(axis=axes, dtype=np.float64)
            var = x.var(axis=axes, dtype=np.float64)
            if update_running:
                n_red = x.size // self.num_features
                unbiased = var * n_red / (n_red - 1) if n_red > 1 else var
                m = self.momentum
                self.state["running_mean"] = (
                    (1 - m) * self.state["running_mean"] + m * mean
                ).astype(dtype)
                self.state["running_var"] = (
                    (1 - m) * self.state["running_var"] + m * unbiased
                ).astype(dtype)
            mean = mean.astype(dtype)
            var = var.astype(dtype)
        else:
            mean = self.state["running_mean"]
            var = self.state["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps).astype(dtype)
        xhat = (x - mean.reshape(bshape)) * inv_std.reshape(bshape)
        self._cache = (xhat, inv_std, axes, bshape, bn_mode)
        return self.params["gamma"].reshape(bshape) * xhat + self.params["beta"].reshape(bshape)

    def backward(self, dout):
        xhat, inv_std, axes, bshape, bn_mode = self._cache
        gamma = self.params["gamma"].reshape(bshape)
        self.grads["gamma"] += (dout * xhat).sum(axis=axes)
        self.grads["beta"] += dout.sum(axis=axes)
        dxhat = dout * gamma
        if bn_mode is BnMode.RUNNING_STATS:
            return dxhat * inv_std.reshape(bshape)
        n_red = dout.size // self.num_features
        mean_dxhat = dxhat.mean(axis=axes).reshape(bshape)
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=axes).reshape(bshape)
        return inv_std.reshape(bshape) * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)


class AvgPool2D(Layer):
    """Non-overlapping average pooling; spatial dims must divide the window."""

    kind = "avgpool"

    def __init__(self, window=2):
        super().__init__()
        self.window = window

    def forward(self, x, bn_mode=BnMode.RUNNING_STATS, update_running=False):
        n, c, h, w = x.shape
        k = self.window
        if h % k or w % k:
            raise ValueError(f"avgpool window {k} does not divide spatial dims {(h, w)}")
        return x.reshape(n, c, h // k, k, w // k, k).mean(axis=(3, 5))

    def backward(self, dout):
        k = self.window
        scaled = dout / (k * k)
        up = np.broadcast_to(
            scaled[:, :, :, None, :, None],
            (dout.shape[0], dout.shape[1], dout.shape[2], k, dout.shape[3], k),
        )
        return up.reshape(dout.shape[0], dout.shape[1], dout.shape[2] * k, dout.shape[3] * k)

    def out_shape(self, in_shape):
        c, h, w = in_shape
        return (c, h // self.window, w // self.window)
