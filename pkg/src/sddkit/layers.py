"""Neural network layers with hand-written forward and backward passes.

Every layer operates on batched float64 arrays ``[B, C, H, W]`` (dense
layers on ``[B, F]``).  ``forward`` caches whatever ``backward`` needs;
layers with parameters expose them through ``params()`` and leave their
gradients in ``self.grads`` after ``backward``.  Each backward pass is the
exact analytic gradient of its forward map and is verified against central
differences in the test suite.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NumericError, ParameterError, ShapeError
from .rng import Rng


def _as_batched(x: np.ndarray, rank: int) -> tuple[np.ndarray, bool]:
    """Promote a single sample to a batch of one; report whether we did."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == rank - 1:
        return x[None], True
    if x.ndim != rank:
        raise ShapeError(f"expected rank {rank - 1} or {rank} input, got shape {x.shape}")
    return x, False


class Conv2d:
    """Valid (no padding) stride-1 2-D convolution.

    Weights ``[out_channels, in_channels, kh, kw]`` are He-normal
    initialized (std = sqrt(2 / fan_in)), biases start at zero.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel: tuple[int, int],
                 rng: Rng):
        kh, kw = int(kernel[0]), int(kernel[1])
        if kh < 1 or kw < 1:
            raise ShapeError(f"kernel dimensions must be >= 1, got {(kh, kw)}")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = (kh, kw)
        fan_in = in_channels * kh * kw
        self.w = rng.normal((out_channels, in_channels, kh, kw),
                            std=np.sqrt(2.0 / fan_in))
        self.b = np.zeros(out_channels)
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x, single = _as_batched(x, 4)
        batch, cin, h, w = x.shape
        kh, kw = self.kernel
        if cin != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} input channels, got {cin}")
        if h < kh or w < kw:
            raise ShapeError(f"kernel {self.kernel} larger than input {(h, w)}")
        ho, wo = h - kh + 1, w - kw + 1
        # im2col: one [B*Ho*Wo, Cin*kh*kw] patch matrix, convolution as matmul
        win = sliding_window_view(x, (kh, kw), axis=(2, 3))
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(batch * ho * wo, cin * kh * kw)
        y = cols @ self.w.reshape(self.out_channels, -1).T + self.b
        self._cache = (cols, x.shape)
        y = y.reshape(batch, ho, wo, self.out_channels).transpose(0, 3, 1, 2)
        return y[0] if single else y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise ParameterError("backward called before forward")
        cols, xshape = self._cache
        dy, single = _as_batched(dy, 4)
        batch, cin, h, w = xshape
        kh, kw = self.kernel
        ho, wo = h - kh + 1, w - kw + 1
        if dy.shape != (batch, self.out_channels, ho, wo):
            raise ShapeError(
                f"gradient shape {dy.shape} does not match forward output "
                f"{(batch, self.out_channels, ho, wo)}")
        dyr = dy.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        self.grads = {
            "w": (dyr.T @ cols).reshape(self.w.shape),
            "b": dyr.sum(axis=0),
        }
        dcols = dyr @ self.w.reshape(self.out_channels, -1)
        # col2im: scatter-add patch gradients back onto the input grid
        d6 = dcols.reshape(batch, ho, wo, cin, kh, kw).transpose(0, 3, 4, 5, 1, 2)
        dx = np.zeros(xshape)
        for a in range(kh):
            for b in range(kw):
                dx[:, :, a:a + ho, b:b + wo] += d6[:, :, a, b]
        return dx[0] if single else dx


class BatchNorm:
    """Per-channel batch normalization with explicit train/eval modes.

    Training normalizes with batch statistics (population variance) and
    updates running stats as ``running = (1 - momentum) * running +
    momentum * batch_stat``; evaluation normalizes with the running stats.
    """

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1):
        if not 0.0 < momentum <= 1.0:
            raise ParameterError(f"momentum must be in (0, 1], got {momentum}")
        self.channels = int(channels)
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def params(self) -> dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    def state(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def _axes_and_bcast(self, x: np.ndarray):
        if x.ndim < 2 or x.shape[1] != self.channels:
            raise ShapeError(
                f"expected [B, {self.channels}, ...] input, got shape {x.shape}")
        axes = (0,) + tuple(range(2, x.ndim))
        bcast = (1, self.channels) + (1,) * (x.ndim - 2)
        return axes, bcast

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        axes, bcast = self._axes_and_bcast(x)
        if training:
            if x.shape[0] < 2:
                raise ShapeError("batch normalization needs batch size >= 2 in training")
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)  # population variance
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean.reshape(bcast)) * inv.reshape(bcast)
            self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
            self._cache = (xhat, inv, axes, bcast)
        else:
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean.reshape(bcast)) * inv.reshape(bcast)
            self._cache = None
        return self.gamma.reshape(bcast) * xhat + self.beta.reshape(bcast)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise ParameterError("backward requires a preceding training-mode forward")
        xhat, inv, axes, bcast = self._cache
        dy = np.asarray(dy, dtype=np.float64)
        if dy.shape != xhat.shape:
            raise ShapeError(f"gradient shape {dy.shape} != activation shape {xhat.shape}")
        n = dy.size // self.channels
        self.grads = {
            "gamma": (dy * xhat).sum(axis=axes),
            "beta": dy.sum(axis=axes),
        }
        dxhat = dy * self.gamma.reshape(bcast)
        # full chain through batch mean and population variance
        t1 = dxhat.sum(axis=axes).reshape(bcast)
        t2 = (dxhat * xhat).sum(axis=axes).reshape(bcast)
        return (inv.reshape(bcast) / n) * (n * dxhat - t1 - xhat * t2)


class ReLU:
    """Elementwise max(0, x)."""

    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._mask = x > 0.0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise ParameterError("backward called before forward")
        return np.where(self._mask, dy, 0.0)


class MaxPool2d:
    """Non-overlapping max pooling; stride equals the pool size.

    Trailing rows/columns that do not fill a window are dropped.  Ties
    resolve to the first occurrence in the row-major window scan, and the
    backward pass routes each output gradient to that cached argmax.
    """

    def __init__(self, pool: tuple[int, int]):
        ph, pw = int(pool[0]), int(pool[1])
        if ph < 1 or pw < 1:
            raise ShapeError(f"pool dimensions must be >= 1, got {(ph, pw)}")
        self.pool = (ph, pw)
        self._cache = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x, single = _as_batched(x, 4)
        batch, c, h, w = x.shape
        ph, pw = self.pool
        if ph > h or pw > w:
            raise ShapeError(f"pool {self.pool} larger than input {(h, w)}")
        ho, wo = h // ph, w // pw
        r = (x[:, :, :ho * ph, :wo * pw]
             .reshape(batch, c, ho, ph, wo, pw)
             .transpose(0, 1, 2, 4, 3, 5)
             .reshape(batch, c, ho, wo, ph * pw))
        idx = r.argmax(axis=-1)
        out = np.take_along_axis(r, idx[..., None], axis=-1)[..., 0]
        self._cache = (idx, x.shape)
        return out[0] if single else out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise ParameterError("backward called before forward")
        idx, xshape = self._cache
        dy, single = _as_batched(dy, 4)
        batch, c, h, w = xshape
        ph, pw = self.pool
        ho, wo = h // ph, w // pw
        if dy.shape != (batch, c, ho, wo):
            raise ShapeError(f"gradient shape {dy.shape} != output shape {(batch, c, ho, wo)}")
        flat = np.zeros((batch, c, ho, wo, ph * pw))
        np.put_along_axis(flat, idx[..., None], dy[..., None], axis=-1)
        dx = np.zeros(xshape)
        dx[:, :, :ho * ph, :wo * pw] = (flat
                                        .reshape(batch, c, ho, wo, ph, pw)
                                        .transpose(0, 1, 2, 4, 3, 5)
                                        .reshape(batch, c, ho * ph, wo * pw))
        return dx[0] if single else dx


class Dropout:
    """Inverted dropout: training zeroes with probability p and scales
    survivors by 1/(1-p); evaluation is the identity."""

    def __init__(self, p: float, rng: Rng):
        if not 0.0 <= p < 1.0:
            raise ParameterError(f"drop probability must be in [0, 1), got {p}")
        self.p = float(p)
        self.rng = rng
        self._mask = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not training or self.p == 0.0:
            self._mask = None
            return x
        keep = self.rng.uniform(x.shape) >= self.p
        self._mask = keep / (1.0 - self.p)
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return np.asarray(dy, dtype=np.float64)
        return dy * self._mask


class Flatten:
    """Collapse everything past the batch axis."""

    def __init__(self):
        self._shape = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy.reshape(self._shape)


class Dense:
    """Fully connected layer y = w @ u + b."""

    def __init__(self, in_features: int, out_features: int, rng: Rng):
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.w = rng.normal((out_features, in_features), std=np.sqrt(2.0 / in_features))
        self.b = np.zeros(out_features)
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def params(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x, single = _as_batched(x, 2)
        if x.shape[1] != self.in_features:
            raise ShapeError(f"expected {self.in_features} features, got {x.shape[1]}")
        self._cache = x
        y = x @ self.w.T + self.b
        return y[0] if single else y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise ParameterError("backward called before forward")
        dy, single = _as_batched(dy, 2)
        x = self._cache
        self.grads = {"w": dy.T @ x, "b": dy.sum(axis=0)}
        dx = dy @ self.w
        return dx[0] if single else dx


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Loss and gradient for one sample.

    Returns ``(-log softmax(logits)[label], softmax(logits) - onehot(label))``,
    computed with max-subtraction so any finite logits are safe.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ShapeError(f"expected a 1-D logit vector, got shape {logits.shape}")
    label = int(label)
    if not 0 <= label < logits.shape[0]:
        raise ParameterError(f"label {label} out of range for {logits.shape[0]} classes")
    z = logits - logits.max()
    lse = np.log(np.exp(z).sum())
    p = np.exp(z - lse)
    grad = p.copy()
    grad[label] -= 1.0
    return float(lse - z[label]), grad


def softmax_cross_entropy_batch(logits: np.ndarray,
                                labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean loss over a batch and the gradient of that mean w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"got logits {logits.shape} and labels {labels.shape}")
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(logits.shape[0])
    loss = float((lse[:, 0] - z[rows, labels]).mean())
    grad = np.exp(z - lse)
    grad[rows, labels] -= 1.0
    return loss, grad / logits.shape[0]


class Adam:
    """Adam optimizer with bias correction.

    One ``step`` updates every parameter in place; the step counter
    increases by exactly one per call.  Non-finite gradients abort the
    step before anything is mutated.
    """

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                raise ParameterError(f"missing gradient for parameter {name!r}")
            if g.shape != p.shape:
                raise ShapeError(f"gradient shape {g.shape} != parameter shape "
                                 f"{p.shape} for {name!r}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for parameter {name!r}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
