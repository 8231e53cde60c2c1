"""The fixed per-element classifier network.

Stack: input batch norm, two [conv -> batch norm -> relu -> max-pool]
blocks, dropout, flatten, and a two-class dense head.  A frame is a
``[s_f, 3]`` slice of three sensor signals; by default it enters the
network as a one-channel image ``[1, s_f, 3]`` (time x sensors) so kernels
slide across both time and the sensor axis.  The alternative ``channels``
layout feeds ``[3, s_f, 1]`` for comparison experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .layers import (
    Adam,
    BatchNorm,
    Conv2d,
    Dense,
    Dropout,
    Flatten,
    MaxPool2d,
    ReLU,
    softmax_cross_entropy_batch,
)
from .rng import Rng

N_SENSORS = 3
N_CLASSES = 2

LAYOUT_WIDTH = "width"
LAYOUT_CHANNELS = "channels"


@dataclass(frozen=True)
class NetConfig:
    """Architecture and optimizer hyperparameters for one element network."""

    s_f: int = 256
    layout: str = LAYOUT_WIDTH
    conv1_filters: int = 16
    kernel1: tuple[int, int] = (5, 2)
    pool1: tuple[int, int] = (2, 1)
    conv2_filters: int = 32
    kernel2: tuple[int, int] = (5, 2)
    pool2: tuple[int, int] = (2, 1)
    dropout_p: float = 0.5
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def input_shape(self) -> tuple[int, int, int]:
        if self.layout == LAYOUT_WIDTH:
            return (1, self.s_f, N_SENSORS)
        if self.layout == LAYOUT_CHANNELS:
            return (N_SENSORS, self.s_f, 1)
        raise ConfigError(f"unknown input layout {self.layout!r}")

    def shape_chain(self) -> list[tuple[str, tuple[int, int, int]]]:
        """Per-stage output shapes, validating that every stage is feasible."""
        c, h, w = self.input_shape()
        chain = [("input", (c, h, w))]

        def conv(name, filters, kernel):
            nonlocal c, h, w
            kh, kw = kernel
            if kh > h or kw > w:
                raise ConfigError(
                    f"{name}: kernel {kernel} does not fit input {(h, w)}")
            c, h, w = filters, h - kh + 1, w - kw + 1
            chain.append((name, (c, h, w)))

        def pool(name, size):
            nonlocal h, w
            ph, pw = size
            if ph > h or pw > w:
                raise ConfigError(f"{name}: pool {size} does not fit input {(h, w)}")
            h, w = h // ph, w // pw
            chain.append((name, (c, h, w)))

        conv("conv1", self.conv1_filters, self.kernel1)
        pool("pool1", self.pool1)
        conv("conv2", self.conv2_filters, self.kernel2)
        pool("pool2", self.pool2)
        chain.append(("flatten", (c * h * w,)))  # type: ignore[arg-type]
        chain.append(("logits", (N_CLASSES,)))  # type: ignore[arg-type]
        return chain

    def flat_features(self) -> int:
        return self.shape_chain()[-2][1][0]

    def with_s_f(self, s_f: int) -> "NetConfig":
        return replace(self, s_f=int(s_f))


@dataclass
class TensorSpec:
    name: str
    array: np.ndarray


class Network:
    """One element's classifier with its optimizer state.

    Confined to a single worker at a time; the constructor draws the
    initial weights from ``rng`` and training-mode dropout keeps drawing
    from it, so two networks built from equal seeds evolve identically.
    """

    def __init__(self, config: NetConfig, rng: Rng):
        config.shape_chain()  # validates feasibility
        self.config = config
        self.rng = rng
        self.training = True
        cin = config.input_shape()[0]
        self.layers: list[tuple[str, object]] = [
            ("in_bn", BatchNorm(cin, eps=config.bn_eps, momentum=config.bn_momentum)),
            ("conv1", Conv2d(cin, config.conv1_filters, config.kernel1, rng)),
            ("bn1", BatchNorm(config.conv1_filters, eps=config.bn_eps,
                              momentum=config.bn_momentum)),
            ("relu1", ReLU()),
            ("pool1", MaxPool2d(config.pool1)),
            ("conv2", Conv2d(config.conv1_filters, config.conv2_filters,
                             config.kernel2, rng)),
            ("bn2", BatchNorm(config.conv2_filters, eps=config.bn_eps,
                              momentum=config.bn_momentum)),
            ("relu2", ReLU()),
            ("pool2", MaxPool2d(config.pool2)),
            ("drop", Dropout(config.dropout_p, rng)),
            ("flatten", Flatten()),
            ("fc", Dense(config.flat_features(), N_CLASSES, rng)),
        ]
        self.adam = Adam(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                         eps=config.adam_eps)

    # -- mode ---------------------------------------------------------------

    def train(self) -> "Network":
        self.training = True
        return self

    def eval(self) -> "Network":
        self.training = False
        return self

    # -- parameter access ---------------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name, layer in self.layers:
            if hasattr(layer, "params"):
                for pname, arr in layer.params().items():
                    out[f"{name}.{pname}"] = arr
        return out

    def state_tensors(self) -> dict[str, np.ndarray]:
        """Parameters plus batch-norm running statistics, in a fixed order."""
        out: dict[str, np.ndarray] = {}
        for name, layer in self.layers:
            if hasattr(layer, "params"):
                for pname, arr in layer.params().items():
                    out[f"{name}.{pname}"] = arr
            if hasattr(layer, "state"):
                for sname, arr in layer.state().items():
                    out[f"{name}.{sname}"] = arr
        return out

    def num_params(self) -> int:
        return sum(arr.size for arr in self.params().values())

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.state_tensors().items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        tensors = self.state_tensors()
        if set(snap) != set(tensors):
            raise ShapeError("snapshot does not match this architecture")
        for name, layer in self.layers:
            if isinstance(layer, BatchNorm):
                layer.running_mean = snap[f"{name}.running_mean"].copy()
                layer.running_var = snap[f"{name}.running_var"].copy()
                layer.gamma[...] = snap[f"{name}.gamma"]
                layer.beta[...] = snap[f"{name}.beta"]
            elif hasattr(layer, "params"):
                for pname, arr in layer.params().items():
                    arr[...] = snap[f"{name}.{pname}"]

    # -- data plumbing ------------------------------------------------------

    def input_from_frames(self, frames: np.ndarray) -> np.ndarray:
        """Shape raw ``[B, s_f, 3]`` (or single ``[s_f, 3]``) frames for the net."""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim == 2:
            frames = frames[None]
        if frames.ndim != 3 or frames.shape[1:] != (self.config.s_f, N_SENSORS):
            raise ShapeError(
                f"expected frames [B, {self.config.s_f}, {N_SENSORS}], "
                f"got {frames.shape}")
        if self.config.layout == LAYOUT_WIDTH:
            return frames[:, None, :, :]
        return frames.transpose(0, 2, 1)[:, :, :, None]

    # -- compute ------------------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits for one sample ``[C, H, W]`` or a batch ``[B, C, H, W]``."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 3
        if single:
            x = x[None]
        expected = self.config.input_shape()
        if x.ndim != 4 or x.shape[1:] != expected:
            raise ShapeError(f"expected input [B, {expected[0]}, {expected[1]}, "
                             f"{expected[2]}], got {x.shape}")
        for _, layer in self.layers:
            x = layer.forward(x, training=self.training)
        return x[0] if single else x

    def forward_frames(self, frames: np.ndarray) -> np.ndarray:
        return self.forward(self.input_from_frames(frames))

    def backward(self, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Backpropagate and return gradients keyed like :meth:`params`."""
        dy = dlogits
        for _, layer in reversed(self.layers):
            dy = layer.backward(dy)
        grads: dict[str, np.ndarray] = {}
        for name, layer in self.layers:
            if hasattr(layer, "params"):
                for pname, g in layer.grads.items():
                    grads[f"{name}.{pname}"] = g
        return grads

    def train_step(self, frames: np.ndarray, labels: np.ndarray) -> float:
        """One forward/backward/optimizer step; returns the pre-update mean loss.

        Numeric failures raise before any parameter is touched.
        """
        if not self.training:
            raise ShapeError("train_step requires training mode")
        x = self.input_from_frames(frames)
        if x.shape[0] < 2:
            raise ShapeError("training batches need at least 2 frames")
        logits = self.forward(x)
        loss, dlogits = softmax_cross_entropy_batch(logits, labels)
        if not np.isfinite(loss):
            raise NumericError("non-finite loss; step aborted")
        grads = self.backward(dlogits)
        self.adam.step(self.params(), grads)
        return loss
