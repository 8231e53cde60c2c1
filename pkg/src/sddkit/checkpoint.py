"""Binary checkpoint format for element networks.

Layout (all integers little-endian):

====================  =========================================
bytes                 content
====================  =========================================
0..3                  magic ``SDD2``
4..7                  format version, uint32 (currently 1)
8..                   architecture header:
                      uint32 ``s_f``, uint32 layout (0 width / 1 channels),
                      uint32 conv1_filters, k1h, k1w, p1h, p1w,
                      uint32 conv2_filters, k2h, k2w, p2h, p2w,
                      float64 dropout_p, bn_eps, bn_momentum,
                      uint32 tensor count
then per tensor       uint32 name length, UTF-8 name,
                      uint32 rank, uint32 dims[rank],
                      float64 payload (row-major)
====================  =========================================

Tensors cover all parameters and batch-norm running statistics, so a
round trip reproduces evaluation behavior bit-exactly.  Loaders reject
unknown magic/version and report the byte offset of any truncation.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .network import LAYOUT_CHANNELS, LAYOUT_WIDTH, NetConfig, Network
from .rng import Rng

MAGIC = b"SDD2"
VERSION = 1

_LAYOUT_CODE = {LAYOUT_WIDTH: 0, LAYOUT_CHANNELS: 1}
_CODE_LAYOUT = {v: k for k, v in _LAYOUT_CODE.items()}


def save_bytes(net: Network) -> bytes:
    cfg = net.config
    parts = [MAGIC, struct.pack("<I", VERSION)]
    parts.append(struct.pack(
        "<12I",
        cfg.s_f, _LAYOUT_CODE[cfg.layout],
        cfg.conv1_filters, cfg.kernel1[0], cfg.kernel1[1],
        cfg.pool1[0], cfg.pool1[1],
        cfg.conv2_filters, cfg.kernel2[0], cfg.kernel2[1],
        cfg.pool2[0], cfg.pool2[1],
    ))
    parts.append(struct.pack("<3d", cfg.dropout_p, cfg.bn_eps, cfg.bn_momentum))
    tensors = net.state_tensors()
    parts.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def save(net: Network, path) -> None:
    Path(path).write_bytes(save_bytes(net))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.buf):
            raise CheckpointError(
                f"truncated checkpoint: needed {n} bytes at byte {self.offset}, "
                f"file has {len(self.buf)}")
        out = self.buf[self.offset:self.offset + n]
        self.offset += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64s(self, n: int) -> tuple:
        return struct.unpack(f"<{n}d", self.take(8 * n))


def load_bytes(buf: bytes) -> Network:
    r = _Reader(buf)
    magic = r.take(4)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r} at byte 0 (expected {MAGIC!r})")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported format version {version} at byte 4")
    ints = struct.unpack("<12I", r.take(48))
    doubles = r.f64s(3)
    layout = _CODE_LAYOUT.get(ints[1])
    if layout is None:
        raise CheckpointError(f"unknown layout code {ints[1]} at byte 12")
    cfg = NetConfig(
        s_f=ints[0], layout=layout,
        conv1_filters=ints[2], kernel1=(ints[3], ints[4]), pool1=(ints[5], ints[6]),
        conv2_filters=ints[7], kernel2=(ints[8], ints[9]), pool2=(ints[10], ints[11]),
        dropout_p=doubles[0], bn_eps=doubles[1], bn_momentum=doubles[2],
    )
    net = Network(cfg, Rng(0))
    expected = net.state_tensors()

    n_tensors = r.u32()
    if n_tensors != len(expected):
        raise CheckpointError(
            f"checkpoint holds {n_tensors} tensors, architecture needs {len(expected)}")
    loaded: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        name_len = r.u32()
        name = r.take(name_len).decode("utf-8")
        rank = r.u32()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        size = int(np.prod(dims)) if rank else 1
        payload = r.take(8 * size)
        loaded[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
    if r.offset != len(buf):
        raise CheckpointError(f"trailing garbage at byte {r.offset}")

    for name, arr in expected.items():
        if name not in loaded:
            raise CheckpointError(f"checkpoint missing tensor {name!r}")
        if loaded[name].shape != arr.shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {loaded[name].shape}, "
                f"architecture needs {arr.shape}")
    net.restore(loaded)
    return net.eval()


def load(path) -> Network:
    return load_bytes(Path(path).read_bytes())
