"""Deterministic counter-based random number generation.

The generator is SplitMix64 run in counter mode: draw number ``n`` of a
stream with seed ``s`` is ``mix64(s + n * GAMMA)`` where ``mix64`` is the
SplitMix64 finalizer and ``GAMMA`` the golden-ratio increment, all in
wrapping 64-bit arithmetic.  Because each draw is a pure function of
``(seed, counter)``, arbitrarily large batches are produced with vectorized
uint64 arithmetic and two streams never need to communicate.

The raw integer and uniform streams are bit-identical on every platform.
Gaussian draws map uniforms through ``log``/``cos``/``sin`` and are
bit-identical on a given platform/libm.

Draw accounting (each method advances the counter by exactly this much):

* ``uniform(shape)``      one draw per element
* ``normal(shape, ...)``  ``2 * ceil(n / 2)`` draws for ``n`` elements
  (Box-Muller: one pair of uniforms per pair of normals)
* ``permutation(n)``      ``n`` draws
* ``derive(tag)``         none (pure function of seed and tag)
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA_INT = 0x9E3779B97F4A7C15
_GAMMA = np.uint64(_GAMMA_INT)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG53 = 2.0 ** -53


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def _mix64_int(x: int) -> int:
    """SplitMix64 finalizer on a Python int, exact 64-bit semantics."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Fold integer tags into a seed to key an independent stream.

    Deterministic and order-sensitive; used to give simulations, data
    shuffles and per-element training their own decorrelated streams.
    """
    s = seed & _MASK
    for tag in tags:
        s = _mix64_int(_mix64_int((s + (int(tag) + 1) * _GAMMA_INT) & _MASK))
    return s


def _as_shape(shape) -> tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(d) for d in shape)
    if any(d < 0 for d in shape):
        raise ParameterError(f"negative dimension in shape {shape}")
    return shape


class Rng:
    """Deterministic stream of random values for a single owner.

    Not safe for concurrent use; give each worker its own instance with a
    distinct seed (see :func:`derive_seed`).
    """

    __slots__ = ("seed", "_counter")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._counter = 0

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed:#x}, counter={self._counter})"

    @property
    def counter(self) -> int:
        """Number of raw draws consumed so far."""
        return self._counter

    def _raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw uint64 draws."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix64(np.uint64(self.seed) + idx * _GAMMA)

    def uniform(self, shape) -> np.ndarray:
        """I.i.d. samples from [0, 1) with 53-bit resolution."""
        shape = _as_shape(shape)
        n = math.prod(shape)
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
        return u.reshape(shape)

    def normal(self, shape, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """I.i.d. Gaussian samples via Box-Muller.

        ``std == 0`` degenerates to a constant fill (draws are still
        consumed so seed composition does not depend on parameter values).
        """
        if std < 0:
            raise ParameterError(f"std must be >= 0, got {std}")
        shape = _as_shape(shape)
        n = math.prod(shape)
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        # u1 in (0, 1] keeps log() finite; u2 in [0, 1).
        u1 = ((raw[0::2] >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _TWO_NEG53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
        r = np.sqrt(-2.0 * np.log(u1))
        ang = (2.0 * np.pi) * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(ang)
        z[1::2] = r * np.sin(ang)
        return (mean + std * z[:n]).reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Uniformly random permutation of range(n); consumes ``n`` draws."""
        return np.argsort(self._raw(int(n)), kind="stable")

    def derive(self, tag: int) -> "Rng":
        """Independent child stream keyed by ``tag``; parent state untouched."""
        return Rng(derive_seed(self.seed, tag))


def randn(shape, rng: Rng, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """Gaussian tensor drawn from ``rng`` (see :meth:`Rng.normal`)."""
    return rng.normal(shape, mean=mean, std=std)
