"""Input validation and random-stream helpers shared by the estimators."""
from __future__ import annotations

import numbers
import zlib

import numpy as np
from sklearn.utils import check_array

__all__ = [
    "check_rewards",
    "check_positive",
    "as_seed_sequence",
    "arm_generators",
    "stable_key",
]


def check_rewards(X) -> np.ndarray:
    """Flatten rewards to a finite float64 vector.

    Accepts a scalar, a 1-d sequence or an ``(n, 1)`` column.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 2 and arr.shape[1] != 1:
        raise ValueError(f"rewards must be scalar per observation, got shape {arr.shape}")
    arr = check_array(arr.reshape(-1, 1), ensure_min_samples=0, dtype=np.float64)
    return arr.ravel()


def check_positive(name: str, value, integer: bool = False):
    if integer:
        if not isinstance(value, numbers.Integral) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def stable_key(name: str) -> int:
    """Process-independent 32-bit key for a string (``hash`` is salted)."""
    return zlib.crc32(name.encode("utf-8"))


def as_seed_sequence(random_state) -> np.random.SeedSequence:
    """Turn ``None``, an int, a sequence of ints or a SeedSequence into a SeedSequence."""
    if isinstance(random_state, np.random.SeedSequence):
        return random_state
    if isinstance(random_state, np.random.Generator):
        raise TypeError("pass a seed or SeedSequence; Generators cannot be split reproducibly")
    return np.random.SeedSequence(random_state)


def arm_generators(random_state, n_arms: int, tag: int = 0) -> list[np.random.Generator]:
    """One independent Generator per arm.

    Children are addressed by ``spawn_key + (tag, arm)`` rather than
    ``SeedSequence.spawn`` so repeated calls yield the same streams.
    """
    ss = as_seed_sequence(random_state)
    return [
        np.random.default_rng(
            np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (tag, a))
        )
        for a in range(n_arms)
    ]
