"""Sample-by-sample FIR filtering primitives.

Every object here accepts either a scalar sample stream or a batch of
independent streams. A batch is represented by a leading axis: a delay line
of capacity ``L`` holding ``T`` parallel trials has a buffer of shape
``(T, L)``. Per-row arithmetic does not depend on the batch size, so a trial
computed alone and the same trial computed inside a batch agree bitwise.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError


def as_taps(taps, name: str = "taps") -> np.ndarray:
    """Validate and copy a tap vector into a 1-D float64 array."""
    arr = np.array(taps, dtype=np.float64).reshape(-1)
    if arr.size < 1:
        raise ConfigurationError(f"{name} must contain at least one coefficient")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr


def tap_dot(taps: np.ndarray, buffer: np.ndarray) -> np.ndarray | float:
    """Inner product over the last axis, ``sum_k taps[k] * buffer[..., k]``."""
    return (taps * buffer).sum(axis=-1)


class DelayLine:
    """Most-recent-first sample buffer, zero initialized.

    ``buffer[..., 0]`` is the newest sample. Pushing discards the oldest.
    """

    def __init__(self, capacity: int, batch: int | None = None):
        if capacity < 1:
            raise ConfigurationError("delay line capacity must be >= 1")
        self.capacity = int(capacity)
        shape = (self.capacity,) if batch is None else (int(batch), self.capacity)
        self.buffer = np.zeros(shape, dtype=np.float64)

    def push(self, sample) -> None:
        buf = self.buffer
        buf[..., 1:] = buf[..., :-1]
        buf[..., 0] = sample

    def energy(self):
        """Squared l2 norm of the buffer contents, per stream."""
        return tap_dot(self.buffer, self.buffer)

    def reset(self) -> None:
        self.buffer.fill(0.0)


def push_and_dot(line: DelayLine, sample, taps) -> np.ndarray | float:
    """Push ``sample`` into ``line`` and return ``taps . line.buffer``.

    ``taps`` may be a single vector of length ``line.capacity`` or, for a
    batched line, one vector per stream.
    """
    taps = np.asarray(taps, dtype=np.float64)
    if taps.shape[-1] != line.capacity:
        raise ConfigurationError(
            f"tap length {taps.shape[-1]} does not match delay line capacity {line.capacity}"
        )
    line.push(sample)
    return tap_dot(taps, line.buffer)


class FIRStream:
    """Stateful single-input single-output FIR filter with zero initial state."""

    def __init__(self, taps, batch: int | None = None):
        self.taps = as_taps(taps)
        self.line = DelayLine(self.taps.size, batch)

    def step(self, sample):
        return push_and_dot(self.line, sample, self.taps)

    def process(self, samples) -> np.ndarray:
        """Filter a whole sequence; the time axis is the last axis of ``samples``."""
        samples = np.asarray(samples, dtype=np.float64)
        out = np.empty_like(samples)
        for n in range(samples.shape[-1]):
            out[..., n] = self.step(samples[..., n])
        return out

    def reset(self) -> None:
        self.line.reset()


def convolve_stream(taps, batch: int | None = None) -> FIRStream:
    """Return a streaming filter computing ``sum_k taps[k] u(n-k)``."""
    return FIRStream(taps, batch)
