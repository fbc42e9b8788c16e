"""Excitation signals, Hankel windows and initial-state sampling.

All randomness comes from ``numpy.random.Generator`` over the PCG64 bit
generator seeded with the config seed (see :data:`RNG_ALGORITHM`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import DimensionError

__all__ = [
    "RNG_ALGORITHM",
    "MultisineConfig",
    "StateSamplerConfig",
    "make_rng",
    "multisine",
    "hankel_sequences",
    "required_signal_length",
    "sample_states",
]

RNG_ALGORITHM = "numpy.random.PCG64"
_MAX_RESAMPLE = 1000


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class MultisineConfig:
    """Sum of equal-amplitude sinusoids rescaled to ``[lo, hi]``.

    ``band`` is given as a fraction of the Nyquist frequency (0.5
    cycles/sample), so ``(0, 1)`` covers the whole admissible range.
    """

    length: int
    lo: float = -5.0
    hi: float = 5.0
    num_sinusoids: int = 25
    band: tuple[float, float] = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if self.length < 1:
            raise ValueError("multisine length must be positive")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.num_sinusoids < 1:
            raise ValueError("num_sinusoids must be positive")
        b0, b1 = self.band
        if not 0.0 <= b0 < b1 <= 1.0:
            raise ValueError(f"degenerate or out-of-range band {self.band}; need 0 <= lo < hi <= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class StateSamplerConfig:
    count: int
    box_lo: tuple[float, ...] = field(default=(-2.5, -2.5))
    box_hi: tuple[float, ...] = field(default=(2.5, 2.5))
    seed: int = 0

    def __post_init__(self):
        lo = tuple(float(v) for v in self.box_lo)
        hi = tuple(float(v) for v in self.box_hi)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)
        if self.count < 1:
            raise ValueError("state count must be positive")
        if len(lo) != len(hi) or not lo:
            raise ValueError("box_lo and box_hi must be nonempty and of equal length")
        # a degenerate (zero-width) box is allowed; it can only yield one distinct state
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box_lo must not exceed box_hi: {lo} vs {hi}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def multisine(cfg: MultisineConfig) -> np.ndarray:
    """Generate ``s(t) = sum_r sin(2 pi f_r t + phi_r)``, rescaled to ``[lo, hi]``.

    Frequencies are uniform over ``band * 0.5`` cycles/sample and phases
    uniform over ``[0, 2 pi)``.  After rescaling the minimum equals ``lo``
    and the maximum equals ``hi``.
    """
    rng = make_rng(cfg.seed)
    f = rng.uniform(0.5 * cfg.band[0], 0.5 * cfg.band[1], size=cfg.num_sinusoids)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=cfg.num_sinusoids)
    t = np.arange(cfg.length, dtype=np.float64)
    s = np.sin(2.0 * np.pi * f[:, None] * t[None, :] + phi[:, None]).sum(axis=0)
    smin, smax = s.min(), s.max()
    if not smax > smin:
        raise ValueError("multisine is constant; increase length or widen the band")
    out = cfg.lo + (s - smin) / (smax - smin) * (cfg.hi - cfg.lo)
    out[np.argmax(s)] = cfg.hi
    out[np.argmin(s)] = cfg.lo
    return out


def hankel_sequences(signal, window: int, stride: int = 1, count: int | None = None) -> np.ndarray:
    """Overlapping windows of ``signal`` as rows.

    Row ``t`` is ``signal[t * stride : t * stride + window]`` flattened
    time-major (for multichannel signals of shape ``(length, m)`` each row
    has ``window * m`` entries).  With ``count`` only the first ``count``
    windows are returned.
    """
    sig = np.asarray(signal, dtype=np.float64)
    if sig.ndim == 1:
        sig = sig[:, None]
    if sig.ndim != 2:
        raise DimensionError("signal must be 1-D or (length, channels)")
    L, m = sig.shape
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be positive")
    if window > L:
        raise ValueError(f"window {window} exceeds signal length {L}")
    n_win = (L - window) // stride + 1
    if count is not None:
        if count > n_win:
            raise ValueError(f"requested {count} windows but signal only yields {n_win}")
        n_win = count
    idx = np.arange(n_win)[:, None] * stride + np.arange(window)[None, :]
    return sig[idx].reshape(n_win, window * m)


def required_signal_length(count: int, window: int, stride: int = 1) -> int:
    """Shortest signal that yields ``count`` windows."""
    return (count - 1) * stride + window


def sample_states(cfg: StateSamplerConfig) -> np.ndarray:
    """``count`` distinct states drawn uniformly from the box, shape ``(count, n)``."""
    rng = make_rng(cfg.seed)
    lo = np.asarray(cfg.box_lo)
    hi = np.asarray(cfg.box_hi)
    out = np.empty((cfg.count, lo.size))
    seen: set[bytes] = set()
    for i in range(cfg.count):
        for _ in range(_MAX_RESAMPLE):
            x = rng.uniform(lo, hi)
            key = x.tobytes()
            if key not in seen:
                break
        else:
            raise RuntimeError(
                f"could not draw a distinct state after {_MAX_RESAMPLE} attempts; "
                "the sampling box is too small for the requested count"
            )
        seen.add(key)
        out[i] = x
    return out
