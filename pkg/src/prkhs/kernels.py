"""Radial kernels on finite-dimensional real vectors and their product.

Both families are parameterized by a shape parameter ``sigma`` and depend on
the points only through ``||z1 - z2||^2 / sigma^2``:

* Gaussian:                  ``exp(-r2 / sigma^2)``
* Hardy reverse multiquadric: ``(1 + r2 / sigma^2) ** -0.5``

The squared distance is computed once per pair with the same floating-point
operations regardless of argument order, so every kernel is bit-exactly
symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "KernelFamily",
    "KernelConfig",
    "ProductKernelConfig",
    "DimensionError",
    "sq_distance",
    "sq_distances",
    "apply_profile",
    "eval_kernel",
    "eval_product",
    "cross_kernel",
]


class DimensionError(ValueError):
    """Raised when vectors or matrices have incompatible shapes."""


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    HARDY_RMQ = "hardy_rmq"


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family plus its (dimensionless) shape parameter ``sigma``."""

    family: KernelFamily
    sigma: float

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        sigma = float(self.sigma)
        if not (sigma > 0.0 and math.isfinite(sigma)):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelConfig":
        return cls(family=d["family"], sigma=d["sigma"])


@dataclass(frozen=True)
class ProductKernelConfig:
    """Input-space kernel ``ku`` and state-space kernel ``kx``."""

    ku: KernelConfig
    kx: KernelConfig

    def __post_init__(self):
        for name in ("ku", "kx"):
            if not isinstance(getattr(self, name), KernelConfig):
                raise TypeError(f"{name} must be a KernelConfig")

    def to_dict(self) -> dict:
        return {"ku": self.ku.to_dict(), "kx": self.kx.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ProductKernelConfig":
        return cls(ku=KernelConfig.from_dict(d["ku"]), kx=KernelConfig.from_dict(d["kx"]))


def _as_vector(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {z.shape}")
    return z


def sq_distance(z1, z2) -> float:
    """Squared Euclidean distance between two vectors of equal length."""
    a, b = _as_vector(z1), _as_vector(z2)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    d = a - b
    return float(np.sum(d * d))


def sq_distances(A, B) -> np.ndarray:
    """Pairwise squared distances between the rows of ``A`` and ``B``.

    Uses the explicit difference (not the ``|a|^2 + |b|^2 - 2ab`` expansion),
    which keeps zero distances exactly zero and ``D(A, B) == D(B, A).T``
    bit-for-bit.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError("expected 2-D point arrays (n_points, dim)")
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d = A[:, None, :] - B[None, :, :]
    return np.sum(d * d, axis=-1)


def apply_profile(cfg: KernelConfig, r2):
    """Map squared distances to kernel values for ``cfg``."""
    s = np.asarray(r2, dtype=np.float64) / (cfg.sigma * cfg.sigma)
    if cfg.family is KernelFamily.GAUSSIAN:
        return np.exp(-s)
    return 1.0 / np.sqrt(1.0 + s)


def eval_kernel(cfg: KernelConfig, z1, z2) -> float:
    """Evaluate ``k(z1, z2)``; the result lies in ``(0, 1]``.

    >>> eval_kernel(KernelConfig("hardy_rmq", 1.0), [0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    0.5
    """
    return float(apply_profile(cfg, sq_distance(z1, z2)))


def eval_product(cfg: ProductKernelConfig, u1, x1, u2, x2) -> float:
    """Product kernel ``ku(u1, u2) * kx(x1, x2)`` on input/state pairs."""
    return eval_kernel(cfg.ku, u1, u2) * eval_kernel(cfg.kx, x1, x2)


def cross_kernel(cfg: KernelConfig, A, B, block_rows: int | None = None) -> np.ndarray:
    """Kernel matrix ``[k(a_i, b_j)]`` between rows of ``A`` and rows of ``B``.

    Rows of ``A`` are processed in blocks to bound the size of the temporary
    difference tensor.  Entry values do not depend on the block size.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if block_rows is None:
        # ~32 MB of float64 per temporary
        block_rows = max(1, 4_000_000 // max(1, B.shape[0] * A.shape[1]))
    out = np.empty((A.shape[0], B.shape[0]))
    for start in range(0, A.shape[0], block_rows):
        stop = min(start + block_rows, A.shape[0])
        out[start:stop] = apply_profile(cfg, sq_distances(A[start:stop], B))
    return out
