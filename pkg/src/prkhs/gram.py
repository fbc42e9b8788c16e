"""Gram matrices, Cholesky factorization with jitter, Kronecker utilities."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import DimensionError, KernelConfig, apply_profile, sq_distances
from .metrics import CostCounters

__all__ = [
    "SingularGramError",
    "CholeskyFactor",
    "as_points",
    "build_gram",
    "min_eigenvalue",
    "factorize",
    "solve",
    "kron_matrix",
    "kron_vector",
    "write_matrix_csv",
]


class SingularGramError(np.linalg.LinAlgError):
    """Cholesky factorization failed; carries the smallest eigenvalue seen."""

    def __init__(self, message: str, min_eig: float, jitter: float):
        super().__init__(message)
        self.min_eig = min_eig
        self.jitter = jitter


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower Cholesky factor of ``K + jitter_used * I``."""

    lower: np.ndarray
    jitter_used: float = 0.0

    @property
    def size(self) -> int:
        return self.lower.shape[0]

    def recompose(self) -> np.ndarray:
        return self.lower @ self.lower.T


def as_points(points) -> np.ndarray:
    """Stack a list of equal-length vectors into a ``(T, d)`` array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=np.float64)
    else:
        points = list(points)
        if not points:
            raise ValueError("point list is empty")
        lengths = {np.size(p) for p in points}
        if len(lengths) != 1:
            raise DimensionError(f"points have differing dimensions: {sorted(lengths)}")
        arr = np.asarray([np.ravel(p) for p in points], dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"expected (n_points, dim) array, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("point list is empty")
    return arr


def build_gram(points, cfg: KernelConfig, counters: CostCounters | None = None,
               threads: int = 1) -> np.ndarray:
    """Gram matrix ``K[i, j] = k(points[i], points[j])``.

    Charges ``T**2`` kernel evaluations to ``counters``.  With ``threads > 1``
    row blocks are filled concurrently; each block writes to its own rows so
    the result does not depend on the thread count.
    """
    P = as_points(points)
    T, d = P.shape
    K = np.empty((T, T))
    block = max(1, min(T, 4_000_000 // max(1, T * d)))
    starts = range(0, T, block)

    def fill(start):
        stop = min(start + block, T)
        K[start:stop] = apply_profile(cfg, sq_distances(P[start:stop], P))

    if threads > 1 and T > block:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    if counters is not None:
        counters.charge(T * T)
    return K


def min_eigenvalue(K) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    K = np.asarray(K, dtype=np.float64)
    return float(scipy.linalg.eigvalsh(K, subset_by_index=[0, 0])[0])


def factorize(K, jitter: float = 0.0) -> CholeskyFactor:
    """Cholesky factor of ``K + jitter * I``.

    Raises :class:`SingularGramError` when the shifted matrix is not
    numerically positive definite.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionError(f"Gram matrix must be square, got shape {K.shape}")
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    A = K + jitter * np.eye(K.shape[0]) if jitter else K
    try:
        L = scipy.linalg.cholesky(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        lam = min_eigenvalue(K)
        raise SingularGramError(
            f"Gram matrix of size {K.shape[0]} is not positive definite with jitter={jitter:g} "
            f"(min eigenvalue {lam:.3e}); increase the jitter or remove duplicate / "
            f"near-duplicate training points",
            min_eig=lam,
            jitter=jitter,
        ) from None
    return CholeskyFactor(lower=L, jitter_used=float(jitter))


def solve(factor: CholeskyFactor, b) -> np.ndarray:
    """``(K + jitter I)^{-1} b`` by forward and back substitution."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != factor.size:
        raise DimensionError(f"right-hand side has {b.shape[0]} rows, factor is {factor.size}x{factor.size}")
    z = scipy.linalg.solve_triangular(factor.lower, b, lower=True)
    return scipy.linalg.solve_triangular(factor.lower, z, lower=True, trans="T")


def kron_matrix(A, B) -> np.ndarray:
    """Kronecker product: block ``(i, j)`` of the result is ``A[i, j] * B``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    (ra, ca), (rb, cb) = A.shape, B.shape
    return (A[:, None, :, None] * B[None, :, None, :]).reshape(ra * rb, ca * cb)


def kron_vector(a, b) -> np.ndarray:
    """``out[i * len(b) + j] = a[i] * b[j]`` (0-based)."""
    a = np.ravel(np.asarray(a, dtype=np.float64))
    b = np.ravel(np.asarray(b, dtype=np.float64))
    return (a[:, None] * b[None, :]).ravel()


def write_matrix_csv(path, M) -> None:
    """Debug dump, row-major, one row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
