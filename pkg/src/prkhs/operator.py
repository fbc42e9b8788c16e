"""Kernel interpolants of system operators ``(u, x) -> y``.

Two learners share the same minimum-norm interpolation formula
``G*(q) = Y K^{-1} k(q)``:

* :class:`ProductOperator` uses the product kernel ``ku(u, u') kx(x, x')`` on
  a full grid of training pairs.  Its Gram matrix is ``K_u (x) K_x`` and its
  vector-kernel ``k_u(u) (x) k_x(x)``, so the weights factor as
  ``(K_u^{-1} k_u(u)) (x) (K_x^{-1} k_x(x))`` and no ``T x T`` object with
  ``T = T_u T_x`` is ever formed.
* :class:`StandardOperator` uses one kernel on lifted points ``z = (x, u)``
  and a dense ``T x T`` Gram matrix.  It serves as the baseline.

Columns of ``Y`` for the product learner are ordered with the state index
fastest: column ``i * T_x + j`` holds the trajectory for ``(u_i, x_j)``.
This is the ordering that matches ``K_u (x) K_x``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .gram import (
    CholeskyFactor,
    as_points,
    build_gram,
    factorize,
    kron_matrix,
    kron_vector,
    solve,
)
from .kernels import DimensionError, KernelConfig, ProductKernelConfig, cross_kernel
from .metrics import CostCounters

__all__ = [
    "DUPLICATE_TOL",
    "DEFAULT_EXPLICIT_CAP",
    "DuplicatePointError",
    "Dataset",
    "ProductOperator",
    "StandardOperator",
    "fit_product",
    "predict_product",
    "predict_product_batch",
    "predict_product_explicit",
    "fit_standard",
    "predict_standard",
    "predict_standard_batch",
    "solve_fundamental",
    "lift",
    "grid_lifted_points",
    "save_operator",
    "load_operator",
]

DUPLICATE_TOL = 1e-12
DEFAULT_EXPLICIT_CAP = 4096


class DuplicatePointError(ValueError):
    """Two training points coincide (or nearly so)."""


def _check_distinct(P: np.ndarray, what: str) -> None:
    T, dim = P.shape
    step = max(1, 2_000_000 // max(1, T * dim))
    for start in range(0, T, step):
        blk = P[start:start + step]
        d = blk[:, None, :] - P[None, :, :]
        dist = np.sqrt(np.sum(d * d, axis=-1))
        for r in range(blk.shape[0]):
            i = start + r
            close = np.nonzero(dist[r, i + 1:] < DUPLICATE_TOL)[0]
            if close.size:
                j = i + 1 + int(close[0])
                raise DuplicatePointError(
                    f"{what} {i} and {j} are duplicates (distance {dist[r, j]:.3e} < {DUPLICATE_TOL:g})"
                )


@dataclass(frozen=True)
class Dataset:
    """Grid of training pairs and their observed output trajectories.

    ``u_points`` has shape ``(T_u, m (N+1))``, ``x_points`` shape
    ``(T_x, n)`` and ``Y`` shape ``(p (N+1), T_u T_x)``.
    """

    u_points: np.ndarray
    x_points: np.ndarray
    Y: np.ndarray
    N: int
    m: int
    n: int
    p: int

    def __post_init__(self):
        U = as_points(self.u_points)
        X = as_points(self.x_points)
        Y = np.asarray(self.Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        object.__setattr__(self, "u_points", U)
        object.__setattr__(self, "x_points", X)
        object.__setattr__(self, "Y", Y)
        if self.N < 0:
            raise ValueError("horizon N must be nonnegative")
        if U.shape[1] != self.m * (self.N + 1):
            raise DimensionError(f"input sequences must have m(N+1)={self.m * (self.N + 1)} entries, got {U.shape[1]}")
        if X.shape[1] != self.n:
            raise DimensionError(f"states must have n={self.n} entries, got {X.shape[1]}")
        if Y.shape != (self.n_y, U.shape[0] * X.shape[0]):
            raise DimensionError(f"Y must have shape {(self.n_y, U.shape[0] * X.shape[0])}, got {Y.shape}")
        _check_distinct(U, "input sequences")
        _check_distinct(X, "initial states")

    @property
    def T_u(self) -> int:
        return self.u_points.shape[0]

    @property
    def T_x(self) -> int:
        return self.x_points.shape[0]

    @property
    def n_y(self) -> int:
        return self.p * (self.N + 1)

    def column(self, i: int, j: int) -> np.ndarray:
        return self.Y[:, i * self.T_x + j]


@dataclass
class ProductOperator:
    dataset: Dataset
    cfg: ProductKernelConfig
    Ku: np.ndarray
    Kx: np.ndarray
    Fu: CholeskyFactor
    Fx: CholeskyFactor
    counters: CostCounters = field(default_factory=CostCounters)
    explicit_cap: int = DEFAULT_EXPLICIT_CAP

    @property
    def jitter(self) -> float:
        return self.Fu.jitter_used


@dataclass
class StandardOperator:
    z_points: np.ndarray
    Y: np.ndarray
    cfg: KernelConfig | ProductKernelConfig
    K: np.ndarray
    F: CholeskyFactor
    state_dim: int
    counters: CostCounters = field(default_factory=CostCounters)

    @property
    def T(self) -> int:
        return self.z_points.shape[0]


def fit_product(dataset: Dataset, cfg: ProductKernelConfig, jitter: float = 0.0,
                counters: CostCounters | None = None, threads: int = 1,
                explicit_cap: int = DEFAULT_EXPLICIT_CAP) -> ProductOperator:
    """Build and factorize ``K_u`` and ``K_x``; charges ``T_u^2 + T_x^2`` evaluations."""
    counters = counters if counters is not None else CostCounters()
    with counters.timed("gram_build_seconds"):
        Ku = build_gram(dataset.u_points, cfg.ku, counters, threads)
        Kx = build_gram(dataset.x_points, cfg.kx, counters, threads)
    with counters.timed("factorize_seconds"):
        Fu = factorize(Ku, jitter)
        Fx = factorize(Kx, jitter)
    return ProductOperator(dataset, cfg, Ku, Kx, Fu, Fx, counters, explicit_cap)


def _query_product(op: ProductOperator, U, X):
    d = op.dataset
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if U.shape[1] != d.u_points.shape[1]:
        raise DimensionError(f"input sequence must have {d.u_points.shape[1]} entries, got {U.shape[1]}")
    if X.shape[1] != d.n:
        raise DimensionError(f"state must have {d.n} entries, got {X.shape[1]}")
    if U.shape[0] != X.shape[0]:
        raise DimensionError(f"{U.shape[0]} input sequences but {X.shape[0]} states")
    ku = cross_kernel(op.cfg.ku, d.u_points, U)  # (T_u, Q)
    kx = cross_kernel(op.cfg.kx, d.x_points, X)  # (T_x, Q)
    op.counters.charge(U.shape[0] * (d.T_u + d.T_x))
    return ku, kx


def _product_weights(op: ProductOperator, u, x):
    ku, kx = _query_product(op, u, x)
    a = solve(op.Fu, ku[:, 0])
    b = solve(op.Fx, kx[:, 0])
    return kron_vector(a, b), ku[:, 0], kx[:, 0], a, b


def predict_product(op: ProductOperator, u, x) -> np.ndarray:
    """Predicted output trajectory ``Y g`` with ``g = (K_u^{-1} k_u) (x) (K_x^{-1} k_x)``."""
    with op.counters.timed("predict_seconds"):
        g = _product_weights(op, u, x)[0]
        return op.dataset.Y @ g


def predict_product_batch(op: ProductOperator, U, X) -> np.ndarray:
    """Predictions for paired queries ``(U[q], X[q])``; returns ``(Q, n_y)``.

    Works on ``Y`` reshaped to ``(n_y, T_u, T_x)`` so no length-``T`` weight
    vector is materialized per query.
    """
    with op.counters.timed("predict_seconds"):
        ku, kx = _query_product(op, U, X)
        A = solve(op.Fu, ku)
        B = solve(op.Fx, kx)
        d = op.dataset
        Y3 = d.Y.reshape(d.n_y, d.T_u, d.T_x)
        return np.einsum("nij,iq,jq->qn", Y3, A, B, optimize=True)


def predict_product_explicit(op: ProductOperator, u, x) -> np.ndarray:
    """Reference path: forms ``K_u (x) K_x`` densely and solves it.

    Only for small problems (``T_u T_x <= op.explicit_cap``).
    """
    d = op.dataset
    T = d.T_u * d.T_x
    if T > op.explicit_cap:
        raise ValueError(
            f"explicit Kronecker path limited to T_u*T_x <= {op.explicit_cap} (got {T}); "
            "use predict_product instead"
        )
    ku, kx = _query_product(op, u, x)
    # jitter is applied to each factor, so the product system is (K_u + jI) (x) (K_x + jI)
    K = kron_matrix(op.Ku + op.jitter * np.eye(d.T_u), op.Kx + op.jitter * np.eye(d.T_x))
    k = kron_vector(ku[:, 0], kx[:, 0])
    g = np.linalg.solve(K, k)
    return d.Y @ g


def lift(x, u) -> np.ndarray:
    """Lifted point ``z = (x, u)``."""
    return np.concatenate([np.ravel(np.asarray(x, dtype=np.float64)), np.ravel(np.asarray(u, dtype=np.float64))])


def grid_lifted_points(dataset: Dataset) -> np.ndarray:
    """All ``(x_j, u_i)`` lifted points in the product column order."""
    U, X = dataset.u_points, dataset.x_points
    Tu, Tx = U.shape[0], X.shape[0]
    return np.hstack([np.tile(X, (Tu, 1)), np.repeat(U, Tx, axis=0)])


def _lifted_kernel(cfg, Z1, Z2, state_dim: int) -> np.ndarray:
    if isinstance(cfg, ProductKernelConfig):
        return (cross_kernel(cfg.ku, Z1[:, state_dim:], Z2[:, state_dim:])
                * cross_kernel(cfg.kx, Z1[:, :state_dim], Z2[:, :state_dim]))
    return cross_kernel(cfg, Z1, Z2)


def fit_standard(z_points, Y, cfg: KernelConfig | ProductKernelConfig, jitter: float = 0.0,
                 state_dim: int | None = None, counters: CostCounters | None = None,
                 threads: int = 1) -> StandardOperator:
    """Dense interpolant on lifted points; charges ``T^2`` evaluations.

    ``cfg`` may be a :class:`ProductKernelConfig`, in which case ``state_dim``
    says where each lifted point splits into ``(x, u)``.
    """
    Z = as_points(z_points)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[1] != Z.shape[0]:
        raise DimensionError(f"Y has {Y.shape[1]} columns for {Z.shape[0]} lifted points")
    if isinstance(cfg, ProductKernelConfig) and state_dim is None:
        raise ValueError("state_dim is required with a product kernel")
    _check_distinct(Z, "lifted points")
    counters = counters if counters is not None else CostCounters()
    T = Z.shape[0]
    with counters.timed("gram_build_seconds"):
        if isinstance(cfg, ProductKernelConfig):
            K = _lifted_kernel(cfg, Z, Z, state_dim)
            counters.charge(T * T)
        else:
            K = build_gram(Z, cfg, counters, threads)
    with counters.timed("factorize_seconds"):
        F = factorize(K, jitter)
    return StandardOperator(Z, Y, cfg, K, F, -1 if state_dim is None else int(state_dim), counters)


def _standard_query(op: StandardOperator, u, x) -> np.ndarray:
    U = np.atleast_2d(np.asarray(u, dtype=np.float64))
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if U.shape[0] != X.shape[0]:
        raise DimensionError(f"{U.shape[0]} input sequences but {X.shape[0]} states")
    Zq = np.hstack([X, U])
    if Zq.shape[1] != op.z_points.shape[1]:
        raise DimensionError(f"lifted query has {Zq.shape[1]} entries, model expects {op.z_points.shape[1]}")
    if op.state_dim >= 0 and X.shape[1] != op.state_dim:
        raise DimensionError(f"state must have {op.state_dim} entries, got {X.shape[1]}")
    k = _lifted_kernel(op.cfg, op.z_points, Zq, op.state_dim)
    op.counters.charge(op.T * Zq.shape[0])
    return k


def predict_standard(op: StandardOperator, u, x) -> np.ndarray:
    with op.counters.timed("predict_seconds"):
        g = solve(op.F, _standard_query(op, u, x)[:, 0])
        return op.Y @ g


def predict_standard_batch(op: StandardOperator, U, X) -> np.ndarray:
    with op.counters.timed("predict_seconds"):
        k = _standard_query(op, U, X)
        return (op.Y @ solve(op.F, k)).T


def solve_fundamental(op: ProductOperator | StandardOperator, u, x):
    """Solve ``K g = k(u, x)``; returns ``(g, ||K g - k||_inf)``.

    ``K`` is the (jittered) Gram matrix actually factorized.  For the product
    learner the residual is evaluated through ``(A (x) B)(a (x) b) =
    (A a) (x) (B b)`` without forming ``K_u (x) K_x``.
    """
    if isinstance(op, ProductOperator):
        g, ku, kx, a, b = _product_weights(op, u, x)
        j = op.jitter
        Ra = op.Ku @ a + j * a
        Rb = op.Kx @ b + j * b
        residual = np.max(np.abs(kron_vector(Ra, Rb) - kron_vector(ku, kx)))
        return g, float(residual)
    k = _standard_query(op, u, x)[:, 0]
    g = solve(op.F, k)
    residual = np.max(np.abs(op.K @ g + op.F.jitter_used * g - k))
    return g, float(residual)


# -- persistence --------------------------------------------------------------

_FORMAT_VERSION = 1


def _cfg_to_dict(cfg):
    if isinstance(cfg, ProductKernelConfig):
        return {"type": "product", **cfg.to_dict()}
    return {"type": "single", **cfg.to_dict()}


def _cfg_from_dict(d):
    if d.get("type") == "product":
        return ProductKernelConfig.from_dict(d)
    return KernelConfig.from_dict(d)


def _rows(M) -> list:
    return [[float(v) for v in row] for row in np.atleast_2d(M)]


def operator_to_dict(op) -> dict:
    if isinstance(op, ProductOperator):
        d = op.dataset
        return {
            "format": _FORMAT_VERSION,
            "approach": "product",
            "kernel": _cfg_to_dict(op.cfg),
            "jitter": op.jitter,
            "N": d.N, "m": d.m, "n": d.n, "p": d.p,
            "u_points": _rows(d.u_points),
            "x_points": _rows(d.x_points),
            "Y": _rows(d.Y),
        }
    return {
        "format": _FORMAT_VERSION,
        "approach": "standard",
        "kernel": _cfg_to_dict(op.cfg),
        "jitter": op.F.jitter_used,
        "state_dim": op.state_dim,
        "z_points": _rows(op.z_points),
        "Y": _rows(op.Y),
    }


def operator_from_dict(obj: dict, counters: CostCounters | None = None, threads: int = 1):
    """Rebuild a fitted operator; Gram matrices and factors are recomputed."""
    cfg = _cfg_from_dict(obj["kernel"])
    if obj["approach"] == "product":
        ds = Dataset(np.array(obj["u_points"]), np.array(obj["x_points"]), np.array(obj["Y"]),
                     N=obj["N"], m=obj["m"], n=obj["n"], p=obj["p"])
        return fit_product(ds, cfg, obj["jitter"], counters, threads)
    if obj["approach"] == "standard":
        sd = obj["state_dim"]
        return fit_standard(np.array(obj["z_points"]), np.array(obj["Y"]), cfg, obj["jitter"],
                            state_dim=None if sd < 0 else sd, counters=counters, threads=threads)
    raise ValueError(f"unknown approach {obj['approach']!r}")


def save_operator(op, path) -> None:
    with open(path, "w") as fh:
        json.dump(operator_to_dict(op), fh)
        fh.write("\n")


def load_operator(path, counters: CostCounters | None = None, threads: int = 1):
    with open(path) as fh:
        return operator_from_dict(json.load(fh), counters, threads)
