"""Discrete-time data-generating systems and trajectory simulation.

Sequences are flattened time-major: an input sequence over horizon ``N`` is
``(u(0), ..., u(N))`` with ``m`` entries per step, an output trajectory is
``(y(0), ..., y(N))`` with ``p`` entries per step.

``y(0)`` is the output of the initial state and ``y(k)`` the output after
applying ``u(0), ..., u(k-1)``.  The last input ``u(N)`` is part of the
sequence (so the input space has dimension ``m * (N + 1)``) but is never
consumed by the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import DimensionError

__all__ = [
    "SystemModel",
    "VanDerPolParams",
    "PendulumParams",
    "vdp_step",
    "van_der_pol",
    "damped_pendulum",
    "make_system",
    "simulate",
    "simulate_batch",
    "simulate_long",
    "generate_dataset",
]


@dataclass(frozen=True)
class SystemModel:
    """A deterministic discrete-time system ``x+ = step(x, u)``, ``y = output(x)``.

    ``step`` and ``output`` must accept batched arrays: states of shape
    ``(B, n)`` and inputs of shape ``(B, m)``.
    """

    state_dim: int
    input_dim: int
    output_dim: int
    step: Callable[[np.ndarray, np.ndarray], np.ndarray]
    output: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"


@dataclass(frozen=True)
class VanDerPolParams:
    mu: float = 1.0
    Ts: float = 0.1

    def __post_init__(self):
        if not self.Ts > 0:
            raise ValueError(f"sampling period Ts must be positive, got {self.Ts!r}")


@dataclass(frozen=True)
class PendulumParams:
    damping: float = 0.5
    Ts: float = 0.05

    def __post_init__(self):
        if not self.Ts > 0:
            raise ValueError(f"sampling period Ts must be positive, got {self.Ts!r}")


def _vdp_step_batch(x: np.ndarray, u: np.ndarray, params: VanDerPolParams) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    u0 = u[..., 0]
    out = np.empty_like(x)
    out[..., 0] = x1 + params.Ts * x2
    out[..., 1] = x2 + params.Ts * (params.mu * (1.0 - x1 * x1) * x2 - x1 + u0)
    return out


def vdp_step(x, u, params: VanDerPolParams = VanDerPolParams()) -> np.ndarray:
    """One forward-Euler step of the Van der Pol oscillator.

    ``x1+ = x1 + Ts x2``, ``x2+ = x2 + Ts (mu (1 - x1^2) x2 - x1 + u)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2,):
        raise DimensionError(f"Van der Pol state must have 2 entries, got shape {x.shape}")
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    return _vdp_step_batch(x[None, :], u[None, :1], params)[0]


def van_der_pol(params: VanDerPolParams = VanDerPolParams()) -> SystemModel:
    return SystemModel(
        state_dim=2,
        input_dim=1,
        output_dim=2,
        step=lambda x, u: _vdp_step_batch(x, u, params),
        output=lambda x: x.copy(),
        name="van_der_pol",
    )


def damped_pendulum(params: PendulumParams = PendulumParams()) -> SystemModel:
    """Euler-discretized damped pendulum with torque input; only the angle is measured."""

    def step(x, u):
        th, om = x[..., 0], x[..., 1]
        out = np.empty_like(x)
        out[..., 0] = th + params.Ts * om
        out[..., 1] = om + params.Ts * (-np.sin(th) - params.damping * om + u[..., 0])
        return out

    return SystemModel(
        state_dim=2,
        input_dim=1,
        output_dim=1,
        step=step,
        output=lambda x: x[..., :1].copy(),
        name="damped_pendulum",
    )


def make_system(name: str, **params) -> SystemModel:
    if name == "van_der_pol":
        return van_der_pol(VanDerPolParams(**params))
    if name == "damped_pendulum":
        return damped_pendulum(PendulumParams(**params))
    raise ValueError(f"unknown system {name!r} (expected 'van_der_pol' or 'damped_pendulum')")


def simulate_batch(model: SystemModel, X0, U, N: int) -> np.ndarray:
    """Simulate ``B`` independent rollouts at once.

    ``X0`` has shape ``(B, n)`` and ``U`` shape ``(B, m * (N + 1))``.
    Returns flattened output trajectories of shape ``(B, p * (N + 1))``.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=np.float64))
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    n, m, p = model.state_dim, model.input_dim, model.output_dim
    if N < 0:
        raise ValueError("horizon N must be nonnegative")
    if X0.shape[1] != n:
        raise DimensionError(f"initial state must have {n} entries, got {X0.shape[1]}")
    if U.shape[1] != m * (N + 1):
        raise DimensionError(f"input sequence must have m*(N+1)={m * (N + 1)} entries, got {U.shape[1]}")
    if U.shape[0] != X0.shape[0]:
        raise DimensionError(f"{X0.shape[0]} initial states but {U.shape[0]} input sequences")
    B = X0.shape[0]
    U3 = U.reshape(B, N + 1, m)
    Y = np.empty((B, N + 1, p))
    x = X0.copy()
    Y[:, 0] = model.output(x)
    for k in range(N):
        x = model.step(x, U3[:, k])
        Y[:, k + 1] = model.output(x)
    return Y.reshape(B, p * (N + 1))


def simulate(model: SystemModel, x0, useq, N: int) -> np.ndarray:
    """Output trajectory ``(y(0), ..., y(N))`` from ``x0`` under ``useq``."""
    x0 = np.asarray(x0, dtype=np.float64)
    useq = np.asarray(useq, dtype=np.float64)
    if x0.ndim != 1 or useq.ndim != 1:
        raise DimensionError("simulate expects a single state vector and a single input sequence")
    return simulate_batch(model, x0[None, :], useq[None, :], N)[0]


def simulate_long(model: SystemModel, x0, signal, steps: int | None = None):
    """Run the system along a long input signal.

    Returns ``(states, outputs)`` where ``states[t]`` is the state before
    ``signal[t]`` is applied; ``len(states) == len(signal)``.
    """
    sig = np.asarray(signal, dtype=np.float64)
    if sig.ndim == 1:
        sig = sig[:, None]
    if sig.shape[1] != model.input_dim:
        raise DimensionError(f"signal must have {model.input_dim} channels, got {sig.shape[1]}")
    L = sig.shape[0] if steps is None else steps
    states = np.empty((L, model.state_dim))
    x = np.asarray(x0, dtype=np.float64)[None, :]
    for t in range(L):
        states[t] = x[0]
        x = model.step(x, sig[t][None, :])
    outputs = model.output(states)
    return states, outputs


def generate_dataset(model: SystemModel, x_points, u_points, N: int):
    """Simulate every ``(u_i, x_j)`` pair of the training grid.

    Column ``i * T_x + j`` of the returned dataset's ``Y`` is
    ``simulate(model, x_points[j], u_points[i], N)``.
    """
    from .gram import as_points
    from .operator import Dataset

    X = as_points(x_points)
    U = as_points(u_points)
    Tu, Tx = U.shape[0], X.shape[0]
    X0 = np.tile(X, (Tu, 1))
    UU = np.repeat(U, Tx, axis=0)
    Y = simulate_batch(model, X0, UU, N).T
    return Dataset(U, X, Y, N=N, m=model.input_dim, n=model.state_dim, p=model.output_dim)
