"""Validation metrics, kernel-evaluation accounting and timing."""

from __future__ import annotations

import csv
import json
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CostCounters",
    "RmsReport",
    "rms_per_step",
    "rms_report",
    "count_standard_cost",
    "write_report_json",
    "write_report_csv",
]

_UINT64_MAX = 2**64 - 1


@dataclass
class CostCounters:
    """Kernel-evaluation count and wall-clock timings for one run.

    All fields only ever grow.  ``charge`` and ``add_time`` are guarded by a
    lock so totals stay exact when Gram assembly runs on several threads.
    """

    kernel_evals: int = 0
    gram_build_seconds: float = 0.0
    factorize_seconds: float = 0.0
    predict_seconds: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def charge(self, n: int) -> None:
        if n < 0:
            raise ValueError("kernel evaluation charge must be nonnegative")
        with self._lock:
            self.kernel_evals += int(n)

    def add_time(self, name: str, seconds: float) -> None:
        if name not in ("gram_build_seconds", "factorize_seconds", "predict_seconds"):
            raise KeyError(name)
        with self._lock:
            setattr(self, name, getattr(self, name) + max(0.0, seconds))

    @contextmanager
    def timed(self, name: str):
        t0 = time.monotonic()
        try:
            yield
        finally:
            self.add_time(name, time.monotonic() - t0)

    def to_dict(self) -> dict:
        return {
            "kernel_evals": self.kernel_evals,
            "gram_build_seconds": self.gram_build_seconds,
            "factorize_seconds": self.factorize_seconds,
            "predict_seconds": self.predict_seconds,
        }


@dataclass
class RmsReport:
    """Per-step RMS errors.

    ``per_step[d][k]`` is the RMS error of output dimension ``d`` at time
    step ``k`` across all rollouts.
    """

    per_step: np.ndarray
    overall: float
    n_rollouts: int

    def to_dict(self) -> dict:
        return {
            "per_step": [[float(v) for v in row] for row in self.per_step],
            "overall": float(self.overall),
            "n_rollouts": int(self.n_rollouts),
        }


def _stack(trajs, name):
    arr = np.asarray(trajs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a list of flattened trajectories")
    return arr


def _squared_errors(predictions, truths, p: int) -> np.ndarray:
    pred = _stack(predictions, "predictions")
    true = _stack(truths, "truths")
    if pred.shape[0] == 0 or true.shape[0] == 0:
        raise ValueError("need at least one rollout")
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    if p < 1 or pred.shape[1] % p:
        raise ValueError(f"trajectory length {pred.shape[1]} is not a multiple of p={p}")
    err = (pred - true).reshape(pred.shape[0], -1, p)
    return err * err


def rms_per_step(predictions, truths, dim: int, p: int) -> np.ndarray:
    """RMS error at each time step for output dimension ``dim``.

    Trajectories are flattened time-major, ``(y(0), ..., y(N))`` with each
    ``y(k)`` of length ``p``.  Entry ``k`` of the result is
    ``sqrt(mean_r (pred_r[k, dim] - truth_r[k, dim])**2)``.
    """
    sq = _squared_errors(predictions, truths, p)
    if not 0 <= dim < p:
        raise ValueError(f"dim {dim} out of range for p={p}")
    return np.sqrt(sq[:, :, dim].mean(axis=0))


def rms_report(predictions, truths, p: int) -> RmsReport:
    sq = _squared_errors(predictions, truths, p)
    mse = sq.mean(axis=0).T  # (p, N+1)
    return RmsReport(per_step=np.sqrt(mse), overall=float(np.sqrt(mse.mean())), n_rollouts=sq.shape[0])


def count_standard_cost(T: int) -> int:
    """Kernel evaluations needed to build a dense ``T x T`` Gram matrix."""
    T = int(T)
    if T < 1:
        raise ValueError("T must be >= 1")
    cost = T * T
    if cost > _UINT64_MAX:
        raise OverflowError(f"T^2 for T={T} does not fit in an unsigned 64-bit counter")
    return cost


def write_report_json(path, report: RmsReport, counters: CostCounters | None = None, extra=None):
    payload = report.to_dict()
    payload["counters"] = counters.to_dict() if counters is not None else {}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(path, report: RmsReport):
    """Plot-ready table: ``step, rms_x1, rms_x2, ...``."""
    p, n_steps = report.per_step.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step"] + [f"rms_x{d + 1}" for d in range(p)])
        for k in range(n_steps):
            w.writerow([k] + [repr(float(report.per_step[d, k])) for d in range(p)])

