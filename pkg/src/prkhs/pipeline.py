"""End-to-end experiment steps shared by the CLI and the test-suite.

File layout written by :func:`write_product_data` (all CSVs use the shortest
round-trip decimal form of each float, so reruns are byte-identical):

``signal.csv``        single column ``u`` (``u_0, u_1, ...`` for m > 1)
``u_windows.csv``     one input sequence per row, columns ``u_k_c``
``states.csv``        one initial state per row, columns ``x_d``
``trajectories.csv``  ``i, j`` then ``y_k_d`` for every ``(u_i, x_j)``
``manifest.json``     resolved config, RNG algorithm and seeds
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .metrics import CostCounters, RmsReport, count_standard_cost, rms_report
from .operator import (
    Dataset,
    ProductOperator,
    StandardOperator,
    fit_product,
    fit_standard,
    grid_lifted_points,
    predict_product_batch,
    predict_standard_batch,
)
from .signals import hankel_sequences, multisine, required_signal_length, sample_states
from .systems import generate_dataset, simulate_batch, simulate_long

__all__ = [
    "product_data",
    "standard_data",
    "validation_pairs",
    "write_product_data",
    "read_product_data",
    "write_standard_data",
    "read_standard_data",
    "predict_batch",
    "validate",
    "compare",
    "StandardData",
]


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [list(map(float, row)) for row in r if row]
    return header, np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))


def _seq_header(prefix: str, steps: int, width: int) -> list[str]:
    return [f"{prefix}_{k}_{c}" for k in range(steps) for c in range(width)]


# -- data generation ----------------------------------------------------------

def product_data(cfg: ExperimentConfig, T_u: int | None = None, T_x: int | None = None):
    """Training signal, input windows, states and simulated dataset for a config."""
    T_u = cfg.T_u if T_u is None else T_u
    T_x = cfg.T_x if T_x is None else T_x
    model = cfg.system()
    stride = cfg.raw["hankel_stride"]
    length = required_signal_length(T_u, cfg.window, stride)
    signal = multisine(cfg.multisine(length))
    U = hankel_sequences(signal, cfg.window, stride=stride, count=T_u)
    X = sample_states(cfg.states(count=T_x))
    ds = generate_dataset(model, X, U, cfg.N)
    return signal, ds


@dataclass(frozen=True)
class StandardData:
    """Lifted training set for the single-kernel baseline."""

    z_points: np.ndarray  # (T, n + m(N+1)), rows (x, u)
    Y: np.ndarray  # (n_y, T)
    signal: np.ndarray | None
    state_dim: int


def standard_data(cfg: ExperimentConfig) -> StandardData:
    """Baseline data according to ``standard.data``.

    ``trajectory``: one long multisine drives the system from ``standard.x0``;
    every Hankel window ``t`` gives the lifted point ``(x(t), u(t..t+N))`` and
    the observed ``y(t..t+N)``.  A signal of length ``L`` yields ``L - N``
    points.
    ``grid``: the lifted points are the product training grid itself.
    """
    model = cfg.system()
    st = cfg.raw["standard"]
    if st["data"] == "grid":
        _, ds = product_data(cfg)
        return StandardData(grid_lifted_points(ds), ds.Y, None, ds.n)
    T = st["num_points"]
    length = T + cfg.N
    signal = multisine(cfg.multisine(length, seed=st["multisine_seed"]))
    states, outputs = simulate_long(model, np.asarray(st["x0"], dtype=np.float64), signal)
    U = hankel_sequences(signal, cfg.window)
    Yw = hankel_sequences(outputs, cfg.window)
    Z = np.hstack([states[:T], U])
    return StandardData(Z, Yw.T.copy(), signal, model.state_dim)


def validation_pairs(cfg: ExperimentConfig):
    """Fresh ``(U, X, truth)`` rollouts drawn from the validation seeds."""
    val = cfg.raw["validation"]
    R = val["n_rollouts"]
    length = required_signal_length(R, cfg.window, val["stride"])
    signal = multisine(cfg.multisine(length, seed=val["multisine_seed"]))
    U = hankel_sequences(signal, cfg.window, stride=val["stride"], count=R)
    X = sample_states(cfg.states(count=R, seed=val["state_seed"]))
    truth = simulate_batch(cfg.system(), X, U, cfg.N)
    return U, X, truth


# -- file IO ------------------------------------------------------------------

def write_product_data(cfg: ExperimentConfig, out_dir, signal: np.ndarray, ds: Dataset) -> None:
    os.makedirs(out_dir, exist_ok=True)
    sig = signal.reshape(signal.shape[0], -1)
    sig_header = ["u"] if sig.shape[1] == 1 else [f"u_{c}" for c in range(sig.shape[1])]
    _write_csv(os.path.join(out_dir, "signal.csv"), sig_header, ([_fmt(v) for v in row] for row in sig))
    _write_csv(os.path.join(out_dir, "u_windows.csv"), _seq_header("u", ds.N + 1, ds.m),
               ([_fmt(v) for v in row] for row in ds.u_points))
    _write_csv(os.path.join(out_dir, "states.csv"), [f"x_{d}" for d in range(ds.n)],
               ([_fmt(v) for v in row] for row in ds.x_points))
    Tx = ds.T_x
    _write_csv(
        os.path.join(out_dir, "trajectories.csv"),
        ["i", "j"] + _seq_header("y", ds.N + 1, ds.p),
        ([str(c // Tx), str(c % Tx)] + [_fmt(v) for v in ds.Y[:, c]] for c in range(ds.Y.shape[1])),
    )
    write_manifest(cfg, out_dir, {"kind": "product", "T_u": ds.T_u, "T_x": ds.T_x,
                                  "signal_length": int(sig.shape[0])})


def write_manifest(cfg: ExperimentConfig, out_dir, extra: dict) -> None:
    manifest = {"config": cfg.to_manifest(), **extra}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_product_data(data_dir, N: int, m: int, n: int, p: int) -> Dataset:
    _, U = _read_csv(os.path.join(data_dir, "u_windows.csv"))
    _, X = _read_csv(os.path.join(data_dir, "states.csv"))
    _, T = _read_csv(os.path.join(data_dir, "trajectories.csv"))
    Tu, Tx = U.shape[0], X.shape[0]
    if T.shape[0] != Tu * Tx:
        raise ValueError(f"trajectories.csv has {T.shape[0]} rows, expected T_u*T_x = {Tu * Tx}")
    idx = T[:, 0].astype(int) * Tx + T[:, 1].astype(int)
    Y = np.empty((T.shape[1] - 2, Tu * Tx))
    Y[:, idx] = T[:, 2:].T
    return Dataset(U, X, Y, N=N, m=m, n=n, p=p)


def write_standard_data(cfg: ExperimentConfig, out_dir, data: StandardData, p: int) -> None:
    os.makedirs(out_dir, exist_ok=True)
    n = data.state_dim
    m = (data.z_points.shape[1] - n) // (cfg.N + 1)
    header = (["t"] + [f"x_{d}" for d in range(n)] + _seq_header("u", cfg.N + 1, m)
              + _seq_header("y", cfg.N + 1, p))
    _write_csv(
        os.path.join(out_dir, "standard_lifted.csv"), header,
        ([str(t)] + [_fmt(v) for v in data.z_points[t]] + [_fmt(v) for v in data.Y[:, t]]
         for t in range(data.z_points.shape[0])),
    )
    if data.signal is not None:
        _write_csv(os.path.join(out_dir, "standard_signal.csv"), ["u"],
                   ([_fmt(v)] for v in np.ravel(data.signal)))
    write_manifest(cfg, out_dir, {"kind": "standard", "num_points": int(data.z_points.shape[0])})


def read_standard_data(data_dir, n: int, n_y: int) -> StandardData:
    header, A = _read_csv(os.path.join(data_dir, "standard_lifted.csv"))
    n_z = A.shape[1] - 1 - n_y
    return StandardData(A[:, 1:1 + n_z], A[:, 1 + n_z:].T.copy(), None, n)


# -- evaluation ---------------------------------------------------------------

def predict_batch(op, U, X) -> np.ndarray:
    if isinstance(op, ProductOperator):
        return predict_product_batch(op, U, X)
    return predict_standard_batch(op, U, X)


def _training_pairs(op, R: int):
    """``R`` (u, x, truth) triples taken from the operator's own training set."""
    if isinstance(op, ProductOperator):
        d = op.dataset
        cols = np.arange(R) % (d.T_u * d.T_x)
        i, j = cols // d.T_x, cols % d.T_x
        return d.u_points[i], d.x_points[j], d.Y[:, cols].T
    cols = np.arange(R) % op.T
    n = op.state_dim if op.state_dim >= 0 else None
    Z = op.z_points[cols]
    return Z[:, n:], Z[:, :n], op.Y[:, cols].T


def _model_dims(op):
    if isinstance(op, ProductOperator):
        d = op.dataset
        return d.N, d.n, d.p
    n_y = op.Y.shape[0]
    return None, op.state_dim, n_y


def validate(op, cfg: ExperimentConfig, from_training: bool | None = None) -> RmsReport:
    """RMS report of ``op`` on fresh validation rollouts (or on training pairs)."""
    model = cfg.system()
    N, n, n_y = _model_dims(op)
    if N is not None and N != cfg.N:
        raise ValueError(f"model horizon N={N} does not match config N={cfg.N}")
    if n not in (-1, model.state_dim):
        raise ValueError(f"model state dimension {n} does not match system '{model.name}'")
    if isinstance(op, StandardOperator) and n_y != model.output_dim * (cfg.N + 1):
        raise ValueError("model output length does not match config horizon")
    if from_training is None:
        from_training = bool(cfg.raw["validation"]["from_training"])
    R = cfg.raw["validation"]["n_rollouts"]
    if R < 1:
        raise ValueError("need at least one validation rollout")
    if from_training:
        U, X, truth = _training_pairs(op, R)
    else:
        U, X, truth = validation_pairs(cfg)
    pred = predict_batch(op, U, X)
    return rms_report(pred, truth, model.output_dim)


def fit_from_config(cfg: ExperimentConfig, approach: str = "product", counters: CostCounters | None = None):
    """Generate data and fit the requested learner in memory."""
    if approach == "product":
        _, ds = product_data(cfg)
        return fit_product(ds, cfg.product_kernel(), cfg.jitter, counters, cfg.threads,
                           explicit_cap=cfg.raw["explicit_cap"])
    data = standard_data(cfg)
    return fit_standard(data.z_points, data.Y, cfg.standard_kernel(), cfg.jitter,
                        state_dim=data.state_dim, counters=counters, threads=cfg.threads)


def compare(cfg: ExperimentConfig) -> dict:
    """Fit both learners on matched budgets and tabulate per-step RMS.

    When the baseline would exceed ``standard.max_points`` it is not fitted;
    its cost is reported as a projection instead.
    """
    prod_counters = CostCounters()
    prod = fit_from_config(cfg, "product", prod_counters)
    prod_rep = validate(prod, cfg, from_training=False)
    st = cfg.raw["standard"]
    T_std = prod.dataset.T_u * prod.dataset.T_x if st["data"] == "grid" else st["num_points"]
    result = {
        "product": {
            "status": "fitted",
            "report": prod_rep,
            "counters": prod_counters,
            "lifted_points": prod.dataset.T_u * prod.dataset.T_x,
        },
        "standard": {"lifted_points": T_std, "projected_kernel_evals": count_standard_cost(T_std)},
    }
    if T_std > st["max_points"]:
        result["standard"].update(status="cost-projected", report=None, counters=None)
        return result
    std_counters = CostCounters()
    std = fit_from_config(cfg, "standard", std_counters)
    result["standard"].update(status="fitted", report=validate(std, cfg, from_training=False),
                              counters=std_counters)
    return result


def write_compare(out_dir, result: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    prod_rep: RmsReport = result["product"]["report"]
    std_rep: RmsReport | None = result["standard"]["report"]
    p, steps = prod_rep.per_step.shape
    header = ["step"] + [f"product_rms_x{d + 1}" for d in range(p)] + [f"standard_rms_x{d + 1}" for d in range(p)]
    rows = []
    for k in range(steps):
        row = [str(k)] + [_fmt(prod_rep.per_step[d, k]) for d in range(p)]
        row += [_fmt(std_rep.per_step[d, k]) if std_rep is not None else "" for d in range(p)]
        rows.append(row)
    _write_csv(os.path.join(out_dir, "compare.csv"), header, rows)
    summary = {}
    for name in ("product", "standard"):
        r = result[name]
        summary[name] = {
            "status": r["status"],
            "lifted_points": r["lifted_points"],
            "report": r["report"].to_dict() if r.get("report") is not None else None,
            "counters": r["counters"].to_dict() if r.get("counters") is not None else None,
        }
    summary["standard"]["projected_kernel_evals"] = result["standard"]["projected_kernel_evals"]
    with open(os.path.join(out_dir, "compare.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
