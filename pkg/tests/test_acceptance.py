"""Acceptance checks, one printed PASS/FAIL line per criterion.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v``.  Set
``PRKHS_REGEN_GOLDEN=1`` to rewrite the stored RMS baseline.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from prkhs import pipeline
from prkhs.cli import main
from prkhs.config import load_config
from prkhs.gram import build_gram, kron_matrix, kron_vector, min_eigenvalue
from prkhs.kernels import KernelConfig
from prkhs.metrics import CostCounters, count_standard_cost
from prkhs.operator import (
    fit_product,
    fit_standard,
    grid_lifted_points,
    predict_product,
    predict_product_batch,
    predict_product_explicit,
    predict_standard,
)
from prkhs.signals import MultisineConfig, StateSamplerConfig, hankel_sequences, multisine, sample_states
from prkhs.systems import VanDerPolParams, generate_dataset, van_der_pol, vdp_step

from conftest import random_instance, random_product_cfg

GOLDEN = Path(__file__).parent / "golden" / "desk_rms_seed0.json"
SIG_X = np.sqrt(0.4)


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        assert ok, detail

    return emit


def large_grid_dataset():
    sig = multisine(MultisineConfig(length=10000, seed=1))
    U = hankel_sequences(sig, 11)[:290]
    X = sample_states(StateSamplerConfig(150, seed=2))
    return generate_dataset(van_der_pol(), X, U, 10)


def test_1_kernel_evaluation_counts(verdict):
    t0 = time.monotonic()
    c1, c2 = count_standard_cost(43500), count_standard_cost(9990)
    t_count = time.monotonic() - t0
    ds = large_grid_dataset()
    counters = CostCounters()
    t0 = time.monotonic()
    fit_product(ds, load_config().product_kernel(), counters=counters)
    t_fit = time.monotonic() - t0
    ok = (counters.kernel_evals == 106_600 and c1 == 1_892_250_000 and c2 == 99_800_100
          and t_count < 1.0 and t_fit < 60.0)
    verdict(1, "kernel-evaluation counts", ok,
            f"fit 290x150 charged {counters.kernel_evals} (want 106600), standard(43500)={c1}, "
            f"standard(9990)={c2}; counting {t_count:.2g}s, fit {t_fit:.2g}s")


def test_2_cross_path_equivalence(verdict):
    rng = np.random.default_rng(20240)
    t0 = time.monotonic()
    worst, n = 0.0, 120
    for _ in range(n):
        Tu, Tx = (int(v) for v in rng.integers(1, 9, size=2))
        N = int(rng.integers(0, 5))
        ds = random_instance(rng, Tu, Tx, N=N)
        cfg = random_product_cfg(rng)
        op = fit_product(ds, cfg)
        std = fit_standard(grid_lifted_points(ds), ds.Y, cfg, state_dim=ds.n)
        u, x = rng.uniform(-2, 2, size=N + 1), rng.uniform(-1, 1, size=2)
        a = predict_product(op, u, x)
        worst = max(worst, np.max(np.abs(a - predict_product_explicit(op, u, x))),
                    np.max(np.abs(a - predict_standard(std, u, x))))
    elapsed = time.monotonic() - t0
    verdict(2, "cross-path oracle equivalence", worst < 1e-8 and elapsed < 30,
            f"{n} instances, worst max-norm gap {worst:.2e} (tol 1e-8), {elapsed:.2g}s")


def test_3_interpolation(verdict):
    cfg = load_config()
    t0 = time.monotonic()
    _, ds = pipeline.product_data(cfg)
    op = fit_product(ds, cfg.product_kernel(), jitter=0.0)
    i, j = np.divmod(np.arange(ds.T_u * ds.T_x), ds.T_x)
    P = predict_product_batch(op, ds.u_points[i], ds.x_points[j])
    rel = np.max(np.abs(P.T - ds.Y)) / np.max(np.abs(ds.Y))
    elapsed = time.monotonic() - t0
    verdict(3, "interpolation at jitter 0", rel < 1e-6 and elapsed < 60,
            f"60x20, N=10: worst relative max-norm error {rel:.2e} (tol 1e-6), {elapsed:.2g}s")


def test_4_positive_definiteness(verdict):
    rng = np.random.default_rng(4)
    lams = {}
    for fam in ("gaussian", "hardy_rmq"):
        Z = rng.uniform(-2.5, 2.5, size=(200, 2))
        lams[fam] = min_eigenvalue(build_gram(Z, KernelConfig(fam, SIG_X)))
    worst = 0.0
    for _ in range(50):
        Tu, Tx = (int(v) for v in rng.integers(1, 9, size=2))
        ds = random_instance(rng, Tu, Tx)
        cfg = random_product_cfg(rng)
        Ku, Kx = build_gram(ds.u_points, cfg.ku), build_gram(ds.x_points, cfg.kx)
        worst = max(worst, abs(min_eigenvalue(kron_matrix(Ku, Kx)) - min_eigenvalue(Ku) * min_eigenvalue(Kx)))
    ok = all(v > 0 for v in lams.values()) and worst < 1e-8
    verdict(4, "positive definiteness", ok,
            f"min eig on 200 points: gaussian {lams['gaussian']:.2e}, hardy {lams['hardy_rmq']:.2e}; "
            f"worst Kronecker min-eig gap {worst:.2e} over 50 instances (tol 1e-8)")


def test_5_kronecker_identities(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(50):
        p, q = (int(v) for v in rng.integers(1, 6, size=2))
        A = rng.normal(size=(p, p)) + p * np.eye(p)
        B = rng.normal(size=(q, q)) + q * np.eye(q)
        a, b = rng.normal(size=p), rng.normal(size=q)
        inv = np.linalg.inv(kron_matrix(A, B))
        worst = max(worst,
                    np.max(np.abs(inv - kron_matrix(np.linalg.inv(A), np.linalg.inv(B)))),
                    np.max(np.abs(kron_matrix(A, B) @ kron_vector(a, b) - kron_vector(A @ a, B @ b))),
                    np.max(np.abs(kron_matrix(A, B) - np.kron(A, B))))
    a, b = rng.normal(size=2), rng.normal(size=2)
    expansion = np.max(np.abs(kron_vector(a, b) - [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]))
    worst = max(worst, expansion)
    verdict(5, "Kronecker identities", worst < 1e-10,
            f"inverse, mixed product and 2-vector expansion over 50 instances, worst gap {worst:.2e} (tol 1e-10)")


def test_6_van_der_pol(verdict):
    P = VanDerPolParams(mu=1.0, Ts=0.1)
    e1 = np.max(np.abs(vdp_step([0.0, 0.0], 1.0, P) - [0.0, 0.1]))
    e2 = np.max(np.abs(vdp_step([1.0, 1.0], 0.0, P) - [1.1, 0.9]))
    rng = np.random.default_rng(6)
    # dyadic states, inputs and step make every operation exact, so the input
    # enters as exactly Ts*u
    Pd = VanDerPolParams(mu=1.0, Ts=0.125)
    exact = True
    for _ in range(1000):
        x1, x2, u = rng.integers(-64, 65, size=3) / 16.0
        d = vdp_step([x1, x2], u, Pd) - vdp_step([x1, x2], 0.0, Pd)
        exact &= bool(d[0] == 0.0 and d[1] == Pd.Ts * u)
    # general reals at Ts=0.1: first component exact, second to rounding
    worst_ulps = 0.0
    for _ in range(1000):
        x1, x2, u = rng.uniform(-5, 5, size=3)
        d = vdp_step([x1, x2], u, P) - vdp_step([x1, x2], 0.0, P)
        exact &= bool(d[0] == 0.0)
        scale = max(1.0, abs(x2), P.Ts * (abs(x1) + x1 * x1 * abs(x2) + abs(x2) + abs(u)))
        worst_ulps = max(worst_ulps, abs(d[1] - P.Ts * u) / (np.finfo(float).eps * scale))
    ok = e1 <= 1e-15 and e2 <= 1e-15 and exact and worst_ulps <= 8
    verdict(6, "Van der Pol dynamics", ok,
            f"hand steps off by {e1:.1e} and {e2:.1e} (tol 1e-15); affinity exact on dyadic grid: {exact}; "
            f"general reals within {worst_ulps:.2g} ulp of the update")


def _x1_rms(report):
    return float(np.sqrt(np.mean(report.per_step[0] ** 2)))


def _fit_validate(seed, Tu, Tx):
    cfg = load_config(overrides=[f"seed={seed}", f"T_u={Tu}", f"T_x={Tx}"])
    return pipeline.validate(pipeline.fit_from_config(cfg, "product"), cfg, from_training=False)


def test_7_prediction_accuracy(verdict):
    t0 = time.monotonic()
    big, small = [], []
    for seed in range(10):
        big.append(_x1_rms(_fit_validate(seed, 60, 20)))
        small.append(_x1_rms(_fit_validate(seed, 15, 5)))
    med_big, med_small = float(np.median(big)), float(np.median(small))

    curve = _fit_validate(0, 60, 20).per_step
    if os.environ.get("PRKHS_REGEN_GOLDEN") or not GOLDEN.exists():
        GOLDEN.parent.mkdir(exist_ok=True)
        GOLDEN.write_text(json.dumps({"seed": 0, "T_u": 60, "T_x": 20, "n_rollouts": 50,
                                      "per_step": curve.tolist()}, indent=2) + "\n")
        golden_note = "golden baseline written"
    gold = np.array(json.loads(GOLDEN.read_text())["per_step"])
    drift = float(np.max(np.abs(curve - gold) / np.abs(gold)))
    if "golden_note" not in locals():
        golden_note = f"golden drift {drift:.2%} (tol 5%)"
    elapsed = time.monotonic() - t0
    ok = med_big < med_small and drift <= 0.05 and elapsed < 300
    verdict(7, "prediction accuracy", ok,
            f"median x1 RMS over 10 seeds: 60x20 {med_big:.4f} vs 15x5 {med_small:.4f}; {golden_note}; {elapsed:.2g}s")


def _pipeline_run(root, threads):
    args = ["--threads", str(threads)]
    outs = {}
    for approach in ("product", "standard"):
        d, m, v = root / f"{approach}_data", root / f"{approach}.json", root / f"{approach}_val"
        assert main(["gen-data", *args, "--approach", approach, "--out", str(d)]) == 0
        assert main(["train", *args, "--approach", approach, "--data", str(d), "--out", str(m)]) == 0
        assert main(["validate", *args, "--model", str(m), "--out", str(v)]) == 0
        outs[approach] = (d, v)
    return outs


def test_8_determinism(tmp_path, verdict, capsys):
    a = _pipeline_run(tmp_path / "t1", 1)
    b = _pipeline_run(tmp_path / "t4", 4)
    capsys.readouterr()
    csv_same, files, worst = True, 0, 0.0
    for approach in a:
        (da, va), (db, vb) = a[approach], b[approach]
        for f in sorted(da.glob("*.csv")):
            csv_same &= f.read_bytes() == (db / f.name).read_bytes()
            files += 1
        ra = json.loads((va / "report.json").read_text())
        rb = json.loads((vb / "report.json").read_text())
        worst = max(worst, abs(ra["overall"] - rb["overall"]),
                    float(np.max(np.abs(np.subtract(ra["per_step"], rb["per_step"])))))
        csv_same &= ra["counters"]["kernel_evals"] == rb["counters"]["kernel_evals"]
    ok = csv_same and files >= 6 and worst <= 1e-12
    verdict(8, "determinism across --threads", ok,
            f"{files} data CSVs byte-identical: {csv_same}; worst report gap {worst:.1e} (tol 1e-12)")
