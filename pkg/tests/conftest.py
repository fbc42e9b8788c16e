import numpy as np
import pytest

from prkhs.kernels import KernelConfig, ProductKernelConfig
from prkhs.operator import Dataset


def separated_points(rng, T, d, sep=0.5):
    """``T`` random points whose pairwise distances are at least ``sep``.

    Keeps random Gram matrices well conditioned, so cross-path comparisons
    measure algebra rather than the condition number.
    """
    box = 1.0 + 0.5 * sep * T
    pts = []
    for p in rng.uniform(-box, box, size=(4000, d)):
        if all(np.linalg.norm(p - q) >= sep for q in pts):
            pts.append(p)
            if len(pts) == T:
                return np.array(pts)
    raise RuntimeError("could not place separated points")


def random_instance(rng, Tu, Tx, N=2, m=1, n=2, p=2):
    U = separated_points(rng, Tu, m * (N + 1))
    X = separated_points(rng, Tx, n)
    Y = rng.normal(size=(p * (N + 1), Tu * Tx))
    return Dataset(U, X, Y, N=N, m=m, n=n, p=p)


def random_product_cfg(rng, lo=0.5, hi=1.5):
    fam = ["gaussian", "hardy_rmq"]
    return ProductKernelConfig(KernelConfig(fam[rng.integers(2)], rng.uniform(lo, hi)),
                               KernelConfig(fam[rng.integers(2)], rng.uniform(lo, hi)))


@pytest.fixture
def rng(request):
    return np.random.default_rng(abs(hash(request.node.name)) % 2**32)
