import numpy as np
import pytest


def random_tensor(rng, dims, kind="real"):
    size = int(np.prod(dims))
    data = rng.standard_normal(size)
    if kind == "complex":
        data = data + 1j * rng.standard_normal(size)
    return np.reshape(data, dims, order="F")


def random_stiefel(rng, n, k, kind="real"):
    G = rng.standard_normal((n, k))
    if kind == "complex":
        G = G + 1j * rng.standard_normal((n, k))
    Q, _ = np.linalg.qr(G)
    return Q


def random_unitary(rng, n, kind="real"):
    return random_stiefel(rng, n, n, kind)


def assert_monotone_history(history, slack=1e-12):
    objs = [rec.objective for rec in history]
    for a, b in zip(objs, objs[1:]):
        assert b >= a - slack * max(1.0, a), f"objective decreased: {a} -> {b}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
