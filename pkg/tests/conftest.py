from pathlib import Path

import numpy as np
import pytest

from rgml.manifold import ProductPoint, unit_det

DATA = Path(__file__).parent / "data"


def random_spd(rng, p, cond=10.0):
    """SPD matrix with eigenvalues spread log-uniformly over ``[1, cond]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    w = np.exp(rng.uniform(0, np.log(cond), size=p))
    return (Q * w) @ Q.T


def random_sym(rng, p, scale=1.0):
    X = rng.standard_normal((p, p)) * scale
    return 0.5 * (X + X.T)


def random_point(rng, p, K, tag="M", cond=10.0):
    mats = [random_spd(rng, p, cond) for _ in range(K + 1)]
    if tag == "SM":
        mats = [unit_det(M) for M in mats]
    return ProductPoint(mats[0], tuple(mats[1:]), tag)


def random_vectors(rng, n, p, cov=None):
    X = rng.standard_normal((n, p))
    if cov is not None:
        X = X @ np.linalg.cholesky(cov).T
    return X


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def wine_path():
    return DATA / "wine.csv"


@pytest.fixture(scope="session")
def iris_path():
    return DATA / "iris.csv"
