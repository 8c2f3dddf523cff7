"""Pair differences and the RGML objective with closed-form gradients.

The objective couples per-class covariance estimates ``A_k`` to a common
center ``A``::

    h(theta) = sum_k pi_k * [ L_k(A_k) + lam * d_R(A, A_k)**2 ]

with ``L_k`` either the Gaussian negative log-likelihood (on ``M``) or Tyler's
cost (on the unit-determinant manifold ``SM``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .data import LabeledDataset
from .errors import InvalidInput, NotPositiveDefinite
from .manifold import ProductPoint, riemannian_distance, sq_distance_egrad, tangent_from
from .spd import symmetrize

COST_TAGS = {"gaussian": "M", "tyler": "SM"}
MIN_PAIR_NORM = 1e-12
MAX_REDRAWS = 100


@dataclass(frozen=True)
class PairDifferences:
    """Within-class differences per class, cross-class differences, weights."""

    per_class: tuple
    cross_class: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        per_class = tuple(np.atleast_2d(np.asarray(s, dtype=float)) for s in self.per_class)
        if not per_class:
            raise InvalidInput("need at least one class")
        for k, s in enumerate(per_class):
            if s.shape[0] < 1:
                raise InvalidInput(f"class {k + 1} has no pairs")
            if np.any(np.linalg.norm(s, axis=1) < MIN_PAIR_NORM):
                raise InvalidInput(f"class {k + 1} contains a zero difference vector")
        weights = np.asarray(self.weights, dtype=float)
        if abs(weights.sum() - 1.0) > 1e-12 or weights.shape != (len(per_class),):
            raise InvalidInput("class weights must sum to one")
        cross = np.asarray(self.cross_class, dtype=float).reshape(-1, per_class[0].shape[1])
        object.__setattr__(self, "per_class", per_class)
        object.__setattr__(self, "cross_class", cross)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_vectors(cls, per_class, cross_class=()):
        """Build with weights ``pi_k = n_k / n_S`` from the realized counts."""
        per_class = [np.atleast_2d(np.asarray(s, dtype=float)) for s in per_class]
        counts = np.array([s.shape[0] for s in per_class], dtype=float)
        p = per_class[0].shape[1]
        cross = np.asarray(cross_class, dtype=float).reshape(-1, p)
        return cls(tuple(per_class), cross, counts / counts.sum())

    @property
    def p(self) -> int:
        return self.per_class[0].shape[1]

    @property
    def K(self) -> int:
        return len(self.per_class)

    @property
    def counts(self):
        return np.array([s.shape[0] for s in self.per_class])

    def transform(self, C) -> "PairDifferences":
        """Apply ``s -> C s`` to every difference vector."""
        C = np.asarray(C, dtype=float)
        return PairDifferences(
            tuple(s @ C.T for s in self.per_class), self.cross_class @ C.T, self.weights
        )


@dataclass(frozen=True)
class ClassScatter:
    per_class: tuple
    S: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class RgmlParams:
    lam: float = 0.05
    cost: str = "gaussian"

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInput(f"lambda must be positive, got {self.lam}")
        if self.cost not in COST_TAGS:
            raise InvalidInput(f"unknown cost {self.cost!r}; expected one of {sorted(COST_TAGS)}")

    @property
    def manifold(self) -> str:
        return COST_TAGS[self.cost]


def _draw_distinct(rng, n, size):
    i = rng.integers(n, size=size)
    j = rng.integers(n - 1, size=size)
    j = j + (j >= i)
    return i, j


def _draw_nonzero(X, draw, n):
    """Draw ``n`` difference vectors via ``draw(size) -> (i, j)``.

    Zero differences (duplicate points) are redrawn up to ``MAX_REDRAWS``
    times, then dropped.
    """
    i, j = draw(n)
    diffs = X[i] - X[j]
    for _ in range(MAX_REDRAWS):
        bad = np.flatnonzero(np.linalg.norm(diffs, axis=1) < MIN_PAIR_NORM)
        if bad.size == 0:
            break
        i2, j2 = draw(bad.size)
        diffs[bad] = X[i2] - X[j2]
    keep = np.linalg.norm(diffs, axis=1) >= MIN_PAIR_NORM
    return diffs[keep]


def build_pairs(dataset: LabeledDataset, n_S: int, n_D: int, rng) -> PairDifferences:
    """Sample within-class and cross-class difference vectors.

    ``n_S`` similar pairs are split evenly over the classes (remainder to the
    lowest class indices); each pair is drawn uniformly among ordered pairs of
    distinct samples of the class, with replacement across draws. ``n_D``
    dissimilar pairs are drawn uniformly among ordered cross-class pairs.
    """
    rng = np.random.default_rng(rng)
    K = dataset.K
    if n_S < K or n_D < 0:
        raise InvalidInput(f"need n_S >= K ({K}) and n_D >= 0")
    X, y = dataset.features, dataset.labels
    base, extra = divmod(n_S, K)

    per_class = []
    for k in range(1, K + 1):
        idx = dataset.class_indices(k)
        if idx.size < 2:
            raise InvalidInput(f"class {k} has {idx.size} sample(s); need at least 2")
        n_k = base + (1 if k - 1 < extra else 0)
        Xk = X[idx]
        s = _draw_nonzero(Xk, lambda size: _draw_distinct(rng, idx.size, size), n_k)
        if s.shape[0] == 0:
            raise InvalidInput(f"class {k}: all samples are identical")
        per_class.append(s)

    def draw_cross(size):
        i_out, j_out = np.empty(0, int), np.empty(0, int)
        while i_out.size < size:
            i, j = rng.integers(len(y), size=(2, size - i_out.size))
            ok = y[i] != y[j]
            i_out = np.concatenate([i_out, i[ok]])
            j_out = np.concatenate([j_out, j[ok]])
        return i_out, j_out

    cross = _draw_nonzero(X, draw_cross, n_D) if n_D else np.empty((0, X.shape[1]))
    return PairDifferences.from_vectors(per_class, cross)


def scatter(vectors) -> np.ndarray:
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    return V.T @ V / V.shape[0]


def class_scatter(pairs: PairDifferences) -> ClassScatter:
    per_class = tuple(scatter(s) for s in pairs.per_class)
    S = sum(w * Sk for w, Sk in zip(pairs.weights, per_class))
    D = scatter(pairs.cross_class) if pairs.cross_class.shape[0] else np.zeros((pairs.p, pairs.p))
    return ClassScatter(per_class, S, D)


def _quad_forms(A, X):
    """``x_i^T A^{-1} x_i`` for every row of ``X`` plus ``log|A|``."""
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky failed: {exc}") from exc
    Y = solve_triangular(L, X.T, lower=True)
    return np.sum(Y * Y, axis=0), 2.0 * np.sum(np.log(np.diag(L)))


def gaussian_loss(A, vectors) -> float:
    """Centered Gaussian negative log-likelihood (up to constants)."""
    q, ld = _quad_forms(A, np.atleast_2d(vectors))
    return float(np.mean(q) + ld)


def tyler_loss(A, vectors) -> float:
    """Tyler's cost ``(p/n) sum log(s^T A^{-1} s) + log|A|``; scale invariant in ``A``."""
    X = np.atleast_2d(vectors)
    q, ld = _quad_forms(A, X)
    if np.any(q <= 0):
        raise FloatingPointError("non-positive quadratic form in Tyler cost")
    return float(X.shape[1] * np.mean(np.log(q)) + ld)


def gaussian_loss_egrad(A, vectors):
    X = np.atleast_2d(vectors)
    c = cho_factor(A)
    Ainv = cho_solve(c, np.eye(A.shape[0]))
    Z = cho_solve(c, X.T)
    return symmetrize(-(Z @ Z.T) / X.shape[0] + Ainv)


def tyler_loss_egrad(A, vectors):
    X = np.atleast_2d(vectors)
    n, p = X.shape
    c = cho_factor(A)
    Ainv = cho_solve(c, np.eye(p))
    Z = cho_solve(c, X.T)
    q = np.sum(X.T * Z, axis=0)
    return symmetrize(-(p / n) * (Z / q) @ Z.T + Ainv)


_LOSSES = {
    "gaussian": (gaussian_loss, gaussian_loss_egrad),
    "tyler": (tyler_loss, tyler_loss_egrad),
}


def _check_domain(theta: ProductPoint, pairs: PairDifferences, params: RgmlParams):
    if theta.tag != params.manifold:
        raise InvalidInput(
            f"{params.cost} cost is defined on {params.manifold}, got a point on {theta.tag}"
        )
    if theta.K != pairs.K or theta.p != pairs.p:
        raise InvalidInput(
            f"point has K={theta.K}, p={theta.p}; pairs have K={pairs.K}, p={pairs.p}"
        )


def rgml_cost(theta: ProductPoint, pairs: PairDifferences, params: RgmlParams) -> float:
    _check_domain(theta, pairs, params)
    loss, _ = _LOSSES[params.cost]
    A = theta.center
    total = 0.0
    for w, Ak, s in zip(pairs.weights, theta.classes, pairs.per_class):
        total += w * (loss(Ak, s) + params.lam * riemannian_distance(A, Ak) ** 2)
    return float(total)


def rgml_egrad(theta: ProductPoint, pairs: PairDifferences, params: RgmlParams):
    """Euclidean gradient ``(G, G_1, ..., G_K)`` of :func:`rgml_cost`."""
    _check_domain(theta, pairs, params)
    _, loss_grad = _LOSSES[params.cost]
    A = theta.center
    lam = params.lam
    G = np.zeros_like(A)
    Gk = []
    for w, Ak, s in zip(pairs.weights, theta.classes, pairs.per_class):
        Gk.append(w * (loss_grad(Ak, s) + lam * sq_distance_egrad(A, Ak)))
        G += w * lam * sq_distance_egrad(Ak, A)
    return tangent_from([G, *Gk])

