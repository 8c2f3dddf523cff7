"""Reference metric learners and a synthetic class-conditional data generator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import LabeledDataset
from .errors import InvalidInput
from .manifold import geodesic
from .spd import check_spd, invm, ridge, sqrtm


def gmml(S, D, t: float = 0.5) -> np.ndarray:
    """Geometric-mean metric: ``A`` with ``A^{-1} = S^{-1} #_t D``.

    ``t = 0`` returns ``S``; ``t = 1`` returns ``D^{-1}``. PSD inputs are
    lifted with a tiny ridge first.
    """
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t must lie in [0, 1], got {t}")
    S = ridge(S)
    D = ridge(D)
    return invm(geodesic(invm(S), D, t))


def scm(vectors) -> np.ndarray:
    """Sample covariance ``(1/n) sum v v^T`` (no centering), ridged if singular."""
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[None, :]
    if V.shape[0] == 0:
        raise InvalidInput("scm needs at least one vector")
    return ridge(V.T @ V / V.shape[0])


def data_covariance(X) -> np.ndarray:
    """Covariance of the centered rows of ``X`` (the "SCM on all data" baseline)."""
    X = np.asarray(X, dtype=float)
    return scm(X - X.mean(axis=0))


@dataclass(frozen=True)
class SyntheticSpec:
    means: Sequence
    covariances: Sequence
    n_per_class: int | Sequence[int]
    noise: str = "gaussian"
    dof: Optional[float] = None

    def __post_init__(self):
        if len(self.means) != len(self.covariances) or not self.means:
            raise InvalidInput("need one mean and one covariance per class")
        for C in self.covariances:
            check_spd(C, "class covariance")
        counts = np.broadcast_to(np.asarray(self.n_per_class), (len(self.means),))
        if np.any(counts < 2):
            raise InvalidInput("each class needs at least 2 samples")
        if self.noise not in ("gaussian", "student_t"):
            raise InvalidInput(f"unknown noise family {self.noise!r}")
        if self.noise == "student_t" and not (self.dof and self.dof > 2):
            raise InvalidInput("student_t noise needs dof > 2")

    @property
    def counts(self):
        return np.broadcast_to(np.asarray(self.n_per_class), (len(self.means),)).astype(int)


def synth_generate(spec: SyntheticSpec, seed=None) -> LabeledDataset:
    """Draw ``x = mu_k + Sigma_k^{1/2} u`` with white noise ``u``.

    Student-t noise is rescaled by ``sqrt((dof - 2) / dof)`` so that ``u`` keeps
    identity covariance.
    """
    rng = np.random.default_rng(seed)
    feats, labels = [], []
    for k, (mu, C, n) in enumerate(zip(spec.means, spec.covariances, spec.counts), start=1):
        mu = np.asarray(mu, dtype=float)
        p = mu.shape[0]
        u = rng.standard_normal((n, p))
        if spec.noise == "student_t":
            tau = rng.chisquare(spec.dof, size=(n, 1)) / spec.dof
            u = u / np.sqrt(tau) * np.sqrt((spec.dof - 2) / spec.dof)
        feats.append(mu + u @ sqrtm(C))
        labels.append(np.full(n, k))
    return LabeledDataset(np.vstack(feats), np.concatenate(labels), name="synthetic", K=len(spec.means))
