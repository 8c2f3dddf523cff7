"""k-NN benchmark harness: splits, label corruption, metric fitting, scoring."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .baselines import data_covariance, gmml
from .costs import RgmlParams, build_pairs, class_scatter
from .data import LabeledDataset, load_dataset
from .errors import InvalidInput, NotPositiveDefinite
from .optim import fit_rgml
from .spd import check_spd, invsqrtm

log = logging.getLogger(__name__)

METHODS = ("euclidean", "scm", "gmml", "rgml_gaussian", "rgml_tyler")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    label_col: str = "-1"
    method: str = "rgml_gaussian"
    gmml_t: float = 0.5
    lam: float = 0.05
    mislabel_rate: float = 0.0
    repeats: int = 200
    train_fraction: float = 0.5
    k_neighbors: int = 5
    pairs_factor: int = 75
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInput(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 <= self.gmml_t <= 1.0:
            raise InvalidInput("gmml_t must lie in [0, 1]")
        if not self.lam > 0:
            raise InvalidInput("lambda must be positive")
        if not 0.0 <= self.mislabel_rate < 1.0:
            raise InvalidInput("mislabel_rate must lie in [0, 1)")
        if self.repeats < 1:
            raise InvalidInput("repeats must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidInput("train_fraction must lie in (0, 1)")
        if self.k_neighbors < 1:
            raise InvalidInput("k_neighbors must be at least 1")
        if self.pairs_factor < 1:
            raise InvalidInput("pairs_factor must be at least 1")


@dataclass
class ResultRecord:
    config: dict
    per_repeat_errors: list
    mean_error_pct: float
    std_error_pct: float
    failed_repeats: int
    wall_time_s: Optional[float]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(labels, train_fraction, rng):
    """Per-class random split; returns sorted ``(train_idx, test_idx)``."""
    labels = np.asarray(labels)
    train, test = [], []
    for k in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == k))
        n_tr = min(max(_round_half_up(train_fraction * idx.size), 1), idx.size - 1)
        train.append(idx[:n_tr])
        test.append(idx[n_tr:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def inject_mislabels(train: LabeledDataset, rate: float, rng) -> LabeledDataset:
    """Give ``round(rate * m)`` distinct samples a different, uniformly drawn label."""
    if not 0.0 <= rate < 1.0:
        raise InvalidInput("rate must lie in [0, 1)")
    n_bad = _round_half_up(rate * train.m)
    if n_bad == 0:
        return train
    rng = np.random.default_rng(rng)
    idx = rng.choice(train.m, size=n_bad, replace=False)
    labels = train.labels.copy()
    shift = rng.integers(1, train.K, size=n_bad)
    labels[idx] = (labels[idx] - 1 + shift) % train.K + 1
    return train.with_labels(labels)


def knn_predict(X_train, y_train, X_test, k: int):
    """Majority vote among the ``k`` nearest training points.

    Equal distances keep training order. Vote ties go to the label whose
    neighbors have the smallest mean distance, then to the lowest label.
    """
    if k > X_train.shape[0]:
        raise InvalidInput(f"k={k} exceeds the {X_train.shape[0]} training samples")
    dist = cdist(X_test, X_train)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    preds = np.empty(X_test.shape[0], dtype=int)
    for i, nn in enumerate(order):
        labs = y_train[nn]
        d = dist[i, nn]
        cands = np.unique(labs)
        votes = np.array([np.sum(labs == c) for c in cands])
        best = cands[votes == votes.max()]
        if best.size > 1:
            means = np.array([d[labs == c].mean() for c in best])
            best = best[means == means.min()]
        preds[i] = best.min()
    return preds


def evaluate(A, train: LabeledDataset, test: LabeledDataset, k: int = 5) -> float:
    """Misclassification rate of k-NN after whitening both sets by ``A^{-1/2}``."""
    A = check_spd(A, "metric")
    if A.shape[0] != train.p:
        raise InvalidInput(f"metric has dim {A.shape[0]}, data has p={train.p}")
    W = invsqrtm(A)
    preds = knn_predict(train.features @ W, train.labels, test.features @ W, k)
    return float(np.mean(preds != test.labels))


def fit_metric(method: str, train: LabeledDataset, config: ExperimentConfig, rng, opts=None):
    """Learn the SPD matrix ``A`` used in the Mahalanobis distance.

    Returns ``(A, trace)``; ``trace`` is ``None`` for closed-form methods.
    """
    if method == "euclidean":
        return np.eye(train.p), None
    if method == "scm":
        return data_covariance(train.features), None
    n_pairs = config.pairs_factor * train.K * (train.K - 1)
    pairs = build_pairs(train, n_pairs, n_pairs, rng)
    if method == "gmml":
        cs = class_scatter(pairs)
        return gmml(cs.S, cs.D, config.gmml_t), None
    params = RgmlParams(config.lam, "gaussian" if method == "rgml_gaussian" else "tyler")
    theta, trace = fit_rgml(pairs, params, opts)
    return theta.center, trace


def repeat_rng(seed: int, index: int):
    return np.random.default_rng([seed, index])


def run_repeat(config: ExperimentConfig, dataset: LabeledDataset, index: int, keep_trace=False):
    """One split/corrupt/fit/score round; returns ``(error_rate, trace)``."""
    rng = repeat_rng(config.seed, index)
    train_idx, test_idx = stratified_split(dataset.labels, config.train_fraction, rng)
    train, test = dataset.subset(train_idx), dataset.subset(test_idx)
    if config.standardize:
        mu = train.features.mean(axis=0)
        sd = train.features.std(axis=0)
        sd[sd == 0] = 1.0
        train = LabeledDataset((train.features - mu) / sd, train.labels, train.name, train.K)
        test = LabeledDataset((test.features - mu) / sd, test.labels, test.name, test.K)
    train = inject_mislabels(train, config.mislabel_rate, rng)
    A, trace = fit_metric(config.method, train, config, rng)
    err = evaluate(A, train, test, config.k_neighbors)
    return err, (trace if keep_trace else None)


def _safe_repeat(args):
    config, dataset, index, keep_trace = args
    try:
        return run_repeat(config, dataset, index, keep_trace)
    except (NotPositiveDefinite, InvalidInput, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.warning("repeat %d failed: %s", index, exc)
        return None, None


def cross_validate(
    config: ExperimentConfig,
    dataset: LabeledDataset | None = None,
    workers: int = 1,
    timing: bool = True,
    return_traces: bool = False,
):
    """Repeat the split/fit/score protocol ``config.repeats`` times.

    Each repeat draws from its own generator seeded by ``(seed, index)``, so
    results do not depend on ``workers``. Failed repeats are counted and left
    out of the mean. With ``timing=False`` the wall time is reported as
    ``None``, which makes the JSON output reproducible byte for byte.
    """
    start = time.perf_counter()
    if dataset is None:
        dataset = load_dataset(config.dataset, config.label_col)
    jobs = [(config, dataset, i, return_traces) for i in range(config.repeats)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_safe_repeat, jobs))
    else:
        outcomes = [_safe_repeat(j) for j in jobs]

    errors = [100.0 * e for e, _ in outcomes if e is not None]
    failed = sum(e is None for e, _ in outcomes)
    mean = float(np.mean(errors)) if errors else float("nan")
    std = float(np.std(errors)) if errors else float("nan")
    record = ResultRecord(
        config=asdict(config),
        per_repeat_errors=errors,
        mean_error_pct=mean,
        std_error_pct=std,
        failed_repeats=failed,
        wall_time_s=(time.perf_counter() - start) if timing else None,
    )
    if return_traces:
        return record, [t for _, t in outcomes]
    return record


def write_record(record: ResultRecord, path=None):
    text = record.to_json()
    if path is None:
        print(text, end="")
    else:
        Path(path).write_text(text)
    return text
