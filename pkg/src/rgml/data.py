"""Labeled datasets and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix ``(m, p)`` with integer labels in ``1..K``."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    K: int = field(default=0)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise InvalidInput(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise InvalidInput("labels must be a vector with one entry per row")
        if not np.all(np.isfinite(X)):
            raise InvalidInput("features contain non-finite values")
        y = y.astype(int)
        K = self.K or (int(y.max()) if y.size else 0)
        if y.size and (y.min() < 1 or y.max() > K):
            raise InvalidInput(f"labels must lie in 1..{K}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "K", K)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def class_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K + 1)[1:]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def with_labels(self, labels) -> "LabeledDataset":
        return replace(self, labels=np.asarray(labels))


def remap_labels(raw):
    """Map arbitrary label values to ``1..K`` in order of first appearance."""
    mapping = {}
    out = np.empty(len(raw), dtype=int)
    for i, v in enumerate(raw):
        if v not in mapping:
            mapping[v] = len(mapping) + 1
        out[i] = mapping[v]
    return out, mapping


def _looks_numeric(cells):
    try:
        for c in cells:
            float(c)
    except ValueError:
        return False
    return True


def load_dataset(path, label_col=-1, name=None) -> LabeledDataset:
    """Read a comma-separated file into a :class:`LabeledDataset`.

    Parameters
    ----------
    path : str or Path
        CSV file, one sample per row, with an optional header row.
    label_col : int or str
        Zero-based index (negative allowed) or header name of the label column.
    name : str, optional
        Dataset name; defaults to the file stem.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InvalidInput(f"{path} is empty")

    by_name = isinstance(label_col, str) and not label_col.lstrip("-").isdigit()
    ncol = len(rows[0])
    if not by_name:
        lab = int(label_col)
        if not -ncol <= lab < ncol:
            raise InvalidInput(f"label column index {lab} out of range")
        lab %= ncol

    # a header row is one whose feature cells are not all numeric
    header = None
    first = [c.strip() for c in rows[0]]
    if by_name or not _looks_numeric([c for j, c in enumerate(first) if j != lab and c]):
        header, rows = first, rows[1:]
    if by_name:
        if header is None or label_col not in header:
            raise InvalidInput(f"label column {label_col!r} not found in header")
        lab = header.index(label_col)

    feats, raw_labels, missing = [], [], []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        cells = [c.strip() for c in row]
        if len(cells) != ncol or any(c == "" or c == "?" for c in cells):
            missing.append(lineno)
            continue
        try:
            feats.append([float(c) for j, c in enumerate(cells) if j != lab])
        except ValueError as exc:
            raise InvalidInput(f"{path}:{lineno}: non-numeric feature ({exc})") from exc
        raw_labels.append(cells[lab])
    if missing:
        raise InvalidInput(f"{path}: rows with missing values: {missing}")

    labels, mapping = remap_labels(raw_labels)
    if len(mapping) < 2:
        raise InvalidInput(f"{path}: need at least two classes, found {len(mapping)}")
    X = np.asarray(feats, dtype=float)
    return LabeledDataset(X, labels, name=name or path.stem, K=len(mapping))
