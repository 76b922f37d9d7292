"""Labelled regression data: one covariate matrix, one response vector, split tags."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SPLITS = ("learn", "cal", "test")


@dataclass(frozen=True)
class Dataset:
    """Covariates ``X`` (n, d), responses ``y`` (n,) and a split label per row."""

    X: np.ndarray
    y: np.ndarray
    split: np.ndarray
    theta: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).ravel()
        split = np.asarray(self.split).astype(str)
        if not (X.shape[0] == y.size == split.size):
            raise DomainError("X, y and split labels must have the same length")
        bad = set(np.unique(split)) - set(SPLITS)
        if bad:
            raise DomainError(f"unknown split labels {sorted(bad)}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "split", split)

    @classmethod
    def from_parts(cls, learn, cal, test, theta=None):
        parts = [(learn, "learn"), (cal, "cal"), (test, "test")]
        X = np.vstack([np.asarray(p[0], float).reshape(len(p[1]), -1) for p, _ in parts])
        y = np.concatenate([np.asarray(p[1], float) for p, _ in parts])
        split = np.concatenate([np.full(len(p[1]), name) for p, name in parts])
        return cls(X, y, split, theta)

    def part(self, name: str):
        mask = self.split == name
        return self.X[mask], self.y[mask]

    @property
    def learn(self):
        return self.part("learn")

    @property
    def cal(self):
        return self.part("cal")

    @property
    def test(self):
        return self.part("test")

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def to_csv(self, path):
        """Write ``x1..xd,y,split`` with a header row."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{j + 1}" for j in range(self.dim)] + ["y", "split"])
            for xi, yi, si in zip(self.X, self.y, self.split):
                w.writerow([f"{v:.17g}" for v in xi] + [f"{yi:.17g}", si])
