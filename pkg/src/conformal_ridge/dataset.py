"""Ordered sequences of observations (x_i, y_i)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """A sequence of observations with objects ``X`` (n x p) and labels ``y`` (n,).

    Arrays are copied on construction and marked read-only.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            # a flat list of scalars is n objects with p = 1
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError(f"objects must be a 2-d array, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(
                f"{X.shape[0]} objects but {y.shape[0]} labels"
            )
        if X.shape[1] == 0:
            raise ValueError("objects must have at least one attribute")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def empty(cls, p: int) -> Dataset:
        return cls(np.empty((0, p)), np.empty(0))

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def head(self, k: int) -> Dataset:
        return Dataset(self.X[:k], self.y[:k])

    def append(self, x, y: float) -> Dataset:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.X, x]), np.append(self.y, y))

    def negated(self) -> Dataset:
        """Same objects with every label multiplied by -1."""
        return Dataset(self.X, -self.y)
