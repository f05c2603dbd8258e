"""Labeled example streams.

A stream is an ordered, immutable sequence of (features, label) pairs backed by
contiguous arrays so that engines and bound evaluators can index it cheaply.
Labels are strictly -1 or +1; features are finite float64 vectors of a common
dimension.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabeledExample:
    """One observation: a finite feature vector and a label in {-1, +1}."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1 or feats.size == 0:
            raise ValueError("features must be a non-empty 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label!r}")
        feats = feats.copy()
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "label", int(self.label))


class Stream(Sequence):
    """Immutable sequence of labeled examples with array-backed storage."""

    def __init__(self, X, y):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if X.shape[0] == 0:
            raise ValueError("stream must contain at least one example")
        if X.shape[1] == 0:
            raise ValueError("examples must have at least one feature")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        y = y.astype(np.int64)
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        X.flags.writeable = False
        y.flags.writeable = False
        self._X = X
        self._y = y

    @classmethod
    def from_examples(cls, examples: Iterable[LabeledExample]) -> "Stream":
        examples = list(examples)
        if not examples:
            raise ValueError("stream must contain at least one example")
        dims = {ex.features.shape[0] for ex in examples}
        if len(dims) != 1:
            raise ValueError(f"examples disagree on dimension: {sorted(dims)}")
        X = np.stack([ex.features for ex in examples])
        y = np.array([ex.label for ex in examples])
        return cls(X, y)

    @property
    def X(self) -> np.ndarray:
        return self._X

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def dim(self) -> int:
        return self._X.shape[1]

    def __len__(self) -> int:
        return self._X.shape[0]

    def __getitem__(self, index):
        if isinstance(index, slice):
            sub_X = self._X[index]
            if sub_X.shape[0] == 0:
                raise ValueError("slice produces an empty stream")
            return Stream(sub_X, self._y[index])
        return LabeledExample(self._X[index], int(self._y[index]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Stream):
            return NotImplemented
        return np.array_equal(self._X, other._X) and np.array_equal(self._y, other._y)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Stream(count={len(self)}, dim={self.dim})"
