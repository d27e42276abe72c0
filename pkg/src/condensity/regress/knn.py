"""Brute-force k-nearest-neighbour regression (mean of the k nearest targets)."""

from dataclasses import dataclass

import numpy as np

from ..errors import Exhausted, WidthMismatch

_BLOCK_ELEMS = 4_000_000


@dataclass(frozen=True)
class KnnConfig:
    k: int = 10

    variant = "knn"

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")

    @property
    def budget(self):
        return 0


@dataclass(frozen=True)
class KnnModel:
    """Euclidean distance; ties between equidistant rows go to the lowest row index."""

    features: np.ndarray
    targets: np.ndarray
    k: int

    variant = "knn"

    @property
    def input_dim(self):
        return self.features.shape[1]

    def predict(self, features):
        q = np.asarray(features, dtype=float)
        if q.ndim != 2 or q.shape[1] != self.input_dim:
            raise WidthMismatch(f"expected {self.input_dim} feature columns, got {q.shape}")
        n_train = self.features.shape[0]
        k = min(self.k, n_train)
        if k == n_train:
            return np.full(q.shape[0], self.targets.mean())
        out = np.empty(q.shape[0])
        block = max(1, _BLOCK_ELEMS // (n_train * self.input_dim))
        for start in range(0, q.shape[0], block):
            qb = q[start:start + block]
            diff = qb[:, None, :] - self.features[None, :, :]
            dist = np.einsum("qnd,qnd->qn", diff, diff)
            nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
            out[start:start + block] = self.targets[nearest].mean(axis=1)
        return out

    def to_arrays(self):
        return {"k": self.k}, {"features": self.features, "targets": self.targets}

    @classmethod
    def from_arrays(cls, meta, arrays):
        return cls(arrays["features"], arrays["targets"], int(meta["k"]))


class KnnTrainer:
    """Non-iterative: the model is complete as soon as it is created."""

    def __init__(self, config, design, seed=0):
        self.config = config
        self._model = KnnModel(
            np.array(design.features, dtype=float), np.array(design.targets, dtype=float), int(config.k)
        )
        self.input_dim = self._model.input_dim
        self._eval_sets = {}

    rounds = 0
    exhausted = True

    def train_round(self):
        raise Exhausted("the kNN backend has no training rounds")

    def model(self):
        return self._model

    def training_mse(self):
        r = self._model.predict(self._model.features) - self._model.targets
        return float(np.mean(r * r))

    def add_eval_set(self, name, features):
        x = np.asarray(features, dtype=float)
        if x.shape[1] != self.input_dim:
            raise WidthMismatch(f"expected {self.input_dim} feature columns, got {x.shape[1]}")
        self._eval_sets[name] = x

    def eval_predictions(self, name):
        return self._model.predict(self._eval_sets[name])
