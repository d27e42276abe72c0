"""Least-squares gradient boosting with leaf-wise histogram trees."""

import heapq
from dataclasses import dataclass

import numpy as np

from ..errors import Exhausted, WidthMismatch
from . import _tree_kernels as K

MAX_BIN_SAMPLE = 200_000


@dataclass(frozen=True)
class TreeConfig:
    num_leaves: int = 40
    min_data_in_leaf: int = 50
    num_bins: int = 40
    learning_rate: float = 0.1
    max_rounds: int = 200

    variant = "tree"

    def __post_init__(self):
        for name in ("num_leaves", "min_data_in_leaf", "num_bins", "max_rounds"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_bins > 255:
            raise ValueError("num_bins must be <= 255 (bins are stored as uint8)")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")

    @property
    def budget(self):
        return self.max_rounds


def compute_bin_edges(features, num_bins):
    """Per-feature split candidates at training quantiles.

    Each edge is the midpoint between the distinct value where the cumulative
    count reaches a multiple of n/num_bins and the next distinct value. Features
    with at most ``num_bins`` distinct values get every midpoint.
    """
    n = features.shape[0]
    if n > MAX_BIN_SAMPLE:
        sample = features[np.linspace(0, n - 1, MAX_BIN_SAMPLE).astype(np.int64)]
    else:
        sample = features
    edges = []
    targets = np.arange(1, num_bins) * (sample.shape[0] / num_bins)
    for f in range(features.shape[1]):
        distinct, counts = np.unique(sample[:, f], return_counts=True)
        if distinct.size <= num_bins:
            e = 0.5 * (distinct[:-1] + distinct[1:])
        else:
            # first distinct value whose cumulative count reaches each quantile
            j = np.searchsorted(np.cumsum(counts), targets, side="left")
            j = j[j < distinct.size - 1]
            e = np.unique(0.5 * (distinct[j] + distinct[j + 1]))
        edges.append(np.ascontiguousarray(e, dtype=float))
    return edges


def apply_bins(features, edges):
    out = np.empty(features.shape, dtype=np.uint8)
    for f, e in enumerate(edges):
        out[:, f] = np.searchsorted(e, features[:, f], side="right")
    return out


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    bin_threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self):
        return int((self.feature < 0).sum())


@dataclass(frozen=True)
class TreeEnsemble:
    base_score: float
    trees: tuple
    bin_edges: tuple
    input_dim: int

    variant = "tree"

    def predict(self, features):
        x = np.ascontiguousarray(features, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise WidthMismatch(f"expected {self.input_dim} feature columns, got {x.shape}")
        out = np.full(x.shape[0], self.base_score)
        for t in self.trees:
            K.predict_tree_raw(t.feature, t.threshold, t.left, t.right, t.value, x, out)
        return out

    def to_arrays(self):
        arrays = {"bin_edges/%d" % f: e for f, e in enumerate(self.bin_edges)}
        for k, t in enumerate(self.trees):
            for name in ("feature", "threshold", "bin_threshold", "left", "right", "value"):
                arrays[f"tree/{k}/{name}"] = getattr(t, name)
        meta = {"base_score": self.base_score, "n_trees": len(self.trees), "input_dim": self.input_dim}
        return meta, arrays

    @classmethod
    def from_arrays(cls, meta, arrays):
        edges = tuple(arrays[f"bin_edges/{f}"] for f in range(meta["input_dim"]))
        trees = tuple(
            Tree(*(arrays[f"tree/{k}/{name}"] for name in ("feature", "threshold", "bin_threshold", "left", "right", "value")))
            for k in range(meta["n_trees"])
        )
        return cls(float(meta["base_score"]), trees, edges, int(meta["input_dim"]))


class TreeTrainer:
    """One boosting round per ``train_round`` call."""

    def __init__(self, config, design, seed=0):
        self.config = config
        self.seed = seed
        x = np.ascontiguousarray(design.features, dtype=float)
        self.targets = np.ascontiguousarray(design.targets, dtype=float)
        self.input_dim = x.shape[1]
        self.bin_edges = tuple(compute_bin_edges(x, config.num_bins))
        self.n_bins = np.array([e.size + 1 for e in self.bin_edges], dtype=np.int64)
        self.binned = apply_bins(x, self.bin_edges)
        self.base_score = float(self.targets.mean())
        self.pred = np.full(self.targets.shape[0], self.base_score)
        self.trees = []
        self.mse_history = [self.training_mse()]
        self._eval_sets = {}

    @property
    def rounds(self):
        return len(self.trees)

    @property
    def exhausted(self):
        return self.rounds >= self.config.max_rounds

    def training_mse(self):
        r = self.targets - self.pred
        return float(np.dot(r, r) / r.size)

    def train_round(self):
        if self.exhausted:
            raise Exhausted(f"boosting budget of {self.config.max_rounds} rounds is spent")
        residual = self.targets - self.pred
        tree, leaves = self._grow(residual)
        for rows, value in leaves:
            K.add_to_rows(self.pred, rows, value)
        self.trees.append(tree)
        self.mse_history.append(self.training_mse())
        return self

    def _grow(self, residual):
        cfg = self.config
        max_bins = int(self.n_bins.max())
        binned = self.binned
        min_leaf = cfg.min_data_in_leaf

        nodes = []  # [feature, threshold, bin, left, right, value]

        def new_node(rows, hist):
            idx = len(nodes)
            nodes.append([-1, 0.0, 0, -1, -1, 0.0])
            gain, f, b = K.find_best_split(hist[0], hist[1], self.n_bins, min_leaf)
            return idx, rows, hist, gain, f, b

        root_rows = np.arange(binned.shape[0], dtype=np.int64)
        heap = []
        leaves = {}
        counter = 0

        def push(item):
            nonlocal counter
            idx, rows, hist, gain, f, b = item
            leaves[idx] = rows
            if gain > 0 and np.isfinite(gain):
                # max-heap on gain; the counter keeps ordering deterministic
                heapq.heappush(heap, (-gain, counter, idx, hist, f, b))
                counter += 1

        push(new_node(root_rows, K.build_histogram(binned, residual, root_rows, max_bins)))
        n_leaves = 1
        while heap and n_leaves < cfg.num_leaves:
            _, _, idx, hist, f, b = heapq.heappop(heap)
            rows = leaves.pop(idx)
            left_rows, right_rows = K.partition(binned, rows, f, b)
            if left_rows.size <= right_rows.size:
                h_small = K.build_histogram(binned, residual, left_rows, max_bins)
                h_left, h_right = h_small, (hist[0] - h_small[0], hist[1] - h_small[1])
            else:
                h_small = K.build_histogram(binned, residual, right_rows, max_bins)
                h_left, h_right = (hist[0] - h_small[0], hist[1] - h_small[1]), h_small
            left_item = new_node(left_rows, h_left)
            right_item = new_node(right_rows, h_right)
            nodes[idx][0] = f
            nodes[idx][1] = float(self.bin_edges[f][b])
            nodes[idx][2] = b
            nodes[idx][3] = left_item[0]
            nodes[idx][4] = right_item[0]
            push(left_item)
            push(right_item)
            n_leaves += 1

        leaf_updates = []
        for idx, rows in leaves.items():
            value = cfg.learning_rate * K.sum_rows(residual, rows) / rows.size
            nodes[idx][5] = value
            leaf_updates.append((rows, value))

        arr = np.array(nodes, dtype=object)
        tree = Tree(
            feature=arr[:, 0].astype(np.int64),
            threshold=arr[:, 1].astype(float),
            bin_threshold=arr[:, 2].astype(np.int64),
            left=arr[:, 3].astype(np.int64),
            right=arr[:, 4].astype(np.int64),
            value=arr[:, 5].astype(float),
        )
        return tree, leaf_updates

    def model(self):
        return TreeEnsemble(self.base_score, tuple(self.trees), self.bin_edges, self.input_dim)

    def add_eval_set(self, name, features):
        x = np.ascontiguousarray(features, dtype=float)
        if x.shape[1] != self.input_dim:
            raise WidthMismatch(f"expected {self.input_dim} feature columns, got {x.shape[1]}")
        binned = apply_bins(x, self.bin_edges)
        self._eval_sets[name] = [binned, np.full(x.shape[0], self.base_score), 0]

    def eval_predictions(self, name):
        """Current predictions on a registered eval set, updated incrementally."""
        entry = self._eval_sets[name]
        binned, out, done = entry
        for t in self.trees[done:]:
            K.predict_tree_binned(t.feature, t.bin_threshold, t.left, t.right, t.value, binned, out)
        entry[2] = len(self.trees)
        return out.copy()
