"""Njitted routines for histogram tree growing and prediction.

A histogram for a node is a pair of (n_features, max_bins) arrays holding the
sum of residuals and the row count of each bin. All loops run in a fixed
order so results are bit-reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def build_histogram(binned, residual, rows, n_bins):
    n_features = binned.shape[1]
    sum_r = np.zeros((n_features, n_bins))
    count = np.zeros((n_features, n_bins), dtype=np.int64)
    for k in range(rows.shape[0]):
        r = rows[k]
        g = residual[r]
        for f in range(n_features):
            b = binned[r, f]
            sum_r[f, b] += g
            count[f, b] += 1
    return sum_r, count


@njit(cache=True)
def find_best_split(sum_r, count, n_bins_per_feature, min_data_in_leaf):
    """Best variance-reduction split of one node.

    Returns (gain, feature, bin); rows with bin <= ``bin`` go left. Gain is
    -inf when no split satisfies ``min_data_in_leaf``. Ties keep the lowest
    feature, then the lowest bin.
    """
    n_features = sum_r.shape[0]
    total_s = 0.0
    total_n = 0
    for b in range(n_bins_per_feature[0]):
        total_s += sum_r[0, b]
        total_n += count[0, b]
    parent = total_s * total_s / total_n
    best_gain = -np.inf
    best_f = -1
    best_b = -1
    for f in range(n_features):
        s_left = 0.0
        n_left = 0
        for b in range(n_bins_per_feature[f] - 1):
            s_left += sum_r[f, b]
            n_left += count[f, b]
            n_right = total_n - n_left
            if n_left < min_data_in_leaf:
                continue
            if n_right < min_data_in_leaf:
                break
            s_right = total_s - s_left
            gain = s_left * s_left / n_left + s_right * s_right / n_right - parent
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_b = b
    return best_gain, best_f, best_b


@njit(cache=True)
def partition(binned, rows, feature, bin_threshold):
    n_left = 0
    for k in range(rows.shape[0]):
        if binned[rows[k], feature] <= bin_threshold:
            n_left += 1
    left = np.empty(n_left, dtype=rows.dtype)
    right = np.empty(rows.shape[0] - n_left, dtype=rows.dtype)
    i = 0
    j = 0
    for k in range(rows.shape[0]):
        r = rows[k]
        if binned[r, feature] <= bin_threshold:
            left[i] = r
            i += 1
        else:
            right[j] = r
            j += 1
    return left, right


@njit(cache=True)
def add_to_rows(pred, rows, value):
    for k in range(rows.shape[0]):
        pred[rows[k]] += value


@njit(cache=True)
def sum_rows(residual, rows):
    s = 0.0
    for k in range(rows.shape[0]):
        s += residual[rows[k]]
    return s


@njit(cache=True)
def predict_tree_binned(feature, bin_threshold, left, right, value, binned, out):
    """Add one tree's output on pre-binned rows into ``out``."""
    for i in range(binned.shape[0]):
        node = 0
        while feature[node] >= 0:
            if binned[i, feature[node]] <= bin_threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


@njit(cache=True)
def predict_tree_raw(feature, threshold, left, right, value, x, out):
    """Add one tree's output on real-valued rows into ``out``; x < threshold goes left."""
    for i in range(x.shape[0]):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]
