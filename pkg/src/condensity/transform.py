"""Target scaling and construction of the auxiliary regression design.

Each observation (x_i, y_i) is expanded into M regression rows
``[x_i, u_im] -> K_h(y_i - u_im)`` with ``u_im ~ Unif[0, 1]``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTarget, TooFewSamples
from .kernel import check_bandwidth, kernel_eval
from .seeding import philox

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class RawDataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2 or x.shape[1] < 1:
            raise ValueError("x must be an (n, d) matrix with d >= 1")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if y.shape[0] < 2:
            raise TooFewSamples("a dataset needs at least 2 observations")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    def subset(self, idx):
        return RawDataset(self.x[idx], self.y[idx])


@dataclass(frozen=True)
class ScalerState:
    y_min: float
    y_max: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    target_mean: float
    target_std: float

    @property
    def y_range(self):
        return self.y_max - self.y_min


def minmax_fit(y):
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("cannot min-max scale an empty vector")
    lo, hi = float(y.min()), float(y.max())
    if not hi > lo:
        raise DegenerateTarget(f"target is constant ({lo!r}); min-max scaling is undefined")
    return lo, hi


def minmax_apply(y, state, clip=False):
    out = (np.asarray(y, dtype=float) - state.y_min) / (state.y_max - state.y_min)
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return out


def minmax_invert(z, state):
    return state.y_min + np.asarray(z, dtype=float) * (state.y_max - state.y_min)


def standardize_fit(values):
    """Per-column mean and population std (floored at ``STD_FLOOR``)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot standardize an empty array")
    means = values.mean(axis=0)
    stds = np.maximum(values.std(axis=0), STD_FLOOR)
    return means, stds


def standardize_apply(values, means, stds):
    return (np.asarray(values, dtype=float) - means) / stds


def standardize_invert(values, means, stds):
    return np.asarray(values, dtype=float) * stds + means


@dataclass(frozen=True)
class AuxiliaryDesign:
    """Stacked regression problem of n*M rows, ordered i-major, m-minor.

    The last feature column holds the auxiliary points; the others repeat x_i.
    """

    features: np.ndarray
    targets: np.ndarray
    group_index: np.ndarray
    standardized: bool = False

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def width(self):
        return self.features.shape[1]


def draw_auxiliary(n, M, seed):
    """(n, M) uniform draws; row i comes from its own Philox substream."""
    aux = np.empty((n, M))
    for i in range(n):
        aux[i] = philox(seed, i).random(M)
    return aux


def build_design(x, y_scaled, M, h, seed, aux=None):
    """Expand (x, y_scaled) into the auxiliary design.

    ``aux`` may be given as an (n, M) array to bypass the random draws.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y_scaled = np.asarray(y_scaled, dtype=float).ravel()
    M = int(M)
    if M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    h = check_bandwidth(h)
    n = x.shape[0]
    if y_scaled.shape[0] != n:
        raise ValueError("x and y_scaled lengths differ")
    if y_scaled.min() < 0.0 or y_scaled.max() > 1.0:
        raise ValueError("y_scaled must lie in [0, 1]")
    if aux is None:
        aux = draw_auxiliary(n, M, seed)
    else:
        aux = np.asarray(aux, dtype=float).reshape(n, M)

    features = np.empty((n * M, x.shape[1] + 1))
    features[:, :-1] = np.repeat(x, M, axis=0)
    features[:, -1] = aux.ravel()
    targets = kernel_eval((y_scaled[:, None] - aux).ravel(), h)
    group_index = np.repeat(np.arange(n), M)
    return AuxiliaryDesign(features, targets, group_index, standardized=False)


def fit_scaler(y_train, design):
    y_min, y_max = minmax_fit(y_train)
    fm, fs = standardize_fit(design.features)
    tm, ts = standardize_fit(design.targets)
    return ScalerState(y_min, y_max, fm, fs, float(tm), float(ts))


def standardize_design(design, scaler):
    return AuxiliaryDesign(
        standardize_apply(design.features, scaler.feature_means, scaler.feature_stds),
        standardize_apply(design.targets, scaler.target_mean, scaler.target_std),
        design.group_index,
        standardized=True,
    )
