"""Fitting, density prediction, ISE evaluation and grid search.

Densities live on the min-max scaled target axis [0, 1] unless converted
with :func:`to_original_units`. ISE values are reported on that axis and,
divided by the training target range, in original units.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import regress
from .errors import TooFewSamples, WidthMismatch
from .kernel import check_bandwidth
from .seeding import derive_seed, philox
from .transform import (
    RawDataset,
    ScalerState,
    build_design,
    fit_scaler,
    minmax_apply,
    minmax_fit,
    standardize_apply,
    standardize_design,
    standardize_invert,
)

log = logging.getLogger(__name__)

ZERO_MASS = 1e-12
EVAL_CHUNK_ROWS = 1 << 20


@dataclass(frozen=True)
class FitConfig:
    M: int = 100
    h: float = 0.01
    train_fraction: float = 0.8
    grid_size: int = 500
    regressor: object = field(default_factory=regress.TreeConfig)
    seed: int = 0
    patience: int = 5

    def __post_init__(self):
        if int(self.M) < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        check_bandwidth(self.h)
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if int(self.grid_size) < 2:
            raise ValueError("grid_size must be >= 2")
        if int(self.patience) < 1:
            raise ValueError("patience must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self):
        return {
            "M": self.M, "h": self.h, "train_fraction": self.train_fraction,
            "grid_size": self.grid_size, "regressor": regress.config_to_dict(self.regressor),
            "seed": self.seed, "patience": self.patience,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {"M", "h", "train_fraction", "grid_size", "regressor", "seed", "patience"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown fit options: {sorted(unknown)}")
        if "regressor" in d and isinstance(d["regressor"], dict):
            d["regressor"] = regress.config_from_dict(d["regressor"])
        return cls(**d)


@dataclass(frozen=True)
class FittedEstimator:
    model: object
    scaler: ScalerState
    config: FitConfig
    validation_ise: float
    rounds_trained: int = 0
    n_train: int = 0
    n_val: int = 0
    ise_history: tuple = ()

    @property
    def d(self):
        return self.model.input_dim - 1

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, self.config.grid_size)


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class IseReport:
    value: float
    n_test: int
    grid_size: int
    value_original_units: float = float("nan")


def trapezoid(values, grid):
    """Trapezoidal rule along the last axis of ``values``."""
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or values.shape[-1] != grid.size:
        raise ValueError("values and grid need equal lengths >= 2")
    dg = np.diff(grid)
    if not (dg > 0).all():
        raise ValueError("grid must be strictly increasing")
    return 0.5 * ((values[..., 1:] + values[..., :-1]) * dg).sum(axis=-1)


def normalize_densities(raw, grid):
    """Clip at zero and rescale each row to unit trapezoidal mass.

    Rows whose clipped mass is below ``ZERO_MASS`` become uniform densities.
    """
    clipped = np.maximum(np.asarray(raw, dtype=float), 0.0)
    mass = np.atleast_1d(trapezoid(clipped, grid))
    flat = clipped.reshape(-1, grid.size)
    out = np.empty_like(flat)
    ok = mass > ZERO_MASS
    out[ok] = flat[ok] / mass[ok, None]
    out[~ok] = 1.0 / (grid[-1] - grid[0])
    return out.reshape(clipped.shape)


def _stack_rows(x, grid):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    rows = np.empty((x.shape[0] * grid.size, x.shape[1] + 1))
    rows[:, :-1] = np.repeat(x, grid.size, axis=0)
    rows[:, -1] = np.tile(grid, x.shape[0])
    return rows


def _standardized_rows(scaler, x, grid):
    return standardize_apply(_stack_rows(x, grid), scaler.feature_means, scaler.feature_stds)


def predict_raw_batch(est, x, grid=None):
    """Unnormalized predictions, shape (n_points, len(grid)), on the target scale."""
    grid = est.grid if grid is None else np.asarray(grid, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != est.d:
        raise WidthMismatch(f"expected {est.d} covariates, got {x.shape[1]}")
    per_chunk = max(1, EVAL_CHUNK_ROWS // grid.size)
    out = np.empty((x.shape[0], grid.size))
    for start in range(0, x.shape[0], per_chunk):
        xs = x[start:start + per_chunk]
        pred = est.model.predict(_standardized_rows(est.scaler, xs, grid))
        pred = standardize_invert(pred, est.scaler.target_mean, est.scaler.target_std)
        out[start:start + xs.shape[0]] = pred.reshape(xs.shape[0], grid.size)
    return out


def predict_raw(est, x, grid):
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise ValueError("grid points must lie in [0, 1]")
    return predict_raw_batch(est, np.asarray(x, dtype=float).reshape(1, -1), grid)[0]


def predict_density_batch(est, x):
    grid = est.grid
    return normalize_densities(predict_raw_batch(est, x, grid), grid)


def predict_density(est, x):
    grid = est.grid
    values = normalize_densities(predict_raw(est, x, grid), grid)
    return DensityCurve(grid, values)


def to_original_units(curve, scaler):
    """Change of variables y = y_min + g * (y_max - y_min)."""
    span = scaler.y_max - scaler.y_min
    return scaler.y_min + curve.grid * span, curve.values / span


def interpolate_rows(values, grid, points):
    """Row-wise linear interpolation: values[i] evaluated at points[i]."""
    points = np.clip(np.asarray(points, dtype=float), grid[0], grid[-1])
    j = np.clip(np.searchsorted(grid, points, side="right"), 1, grid.size - 1)
    w = (points - grid[j - 1]) / (grid[j] - grid[j - 1])
    rows = np.arange(values.shape[0])
    return (1.0 - w) * values[rows, j - 1] + w * values[rows, j]


def ise_from_densities(densities, grid, y_scaled):
    """ISE up to a constant: mean of int f^2 minus twice the mean of f(y_i | x_i)."""
    densities = np.atleast_2d(densities)
    sq = trapezoid(densities * densities, grid)
    at_y = interpolate_rows(densities, grid, y_scaled)
    return float(sq.mean() - 2.0 * at_y.mean())


def ise(est, test):
    y_scaled = minmax_apply(test.y, est.scaler, clip=True)
    grid = est.grid
    value = ise_from_densities(predict_density_batch(est, test.x), grid, y_scaled)
    return IseReport(value, test.n, grid.size, value / est.scaler.y_range)


def density_quantile(curve, p):
    """Invert the trapezoidal CDF by linear interpolation between grid nodes."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    grid = np.asarray(curve.grid, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    j = int(np.clip(np.searchsorted(cdf, p, side="left"), 1, grid.size - 1))
    lo, hi = cdf[j - 1], cdf[j]
    w = (p - lo) / (hi - lo) if hi > lo else 0.0
    return float(grid[j - 1] + w * (grid[j] - grid[j - 1]))


def density_summaries(curve):
    """Mode, inter-decile tail width and Bowley-type skew of a density curve."""
    d1 = density_quantile(curve, 0.1)
    med = density_quantile(curve, 0.5)
    d9 = density_quantile(curve, 0.9)
    width = d9 - d1
    skew = ((d9 - med) - (med - d1)) / width if width > 0 else 0.0
    mode = float(curve.grid[int(np.argmax(curve.values))])
    return {"mode": mode, "tail_width": width, "bowley_skew": skew}


def split_indices(n, train_fraction, seed):
    perm = philox(derive_seed(seed, "split")).permutation(n)
    n_train = int(np.floor(n * train_fraction))
    if n_train < 2 or n_train >= n:
        raise TooFewSamples(f"{n} observations give {n_train} training and {n - n_train} validation rows")
    return perm[:n_train], perm[n_train:]


def fit(data, config):
    """Fit the estimator with validation-ISE early stopping; returns the best snapshot."""
    train_idx, val_idx = split_indices(data.n, config.train_fraction, config.seed)
    train, val = data.subset(train_idx), data.subset(val_idx)

    y_min, y_max = minmax_fit(train.y)
    y_scaled = (train.y - y_min) / (y_max - y_min)
    design = build_design(train.x, y_scaled, config.M, config.h, derive_seed(config.seed, "design"))
    scaler = fit_scaler(train.y, design)
    std_design = standardize_design(design, scaler)
    del design

    state = regress.fit_init(config.regressor, std_design, derive_seed(config.seed, "regressor"),
                             expected_width=data.d + 1)
    del std_design
    grid = np.linspace(0.0, 1.0, config.grid_size)
    state.add_eval_set("val", _standardized_rows(scaler, val.x, grid))
    y_val = minmax_apply(val.y, scaler, clip=True)

    def val_ise():
        pred = standardize_invert(state.eval_predictions("val"), scaler.target_mean, scaler.target_std)
        dens = normalize_densities(pred.reshape(val.n, grid.size), grid)
        return ise_from_densities(dens, grid, y_val)

    history = []
    if state.exhausted:
        best, best_model, best_round = val_ise(), state.model(), 0
        history.append(best)
    else:
        best, best_model, best_round = np.inf, None, 0
        stale = 0
        while not state.exhausted and stale < config.patience:
            state.train_round()
            value = val_ise()
            history.append(value)
            if value < best:
                best, best_model, best_round = value, state.model(), state.rounds
                stale = 0
            else:
                stale += 1
        log.debug("stopped after %d rounds; best round %d, ISE %.6f", state.rounds, best_round, best)

    return FittedEstimator(best_model, scaler, config, float(best), best_round,
                           train.n, val.n, tuple(history))


def constant_estimator(d, y_min=0.0, y_max=1.0, value=1.0, grid_size=500, seed=0):
    """Estimator whose regressor is the constant ``value``; normalizes to the uniform density."""
    ens = regress.TreeEnsemble(float(value), (), tuple(np.zeros(0) for _ in range(d + 1)), d + 1)
    scaler = ScalerState(float(y_min), float(y_max), np.zeros(d + 1), np.ones(d + 1), 0.0, 1.0)
    config = FitConfig(grid_size=grid_size, seed=seed)
    return FittedEstimator(ens, scaler, config, float("nan"))


@dataclass(frozen=True)
class GridCell:
    M: int
    h: float
    seed: int
    report: IseReport = None
    error: str = None

    @property
    def status(self):
        return "ok" if self.error is None else f"error: {self.error}"


def cell_seed(base_seed, M, h):
    return derive_seed(base_seed, int(M), float(h))


def _run_cell(args):
    data, M, h, base = args
    seed = cell_seed(base.seed, M, h)
    try:
        est = fit(data, replace(base, M=int(M), h=float(h), seed=seed))
    except Exception as exc:  # noqa: BLE001 - recorded per cell, other cells continue
        return GridCell(int(M), float(h), seed, None, f"{type(exc).__name__}: {exc}")
    report = IseReport(est.validation_ise, est.n_val, est.config.grid_size,
                       est.validation_ise / est.scaler.y_range)
    return GridCell(int(M), float(h), seed, report)


def max_workers():
    env = os.environ.get("CONDENSITY_THREADS")
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, limit)


def grid_search(data, Ms, hs, base, workers=None):
    """Validation ISE for every (M, h) cell, sorted by (M, h).

    Cells are independent fits with seeds derived from ``base.seed`` and the
    cell, so the result does not depend on execution order or worker count.
    """
    if not Ms or not hs:
        raise ValueError("Ms and hs must be nonempty")
    cells = sorted({(int(M), float(h)) for M in Ms for h in hs})
    workers = max_workers() if workers is None else max(1, int(workers))
    jobs = [(data, M, h, base) for M, h in cells]
    if workers == 1 or len(jobs) == 1:
        results = [_run_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_cell, jobs))
    return results
