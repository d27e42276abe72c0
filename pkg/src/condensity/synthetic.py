"""Synthetic data-generating mechanisms with known conditional densities.

Second parameters of the conditional Gaussians are variances.
"""

from dataclasses import dataclass

import numpy as np

from .kernel import kernel_eval
from .seeding import derive_seed, philox
from .transform import RawDataset

MECHANISMS = {
    "illustration2d": 1,
    "single_relevant": 20,
    "manifold": 20,
    "non_sparse": 20,
}


@dataclass(frozen=True)
class MechanismSpec:
    variant: str
    d: int = None

    def __post_init__(self):
        if self.variant not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.variant!r}; expected one of {sorted(MECHANISMS)}")
        expected = MECHANISMS[self.variant]
        if self.d is None:
            object.__setattr__(self, "d", expected)
        elif self.d != expected:
            raise ValueError(f"mechanism {self.variant!r} has d={expected}, got d={self.d}")


def mechanism(name):
    return MechanismSpec(name)


def angle(x1, x2):
    """atan2(x2, x1) shifted into [0, 2*pi)."""
    theta = np.arctan2(x2, x1)
    theta = np.where(theta < 0, theta + 2.0 * np.pi, theta)
    # -0.0 and tiny negatives can round up to exactly 2*pi
    return np.where(theta >= 2.0 * np.pi, 0.0, theta)


def conditional_params(mech, x):
    """Mean and variance of Y | X = x, row-wise for x of shape (n, d)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != mech.d:
        raise ValueError(f"mechanism {mech.variant!r} needs {mech.d} covariates, got {x.shape[1]}")
    v = mech.variant
    if v in ("illustration2d", "single_relevant"):
        return x[:, 0], 0.25 + x[:, 0] ** 2
    if v == "manifold":
        return angle(x[:, 0], x[:, 1]), np.full(x.shape[0], 0.5)
    return x.mean(axis=1), np.full(x.shape[0], 0.5)


def sample(mech, n, seed):
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    rng = philox(derive_seed(seed, "sample", mech.variant))
    x = rng.standard_normal((int(n), mech.d))
    mean, var = conditional_params(mech, x)
    y = mean + np.sqrt(var) * rng.standard_normal(int(n))
    return RawDataset(x, y)


def gaussian_pdf(y, mean, var):
    return np.exp(-0.5 * (y - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def true_density(mech, x, y):
    """Conditional density f(y | x) in original units; broadcasts over rows of x and y."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    mean, var = conditional_params(mech, x.reshape(1, -1) if single else x)
    out = gaussian_pdf(np.asarray(y, dtype=float), mean, var)
    return float(out[0]) if single and np.ndim(y) == 0 else out


def on_unit_interval(density, lo, hi):
    """Transport a density on [lo, hi] to [0, 1] through u = (y - lo) / (hi - lo)."""
    span = hi - lo
    return lambda u: span * density(lo + np.asarray(u, dtype=float) * span)


def truncated_gaussian(mean=0.5, sd=0.1):
    """Gaussian density restricted to [0, 1] and renormalized there."""
    from scipy.special import ndtr

    mass = ndtr((1.0 - mean) / sd) - ndtr((0.0 - mean) / sd)

    def density(u):
        u = np.asarray(u, dtype=float)
        inside = (u >= 0.0) & (u <= 1.0)
        return np.where(inside, gaussian_pdf(u, mean, sd * sd) / mass, 0.0)

    return density


def smoothed_truth(density_on_unit, y, h, n_quad=10001):
    """Convolution of a [0, 1]-supported density with K_h, by trapezoidal quadrature.

    ``y`` may be a scalar or an array of points in [0, 1].
    """
    if int(n_quad) < 2:
        raise ValueError("n_quad must be >= 2")
    gamma = np.linspace(0.0, 1.0, int(n_quad))
    f = np.asarray(density_on_unit(gamma), dtype=float)
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty(y_arr.shape)
    step = max(1, 4_000_000 // gamma.size)
    for start in range(0, y_arr.size, step):
        yy = y_arr[start:start + step]
        integrand = kernel_eval(gamma[None, :] - yy[:, None], h) * f[None, :]
        out[start:start + step] = np.trapezoid(integrand, gamma, axis=1)
    return float(out[0]) if np.ndim(y) == 0 else out


def l2_gap(density_on_unit, h, n_quad=2001, smoother=None):
    """L2([0, 1]) distance between a density and its smoothed version.

    ``smoother(density, y, h, n_quad)`` defaults to :func:`smoothed_truth`.
    """
    smoother = smoothed_truth if smoother is None else smoother
    y = np.linspace(0.0, 1.0, int(n_quad))
    diff = smoother(density_on_unit, y, h, n_quad) - density_on_unit(y)
    return float(np.sqrt(np.trapezoid(diff * diff, y)))
