"""Gaussian approximate identity K_h and quadrature checks of its properties."""

import math

import numpy as np

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def check_bandwidth(h):
    h = float(h)
    if not (0.0 < h <= 1.0) or not math.isfinite(h):
        raise ValueError(f"bandwidth must lie in (0, 1], got {h!r}")
    return h


def kernel_eval(t, h):
    """Centered Gaussian density with standard deviation ``h``, evaluated at ``t``.

    Works elementwise on arrays; returns a float for scalar input.
    """
    t = np.asarray(t, dtype=float)
    u = t / h
    out = (INV_SQRT_2PI / h) * np.exp(-0.5 * u * u)
    return float(out) if out.ndim == 0 else out


def kernel_mass(h, lo, hi, n_points=10001):
    """Trapezoidal estimate of the kernel mass on ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo!r}, hi={hi!r}")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    t = np.linspace(lo, hi, int(n_points))
    return float(np.trapezoid(kernel_eval(t, h), t))


def tail_mass(h, eps, n_points=20001):
    """Kernel mass outside ``[-eps, eps]``, as one minus the central mass."""
    return 1.0 - kernel_mass(h, -eps, eps, n_points)
