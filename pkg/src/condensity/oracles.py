"""Quadrature checks of the kernel and of convergence of the smoothed truth."""

from .kernel import kernel_mass, tail_mass
from .synthetic import l2_gap, smoothed_truth, truncated_gaussian

CHECK_BANDWIDTHS = (0.1, 0.03, 0.01)
MASS_TOL = 1e-8
TAIL_EPS = 0.05
TAIL_LIMIT = 1e-6

CHECK_NAMES = (
    "kernel_mass_h=0.1",
    "kernel_mass_h=0.03",
    "kernel_mass_h=0.01",
    "kernel_tail_decreasing",
    "smoothed_uniform_interior",
    "l2_gap_uniform_decreasing",
    "l2_gap_truncated_gaussian_decreasing",
)


def _strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def run_checks(bandwidths=CHECK_BANDWIDTHS):
    """Run every check; ``bandwidths`` should run from wide to narrow.

    Passing them in another order makes the monotonicity checks fail, which
    serves as a negative control.
    """
    results = []
    for h in CHECK_BANDWIDTHS:
        mass = kernel_mass(h, -1.0, 1.0, 10001)
        results.append({"name": f"kernel_mass_h={h}", "passed": abs(mass - 1.0) <= MASS_TOL,
                        "value": mass})

    tails = [tail_mass(h, TAIL_EPS) for h in bandwidths]
    results.append({"name": "kernel_tail_decreasing",
                    "passed": _strictly_decreasing(tails) and tails[-1] < TAIL_LIMIT,
                    "value": tails})

    interior = smoothed_truth(lambda u: 1.0 + 0.0 * u, 0.5, 0.03)
    results.append({"name": "smoothed_uniform_interior", "passed": abs(interior - 1.0) <= 1e-6,
                    "value": interior})

    gaps_u = [l2_gap(lambda u: 1.0 + 0.0 * u, h) for h in (0.3, 0.03)]
    results.append({"name": "l2_gap_uniform_decreasing", "passed": _strictly_decreasing(gaps_u),
                    "value": gaps_u})

    tg = truncated_gaussian(0.5, 0.1)
    gaps = [l2_gap(tg, h) for h in bandwidths]
    results.append({"name": "l2_gap_truncated_gaussian_decreasing", "passed": _strictly_decreasing(gaps),
                    "value": gaps})
    return results
