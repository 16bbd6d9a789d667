"""Shared test helpers and utilities."""

import numpy as np

from shared.types import Params

# Parameter pairs inside T used across the Burkholder checks.
T_SAMPLE = [(1.5, 0.5), (2.0, 3.0), (3.0, 0.0), (4.0, 2.0)]

# Parameter pairs of the sharp-constant convergence sweep, with c_B.
CONVERGENCE_SWEEP = [
    ((2.0, 0.0), 1.0),
    ((4.0, 0.0), 81.0),
    ((3.0, 0.5), 4.25**1.5),
    ((1.5, 0.5), 4.25**0.75),
    ((4.0 / 3.0, 0.0), 3.0 ** (4.0 / 3.0)),
]


def make_params(p: float, tau: float = 0.0) -> Params:
    """
    Helper: Build a Params record.

    Args:
        p: The exponent
        tau: The perturbation parameter

    Returns:
        The validated Params
    """
    return Params(p=p, tau=tau)


def random_points(seed: int, count: int, scale: float = 3.0) -> np.ndarray:
    """
    Helper: Uniform random points of [-scale, scale]^2.

    Returns:
        Array of shape (count, 2)
    """
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, size=(count, 2))


def relative_error(actual: float, expected: float) -> float:
    """Helper: |actual - expected| / max(1, |expected|)."""
    return abs(actual - expected) / max(1.0, abs(expected))
