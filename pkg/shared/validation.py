"""Shared validation logic for parameters, weights and grids."""

import math

import numpy as np


def validate_exponent(p: float) -> float:
    """
    Validate the integrability exponent.

    Args:
        p: The exponent to validate

    Returns:
        The validated exponent

    Raises:
        ValueError: If p is not a finite number greater than 1
    """
    if not math.isfinite(p) or p <= 1.0:
        raise ValueError(f"p must be a finite number > 1, got {p!r}")
    return p


def normalize_tau(tau: float) -> float:
    """
    Validate the perturbation parameter; only tau^2 matters.

    Args:
        tau: The perturbation parameter

    Returns:
        |tau|

    Raises:
        ValueError: If tau is not finite
    """
    if not math.isfinite(tau):
        raise ValueError(f"tau must be finite, got {tau!r}")
    return abs(tau)


def validate_weight_sum(weights: list[float], tol: float = 1e-12) -> list[float]:
    """
    Validate that mixture weights form a probability vector.

    Args:
        weights: The weights to validate
        tol: Allowed deviation of the sum from 1

    Returns:
        The validated weights

    Raises:
        ValueError: If a weight is negative or the sum differs from 1 by more than tol
    """
    if any(w < 0 or not math.isfinite(w) for w in weights):
        raise ValueError("weights must be finite and non-negative")
    total = math.fsum(weights)
    if abs(total - 1.0) > tol:
        raise ValueError(f"weights must sum to 1 within {tol}, got {total!r}")
    return weights


def validate_cutoff(N: float) -> float:
    """
    Validate the truncation level of a continuous laminate.

    Raises:
        ValueError: If N is not a finite number greater than 1
    """
    if not math.isfinite(N) or N <= 1.0:
        raise ValueError(f"N must be a finite number > 1, got {N!r}")
    return N


def validate_layer_fraction(fraction: float) -> float:
    """
    Validate the share of a block given to transition collars.

    Raises:
        ValueError: If fraction is outside (0, 0.2]
    """
    if not 0.0 < fraction <= 0.2:
        raise ValueError(f"layer_fraction must lie in (0, 0.2], got {fraction!r}")
    return fraction


def validate_period_fraction(fraction: float) -> float:
    """
    Validate the laminate period as a fraction of the block width.

    Raises:
        ValueError: If fraction is outside (0, 1]
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"period_fraction must lie in (0, 1], got {fraction!r}")
    return fraction


def validate_square_grid(values: np.ndarray, min_size: int = 32) -> np.ndarray:
    """
    Validate a sampled field on a square grid.

    Args:
        values: 2-D array of samples
        min_size: Smallest accepted side length

    Returns:
        The validated array

    Raises:
        ValueError: If the array is not square, too small, or not finite
    """
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"grid must be square, got shape {values.shape}")
    if values.shape[0] < min_size:
        raise ValueError(
            f"grid must be at least {min_size}x{min_size}, got {values.shape[0]}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("grid values must be finite")
    return values


def validate_zero_frame(values: np.ndarray, frame: int) -> np.ndarray:
    """
    Validate that a field vanishes on a frame of the given width.

    Raises:
        ValueError: If any sample in the frame is non-zero
    """
    if frame <= 0:
        return values
    mask = np.ones(values.shape, dtype=bool)
    mask[frame:-frame, frame:-frame] = False
    if np.any(values[mask] != 0.0):
        raise ValueError(f"values must vanish on a frame of width {frame} cells")
    return values


def validate_digest(digest: str) -> str:
    """
    Validate a run digest: 64 lowercase hex characters.

    Raises:
        ValueError: If the digest has the wrong length or alphabet
    """
    if len(digest) != 64 or any(c not in "0123456789abcdef" for c in digest):
        raise ValueError(f"digest must be 64 lowercase hex characters, got {digest!r}")
    return digest
