"""Fourier multipliers on the periodic grid.

Frequencies are xi = 2 pi fftfreq(n, h), integer multiples of pi/L. Every
zero-homogeneous multiplier is set to 0 at xi = 0, so fields are treated
as zero-mean.
"""

from typing import Literal

import numpy as np

from engine.realization import hessian
from shared.config import get_abs_tol
from shared.contracts.spectral import NormRatioReport
from shared.errors import InvalidParamsError, WraparoundError, ZeroDenominatorError
from shared.logs import get_logger
from shared.types import GridFunction2D, Params, SpectralField, SymMat2

logger = get_logger(__name__)

GUARD_FRACTION = 0.1
WRAPAROUND_TOL = 1e-8


def frequencies(phi: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """(xi1, xi2) on the transform grid; axis 0 carries xi1."""
    xi = 2.0 * np.pi * np.fft.fftfreq(phi.n, d=phi.h)
    return np.meshgrid(xi, xi, indexing="ij")


def _apply(phi: SpectralField, multiplier: np.ndarray) -> SpectralField:
    out = np.fft.ifft2(np.fft.fft2(phi.values) * multiplier)
    if np.isrealobj(phi.values):
        out = out.real
    return SpectralField(values=out, half_period=phi.half_period)


def _zero_homogeneous(numerator: np.ndarray, xi1: np.ndarray, xi2: np.ndarray):
    r2 = xi1 * xi1 + xi2 * xi2
    out = np.zeros_like(r2)
    nonzero = r2 > 0.0
    out[nonzero] = numerator[nonzero] / r2[nonzero]
    return out


def riesz_square(phi: SpectralField, j: int) -> SpectralField:
    """R_j^2 phi, multiplier -xi_j^2 / |xi|^2."""
    if j not in (1, 2):
        raise InvalidParamsError(f"j must be 1 or 2, got {j!r}")
    xi1, xi2 = frequencies(phi)
    xj = xi1 if j == 1 else xi2
    return _apply(phi, _zero_homogeneous(-xj * xj, xi1, xi2))


def riesz_mixed(phi: SpectralField) -> SpectralField:
    """2 R1 R2 phi, multiplier -2 xi1 xi2 / |xi|^2."""
    xi1, xi2 = frequencies(phi)
    return _apply(phi, _zero_homogeneous(-2.0 * xi1 * xi2, xi1, xi2))


def laplacian(phi: SpectralField) -> SpectralField:
    xi1, xi2 = frequencies(phi)
    return _apply(phi, -(xi1 * xi1 + xi2 * xi2))


def gradient(phi: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Spectral first derivatives; the Nyquist mode is dropped."""
    xi1, xi2 = frequencies(phi)
    nyquist = np.abs(np.fft.fftfreq(phi.n)) == 0.5
    parts = []
    for xj, axis in ((xi1, 0), (xi2, 1)):
        m = 1j * xj
        mask = nyquist[:, None] if axis == 0 else nyquist[None, :]
        m = np.where(mask, 0.0, m)
        parts.append(_apply(phi, m))
    return parts[0], parts[1]


def heat_extension(phi: SpectralField, t: float) -> SpectralField:
    """
    Solution of d/dt U = (1/2) Laplacian U at time t with U(0) = phi.

    Raises:
        InvalidParamsError: If t < 0
    """
    if not t >= 0.0:
        raise InvalidParamsError(f"t must be >= 0, got {t!r}")
    if t == 0.0:
        return phi
    xi1, xi2 = frequencies(phi)
    return _apply(phi, np.exp(-(xi1 * xi1 + xi2 * xi2) * t / 2.0))


def transform_projection(phi: SpectralField, A: SymMat2, T: float) -> SpectralField:
    """
    Multiplier (A xi . xi) / |xi|^2 (1 - exp(-T |xi|^2)).

    The conditional expectation of the transform by A of the heat
    martingale at horizon T, given the terminal position. The sign is
    positive: as T grows, A = I gives phi and A = diag(1, -1) gives
    -(R1^2 - R2^2) phi, since R_j^2 carries the multiplier -xi_j^2 / |xi|^2.
    """
    xi1, xi2 = frequencies(phi)
    quad = A.a11 * xi1 * xi1 + 2.0 * A.a12 * xi1 * xi2 + A.a22 * xi2 * xi2
    r2 = xi1 * xi1 + xi2 * xi2
    return _apply(phi, _zero_homogeneous(quad, xi1, xi2) * -np.expm1(-T * r2))


# ============================================================================
# Norm ratios
# ============================================================================


def _frame_mask(n: int, fraction: float) -> np.ndarray:
    w = max(1, int(np.ceil(fraction * n)))
    mask = np.ones((n, n), dtype=bool)
    mask[w:-w, w:-w] = False
    return mask


def guard_frame_energy(values: np.ndarray, fraction: float = GUARD_FRACTION) -> float:
    """Share of sum |v|^2 carried by the outer frame of the given width."""
    energy = np.abs(values) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    return float(np.sum(energy[_frame_mask(values.shape[0], fraction)])) / total


def _p_norm(values: np.ndarray, p: float) -> float:
    """Grid p-norm without the h^2 factor; it cancels in every ratio."""
    return float(np.sum(np.abs(values) ** p) ** (1.0 / p))


def _centered(phi: SpectralField) -> tuple[SpectralField, float]:
    mean = complex(np.mean(phi.values))
    mean = mean.real if np.isrealobj(phi.values) else mean
    return SpectralField(values=phi.values - mean, half_period=phi.half_period), abs(mean)


def norm_ratio_report(
    params: Params,
    phi: SpectralField,
    kind: str = "difference",
) -> NormRatioReport:
    """
    ||((D phi)^2 + tau^2 (S phi)^2)^(1/2)||_p / ||S phi||_p with S = R1^2 + R2^2.

    D is R1^2 - R2^2 for kind "difference" and 2 R1 R2 for kind "mixed".

    Raises:
        ZeroDenominatorError: If S phi vanishes
    """
    if kind not in ("difference", "mixed"):
        raise InvalidParamsError(f"kind must be 'difference' or 'mixed', got {kind!r}")
    centered, mean = _centered(phi)
    r1, r2 = riesz_square(centered, 1).values, riesz_square(centered, 2).values
    diff = r1 - r2 if kind == "difference" else riesz_mixed(centered).values
    total = r1 + r2
    p, tau = params.p, params.tau

    numerator = _p_norm(np.sqrt(np.abs(diff) ** 2 + tau * tau * np.abs(total) ** 2), p)
    denominator = _p_norm(total, p)
    denominator_phi = _p_norm(centered.values, p)
    if denominator <= get_abs_tol() * max(1.0, denominator_phi):
        raise ZeroDenominatorError("||(R1^2 + R2^2) phi||_p", denominator)

    energy = guard_frame_energy(centered.values)
    if energy > WRAPAROUND_TOL:
        logger.warning(f"guard frame carries {energy:.2e} of the field energy")
    return NormRatioReport(
        kind=kind,
        p=p,
        tau=tau,
        ratio=numerator / denominator,
        ratio_phi=numerator / denominator_phi,
        denominator_gap=abs(denominator - denominator_phi) / denominator_phi,
        mean_correction=mean,
        guard_frame_energy=energy,
    )


def norm_ratio(params: Params, phi: SpectralField, kind: str = "difference") -> float:
    return norm_ratio_report(params, phi, kind).ratio


# ============================================================================
# Grid functions
# ============================================================================


def periodic_field(u: GridFunction2D) -> SpectralField:
    """Drop the last row and column: the period is 2L with spacing h."""
    return SpectralField(values=u.values[:-1, :-1], half_period=u.half_width)


def laplacian_source(u: GridFunction2D) -> SpectralField:
    """phi = -Laplacian(u) from the finite-difference Hessian, on the periodic grid."""
    hs = hessian(u)
    values = np.zeros((u.n - 1, u.n - 1))
    values[1:, 1:] = -(hs.h11 + hs.h22)
    return SpectralField(values=values, half_period=u.half_width)


def zero_padded(u: GridFunction2D, pad: int | None = None) -> GridFunction2D:
    """Embed u in a larger zero grid with the same spacing; pad defaults to n//4 per side."""
    pad = max(1, u.n // 4) if pad is None else pad
    values = np.pad(u.values, pad)
    half_width = u.h * (values.shape[0] - 1) / 2.0
    return GridFunction2D(values=values, half_width=half_width, boundary_flag=u.boundary_flag)


def cross_check_identity(
    u: GridFunction2D,
    reference: Literal["finite-difference", "spectral"] = "finite-difference",
) -> float:
    """
    Relative L2 gap between spectral (R1^2 - R2^2)(-Laplacian u) and
    d11 u - d22 u at the interior points.

    The finite-difference reference is second order, so a smooth bump sits
    at O(h^2) however band-limited it is. The spectral reference applies
    the multiplier xi2^2 - xi1^2 to u directly and reaches round-off on
    band-limited input.

    Raises:
        InvalidParamsError: If reference is not one of the two modes
        WraparoundError: If u reaches the 10% guard frame of the periodic cell
    """
    if reference not in ("finite-difference", "spectral"):
        raise InvalidParamsError(f"unknown reference {reference!r}")
    values = u.values
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return 0.0
    frame = float(np.max(np.abs(values[_frame_mask(u.n, GUARD_FRACTION)])))
    if frame > WRAPAROUND_TOL * peak:
        raise WraparoundError(frame / peak)

    field = periodic_field(u)
    phi = laplacian(field)
    phi = SpectralField(values=-phi.values, half_period=phi.half_period)
    spectral = riesz_square(phi, 1).values - riesz_square(phi, 2).values
    if reference == "spectral":
        xi1, xi2 = frequencies(field)
        target = _apply(field, xi2 * xi2 - xi1 * xi1).values[1:, 1:]
    else:
        hs = hessian(u)
        target = hs.h11 - hs.h22
    spectral = spectral[1:, 1:]
    scale = float(np.linalg.norm(spectral))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(spectral - target)) / scale
