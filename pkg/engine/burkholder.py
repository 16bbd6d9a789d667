"""Burkholder-type functions u, v, U and their numeric certificates.

Coordinates: x = (x1, x2) and the rotated chart y1 = (x1 + x2)/2,
y2 = (x1 - x2)/2. The touching lines |x2| = (p*-1)|x1| and the cones are
described in the chart s = (y1, -y2), where x = (s1 - s2, s1 + s2).
"""

import numpy as np

from shared.config import ZIGZAG_REL_TOL, get_abs_tol, get_rel_tol
from shared.contracts.burkholder import (
    HessianIdentityReport,
    MajorantReport,
    ThresholdSearchReport,
    UPropertiesReport,
    ZigzagScanReport,
)
from shared.errors import ConeUndefinedError, InvalidParamsError
from shared.logs import get_logger
from shared.types import Params, PlanePoint

logger = get_logger(__name__)


# ============================================================================
# Closed forms on moduli (vectorized)
# ============================================================================


def v_from_moduli(params: Params, a1, a2):
    """(tau^2 a1^2 + a2^2)^(p/2) - c_B a1^p for a1, a2 >= 0."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    return (params.tau**2 * a1**2 + a2**2) ** (params.p / 2.0) - params.c_B * a1**params.p


def u_from_moduli(params: Params, a1, a2):
    """alpha_p (a1 + a2)^(p-1) (a2 - (p*-1) a1) for a1, a2 >= 0."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    q = params.p_star_minus_1
    return params.alpha_p * (a1 + a2) ** (params.p - 1.0) * (a2 - q * a1)


def U_from_moduli(params: Params, a1, a2):
    """The two-branch function: u on one side of a2 = (p*-1) a1, v on the other."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    v = v_from_moduli(params, a1, a2)
    if params.p == 2.0:
        return v
    u = u_from_moduli(params, a1, a2)
    outer = a2 >= params.p_star_minus_1 * a1
    if params.p > 2.0:
        return np.where(outer, u, v)
    return np.where(outer, v, u)


def U_tilde_values(params: Params, y1, y2):
    """U in the y-chart: U(y1 + y2, y1 - y2)."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    return U_from_moduli(params, np.abs(y1 + y2), np.abs(y1 - y2))


def v_tilde_values(params: Params, y1, y2):
    """v in the y-chart: v(y1 + y2, y1 - y2)."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    return v_from_moduli(params, np.abs(y1 + y2), np.abs(y1 - y2))


# ============================================================================
# Point evaluation
# ============================================================================


def eval_v(params: Params, pt: PlanePoint) -> float:
    return float(v_from_moduli(params, abs(pt.x1), abs(pt.x2)))


def eval_u(params: Params, pt: PlanePoint) -> float:
    return float(u_from_moduli(params, abs(pt.x1), abs(pt.x2)))


def eval_U(params: Params, pt: PlanePoint) -> float:
    """
    Evaluate U at a point.

    For p > 2, U = u where |x2| >= (p*-1)|x1| and v elsewhere; for p < 2 the
    sides swap. At p = 2 both branches equal x2^2 - x1^2 and v is returned.
    """
    return float(U_from_moduli(params, abs(pt.x1), abs(pt.x2)))


def eval_U_tilde(params: Params, y: PlanePoint) -> float:
    """Evaluate U at a point given through its y-chart (see PlanePoint.from_y)."""
    return float(U_tilde_values(params, y.y1, y.y2))


def operator_norm_target(params: Params) -> float:
    """((p*-1)^2 + tau^2)^(1/2), the conjectured operator norm."""
    return params.operator_norm_target


def _modulus(z) -> np.ndarray:
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return np.abs(z)
    return np.linalg.norm(z, axis=-1)


def eval_u_pair(params: Params, x, y):
    """
    u on pairs of planar vectors, through the moduli |x| and |y|.

    Args:
        params: The (p, tau) pair
        x: Complex numbers, or real arrays whose last axis has length 2
        y: Same shape as x

    Returns:
        alpha_p (|x| + |y|)^(p-1) (|y| - (p*-1)|x|), elementwise
    """
    return u_from_moduli(params, _modulus(x), _modulus(y))


def eval_v_pair(params: Params, x, y):
    """v on pairs of planar vectors, through the moduli |x| and |y|."""
    return v_from_moduli(params, _modulus(x), _modulus(y))


# ============================================================================
# Zigzag concavity
# ============================================================================


def _kink_tube(params: Params, y1_lo, y2_lo, y1_hi, y2_hi) -> np.ndarray:
    """Whether the segment between two points crosses the non-smooth set."""
    q = params.p_star_minus_1
    x1_lo, x2_lo = y1_lo + y2_lo, y1_lo - y2_lo
    x1_hi, x2_hi = y1_hi + y2_hi, y1_hi - y2_hi
    branch_lo = np.abs(x2_lo) - q * np.abs(x1_lo)
    branch_hi = np.abs(x2_hi) - q * np.abs(x1_hi)
    return (
        (x1_lo * x1_hi <= 0.0)
        | (x2_lo * x2_hi <= 0.0)
        | ((branch_lo * branch_hi <= 0.0) & (params.p != 2.0))
    )


def scan_zigzag_concavity(
    params: Params, box: float = 2.0, n: int = 256, h: float = 1e-3
) -> ZigzagScanReport:
    """
    Scan centered second differences of U along e_y1 and e_y2.

    Points whose stencil crosses x1 = 0, x2 = 0 or the branch boundary are
    tube points: they use the one-sided test f(y+he) + f(y-he) <= 2f(y) + tol
    and are reported separately.

    Args:
        params: The (p, tau) pair
        box: Half-width of the square [-box, box]^2 in y-coordinates
        n: Grid points per side, at least 16
        h: Difference step, smaller than the grid spacing

    Returns:
        Report with the worst normalized second difference and its location

    Raises:
        InvalidParamsError: If the box is degenerate or n, h are out of range
    """
    if not box > 0.0:
        raise InvalidParamsError(f"box half-width must be positive, got {box!r}")
    if n < 16:
        raise InvalidParamsError(f"n must be at least 16, got {n}")
    spacing = 2.0 * box / (n - 1)
    if not 0.0 < h < spacing:
        raise InvalidParamsError(f"h must lie in (0, {spacing:.3g}), got {h!r}")

    axis = np.linspace(-box, box, n)
    Y1, Y2 = np.meshgrid(axis, axis, indexing="ij")
    center = U_tilde_values(params, Y1, Y2)
    scale = float(np.max(np.abs(center)))
    threshold = ZIGZAG_REL_TOL * (1.0 + scale)

    worst = -np.inf
    worst_at = (0.0, 0.0)
    worst_axis = 1
    tube_points = 0
    tube_worst = -np.inf
    for direction, (d1, d2) in ((1, (h, 0.0)), (2, (0.0, h))):
        plus = U_tilde_values(params, Y1 + d1, Y2 + d2)
        minus = U_tilde_values(params, Y1 - d1, Y2 - d2)
        excess = plus + minus - 2.0 * center
        tube = _kink_tube(params, Y1 - d1, Y2 - d2, Y1 + d1, Y2 + d2)
        tube_points += int(np.count_nonzero(tube))
        if np.any(tube):
            tube_worst = max(tube_worst, float(np.max(excess[tube])))
        smooth = np.where(tube, -np.inf, excess / (h * h))
        index = np.unravel_index(int(np.argmax(smooth)), smooth.shape)
        if smooth[index] > worst:
            worst = float(smooth[index])
            worst_at = (float(Y1[index]), float(Y2[index]))
            worst_axis = direction

    passed = worst <= threshold and tube_worst <= threshold
    if not passed and params.in_T:
        logger.warning(
            f"zigzag scan found {worst:.3e} at {worst_at} for p={params.p}, "
            f"tau={params.tau}"
        )
    return ZigzagScanReport(
        params=params,
        box=box,
        n=n,
        h=h,
        worst=worst,
        worst_at=worst_at,
        worst_axis=worst_axis,
        tube_points=tube_points,
        tube_worst=tube_worst if np.isfinite(tube_worst) else 0.0,
        threshold=threshold,
        asserted=params.in_T,
        passed=passed,
    )


def zigzag_threshold_search(
    p: float, taus: list[float], box: float = 2.0, n: int = 128, h: float = 1e-3
) -> ThresholdSearchReport:
    """Scan increasing tau and return the first one whose scan fails."""
    ordered = sorted(taus)
    worst = []
    first_violation = None
    for tau in ordered:
        report = scan_zigzag_concavity(Params(p=p, tau=tau), box=box, n=n, h=h)
        worst.append(report.worst)
        if not report.passed and first_violation is None:
            first_violation = tau
            logger.info(f"first concavity violation at tau={tau} for p={p}")
    return ThresholdSearchReport(
        p=p, taus=ordered, worst=worst, first_violation=first_violation
    )


# ============================================================================
# Majorant and structural properties
# ============================================================================


def _cone_slope(params: Params, operation: str) -> float:
    if params.k_cone is None:
        raise ConeUndefinedError(operation)
    return params.k_cone


def _line_points(params: Params, extent: float, count: int):
    """Points of L_k and L_1/k in the y-chart, s2 = k s1 and s2 = s1/k."""
    k = params.k_cone
    assert k is not None
    s1 = np.linspace(-extent, extent, count)
    s1 = np.concatenate([s1, s1])
    s2 = np.concatenate([k * s1[:count], s1[count:] / k])
    inside = np.abs(s2) <= extent
    return s1[inside], -s2[inside]


def _cone_values(params: Params, moving, fixed, first_moves: bool):
    """U at s = (moving, fixed) or s = (fixed, moving)."""
    if first_moves:
        return U_tilde_values(params, moving, -fixed)
    return U_tilde_values(params, fixed, -moving)


def verify_majorant(
    params: Params,
    box: float = 3.0,
    n: int = 512,
    abs_tol: float | None = None,
    rel_tol: float | None = None,
) -> MajorantReport:
    """
    Check U >= v on a grid over [-box, box]^2 in y-coordinates.

    The gap is compared against abs_tol + rel_tol * max|v|; cancellation in
    U - v grows with the function scale. On the lines L_k and L_1/k the
    relative error |U - v| / (1 + |v|) is also reported.
    """
    abs_tol = get_abs_tol() if abs_tol is None else abs_tol
    rel_tol = get_rel_tol() if rel_tol is None else rel_tol
    if not box > 0.0:
        raise InvalidParamsError(f"box half-width must be positive, got {box!r}")

    axis = np.linspace(-box, box, n)
    Y1, Y2 = np.meshgrid(axis, axis, indexing="ij")
    v = v_tilde_values(params, Y1, Y2)
    gap = U_tilde_values(params, Y1, Y2) - v
    index = np.unravel_index(int(np.argmin(gap)), gap.shape)
    min_gap = float(gap[index])
    scale = float(np.max(np.abs(v)))

    line_max_error = None
    if params.k_cone is not None:
        y1, y2 = _line_points(params, box, n)
        v_line = v_tilde_values(params, y1, y2)
        err = np.abs(U_tilde_values(params, y1, y2) - v_line) / (1.0 + np.abs(v_line))
        line_max_error = float(np.max(err)) if err.size else 0.0

    passed = min_gap >= -(abs_tol + rel_tol * scale)
    if line_max_error is not None:
        passed = passed and line_max_error <= abs_tol + rel_tol
    return MajorantReport(
        params=params,
        box=box,
        n=n,
        min_gap=min_gap,
        min_gap_at=(float(Y1[index]), float(Y2[index])),
        scale=scale,
        line_max_error=line_max_error,
        passed=passed,
    )


def verify_U_properties(
    params: Params, n: int = 64, tol: float = 1e-8
) -> UPropertiesReport:
    """
    Check the structural properties of U on sampled points.

    1. v >= 0 on the cone between L_k and L_1/k.
    2. U(0, 0) = v(0, 0) = 0.
    3. U = v on L_k and L_1/k.
    4. U is linear along s1 in the first linear cone and along s2 in the
       second (for p > 2 these are s1 <= s2 <= k s1 and s1/k <= s2 <= s1;
       for p < 2 the mirrored cones bounded by s2 = -s1).

    Raises:
        ConeUndefinedError: At p = 2
    """
    k = _cone_slope(params, "verify_U_properties")
    fixed = np.linspace(0.5, 2.0, n)
    frac = np.linspace(0.1, 0.9, n)
    C, F = np.meshgrid(fixed, frac, indexing="ij")

    # (1) between the lines: s1 > 0, s1/k <= s2 <= k s1
    s1 = C
    s2 = s1 / k + F * (k - 1.0 / k) * s1
    v_cone = v_tilde_values(params, s1, -s2)
    v_scale = float(np.max(np.abs(v_cone)))
    v_nonnegative = bool(np.min(v_cone) >= -tol * (1.0 + v_scale))

    # (2)
    vanishes = U_tilde_values(params, 0.0, 0.0) == 0.0 and (
        v_tilde_values(params, 0.0, 0.0) == 0.0
    )

    # (3)
    y1, y2 = _line_points(params, 3.0, 4 * n)
    v_line = v_tilde_values(params, y1, y2)
    line_err = np.abs(U_tilde_values(params, y1, y2) - v_line) / (1.0 + np.abs(v_line))
    worst_line = float(np.max(line_err))

    # (4) the fixed coordinate is c, the moving one ranges over [lo, hi]
    if params.p > 2.0:
        lo, hi = C / k, C
    else:
        lo, hi = -C, C / k
    interior = 0.2 + 0.6 * (F - 0.1) / 0.8
    moving = lo + interior * (hi - lo)
    step = 0.1 * (hi - lo)
    curvature = 0.0
    for first_moves in (True, False):
        centre = _cone_values(params, moving, C, first_moves)
        excess = (
            _cone_values(params, moving + step, C, first_moves)
            + _cone_values(params, moving - step, C, first_moves)
            - 2.0 * centre
        )
        scale = float(np.max(np.abs(centre)))
        curvature = max(curvature, float(np.max(np.abs(excess))) / (1.0 + scale))

    return UPropertiesReport(
        params=params,
        v_nonnegative_on_cones=v_nonnegative,
        vanishes_at_origin=bool(vanishes),
        equals_v_on_lines=worst_line <= tol,
        linear_in_cones=curvature <= tol,
        worst_line_error=worst_line,
        worst_cone_curvature=curvature,
    )


# ============================================================================
# Hessian identity of the pair form
# ============================================================================

# Samples whose A + B + C is below this share of |A| + |B| + |C| are skipped.
CANCELLATION_SHARE = 1e-2


def random_hessian_samples(
    rng: np.random.Generator, count: int, lo: float = 0.5, hi: float = 2.0
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Samples (x, y, h, k) with lo <= |x|, |y| <= hi and Gaussian directions."""
    samples = []
    for _ in range(count):
        angles = rng.uniform(0.0, 2.0 * np.pi, size=2)
        radii = rng.uniform(lo, hi, size=2)
        x = radii[0] * np.array([np.cos(angles[0]), np.sin(angles[0])])
        y = radii[1] * np.array([np.cos(angles[1]), np.sin(angles[1])])
        samples.append((x, y, rng.standard_normal(2), rng.standard_normal(2)))
    return samples


def hessian_terms(params: Params, x, y, h, k) -> tuple[float, float, float]:
    """The closed-form terms A, B, C at (x, y) in the direction (h, k)."""
    p = params.p
    nx, ny = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    s = nx + ny
    xu, yu = np.asarray(x) / nx, np.asarray(y) / ny
    hh, kk = float(np.dot(h, h)), float(np.dot(k, k))
    yk = float(np.dot(yu, k))
    A = p * (p - 1.0) * (hh - kk) * s ** (p - 2.0)
    B = p * (p - 2.0) * (kk - yk**2) / ny * s ** (p - 1.0)
    C = (
        p
        * (p - 1.0)
        * (p - 2.0)
        * (float(np.dot(xu, h)) + yk) ** 2
        * nx
        * s ** (p - 3.0)
    )
    return A, B, C


def _directional_second(params: Params, x, y, h, k, eps: float) -> float:
    def form(step: float) -> float:
        plus = eval_u_pair(params, x + step * h, y + step * k)
        minus = eval_u_pair(params, x - step * h, y - step * k)
        centre = eval_u_pair(params, x, y)
        return float(plus + minus - 2.0 * centre) / (step * step)

    # one Richardson step removes the O(eps^2) term
    return (4.0 * form(eps / 2.0) - form(eps)) / 3.0


def verify_hessian_identity(
    params: Params, samples, rel_tol: float = 1e-4
) -> HessianIdentityReport:
    """
    Compare the second directional derivative of u with A + B + C.

    Returns the per-sample ratios; for p >= 2 they must agree with one
    negative constant to rel_tol. For p < 2 the report is informational.

    Raises:
        InvalidParamsError: If a sample has |x||y| = 0
    """
    ratios = []
    skipped = 0
    for x, y, h, k in samples:
        x, y, h, k = (np.asarray(a, dtype=float) for a in (x, y, h, k))
        nx, ny = float(np.linalg.norm(x)), float(np.linalg.norm(y))
        if nx * ny == 0.0:
            raise InvalidParamsError("Hessian identity samples need |x||y| != 0")
        A, B, C = hessian_terms(params, x, y, h, k)
        total = A + B + C
        if abs(total) <= CANCELLATION_SHARE * (abs(A) + abs(B) + abs(C)):
            skipped += 1
            continue
        direction = max(float(np.linalg.norm(h)), float(np.linalg.norm(k)))
        eps = 1e-2 * min(nx, ny) / direction
        ratios.append(_directional_second(params, x, y, h, k, eps) / total)

    if skipped:
        logger.warning(f"skipped {skipped} Hessian samples with cancelling terms")
    if not ratios:
        return HessianIdentityReport(
            params=params,
            ratios=[],
            constant=None,
            max_relative_spread=None,
            skipped=skipped,
            asserted=params.p >= 2.0,
            passed=False,
        )
    constant = float(np.median(ratios))
    spread = float(np.max(np.abs(np.asarray(ratios) / constant - 1.0)))
    return HessianIdentityReport(
        params=params,
        ratios=ratios,
        constant=constant,
        max_relative_spread=spread,
        skipped=skipped,
        asserted=params.p >= 2.0,
        passed=constant < 0.0 and spread <= rel_tol,
    )
