"""Heat martingales, their transform by diag(1, -1), and path statistics.

Positions live in the coordinates of the periodic cell [0, 2L)^2 of the
field. The transform matrix diag(1, -1) is A1 - A2 with A1 = diag(1, 0)
and A2 = diag(0, 1). X and Y have two columns: the contributions of the
real and the imaginary part of the field.
"""

import asyncio
from collections.abc import Callable
import math
from typing import Protocol

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from engine.burkholder import eval_v_pair
from engine.spectral import gradient, heat_extension, transform_projection
from shared.config import SE_BATCHES, get_threads
from shared.contracts.martingale import (
    BinnedExpectation,
    InequalityReport,
    PairingReport,
    PathTerminals,
    VMeanReport,
)
from shared.errors import InsufficientSamplesError, InvalidParamsError
from shared.logs import get_logger
from shared.types import Params, SimConfig, SpectralField, SymMat2

logger = get_logger(__name__)

TRANSFORM = np.array([1.0, -1.0])
MIN_ASSERT_PATHS = 1000
SE_SHARE = 0.1
MIN_BIN_COUNT = 30
ESCAPE_WARN_SHARE = 0.01


# ============================================================================
# Gradient sources
# ============================================================================


class GradientSource(Protocol):
    def inside(self, z: np.ndarray) -> np.ndarray:
        """Bool mask of positions where the gradient is reliable."""
        ...

    def __call__(self, z: np.ndarray, s: float) -> np.ndarray:
        """Gradients at positions z, remaining time s; shape (m, 2, 2)."""
        ...


class ConstantGradient:
    """The same gradient at every position and time."""

    def __init__(self, real: tuple[float, float], imag: tuple[float, float] = (0.0, 0.0)):
        self._g = np.array([real, imag], dtype=float)

    def inside(self, z: np.ndarray) -> np.ndarray:
        return np.ones(z.shape[0], dtype=bool)

    def __call__(self, z: np.ndarray, s: float) -> np.ndarray:
        return np.broadcast_to(self._g, (z.shape[0], 2, 2))


def heat_ladder(cfg: SimConfig) -> np.ndarray:
    """
    Remaining times at which the heat gradient is tabulated.

    The exact step times when there are at most ladder_levels steps, a
    geometric ladder from dt to T otherwise.
    """
    if cfg.steps <= cfg.ladder_levels:
        return cfg.dt * np.arange(1, cfg.steps + 1, dtype=float)
    return np.geomspace(cfg.dt, cfg.T, cfg.ladder_levels)


class HeatGradient:
    """
    Gradient of the heat extension of a field, tabulated on a time ladder.

    Space is interpolated bilinearly; time is taken from the nearest ladder
    level in log scale. Positions in the guard frame are not reliable.
    """

    def __init__(self, phi: SpectralField, cfg: SimConfig):
        x = phi.coordinates()
        self.times = heat_ladder(cfg)
        self._log_times = np.log(self.times)
        self._levels = [self._level(phi, x, s) for s in self.times]
        w = max(1, math.ceil(cfg.guard_fraction * phi.n))
        self._lo = float(x[w])
        self._hi = float(x[phi.n - 1 - w])
        logger.debug(f"tabulated {len(self.times)} heat gradients at n={phi.n}")

    @staticmethod
    def _level(phi: SpectralField, x: np.ndarray, s: float) -> RegularGridInterpolator:
        d1, d2 = gradient(heat_extension(phi, s))
        g = np.stack([d1.values, d2.values], axis=-1)
        values = np.stack([np.real(g), np.imag(g)], axis=2)
        return RegularGridInterpolator(
            (x, x), values, method="linear", bounds_error=False, fill_value=np.nan
        )

    def level_of(self, s: float) -> int:
        return int(np.argmin(np.abs(self._log_times - math.log(s))))

    def inside(self, z: np.ndarray) -> np.ndarray:
        return np.all((z >= self._lo) & (z <= self._hi), axis=1)

    def __call__(self, z: np.ndarray, s: float) -> np.ndarray:
        return self._levels[self.level_of(s)](z)


# ============================================================================
# Simulation
# ============================================================================


def uniform_start_grid(
    center: tuple[float, float], k: int, radius: float
) -> dict[str, object]:
    """
    Cell centers of a k x k grid over the square of half-side radius.

    Returns:
        start_points, start_weights and start_area, ready for SimConfig
    """
    if k < 1 or not radius > 0.0:
        raise InvalidParamsError(f"need k >= 1 and radius > 0, got k={k}, radius={radius}")
    offsets = -radius + (np.arange(k) + 0.5) * (2.0 * radius / k)
    points = [(center[0] + a, center[1] + b) for a in offsets for b in offsets]
    return {
        "start_points": points,
        "start_weights": [1.0 / (k * k)] * (k * k),
        "start_area": (2.0 * radius) ** 2,
    }


def _path_weights(cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    starts = len(cfg.start_points)
    start_index = np.arange(cfg.n_paths) % starts
    per_start = np.bincount(start_index, minlength=starts)
    if cfg.n_paths < starts:
        logger.warning(f"{cfg.n_paths} paths cannot cover {starts} start points")
    weights = np.asarray(cfg.start_weights)[start_index] / per_start[start_index]
    return start_index, weights


def _simulate_batch(
    source: GradientSource, cfg: SimConfig, indices: np.ndarray
) -> dict[str, np.ndarray]:
    m = indices.shape[0]
    steps = cfg.steps
    starts = np.asarray(cfg.start_points, dtype=float)
    z = starts[indices % starts.shape[0]].copy()
    z0 = z.copy()

    noise = np.empty((m, steps, 2))
    for row, i in enumerate(indices):
        noise[row] = np.random.default_rng([cfg.seed, int(i)]).standard_normal((steps, 2))
    noise *= math.sqrt(cfg.dt)

    X = np.zeros((m, 2))
    Y = np.zeros((m, 2))
    qvX = np.zeros(m)
    qvY = np.zeros(m)
    escaped = np.zeros(m, dtype=bool)
    for k in range(steps):
        escaped |= ~source.inside(z)
        live = np.flatnonzero(~escaped)
        if live.size == 0:
            break
        g = np.asarray(source(z[live], (steps - k) * cfg.dt))
        gy = g * TRANSFORM
        dz = noise[live, k][:, None, :]
        X[live] += np.sum(g * dz, axis=2)
        Y[live] += np.sum(gy * dz, axis=2)
        qvX[live] += np.sum(g * g, axis=(1, 2)) * cfg.dt
        qvY[live] += np.sum(gy * gy, axis=(1, 2)) * cfg.dt
        z[live] += noise[live, k]

    return {"X": X, "Y": Y, "z0": z0, "zT": z, "qvX": qvX, "qvY": qvY, "escaped": escaped}


async def _run_batches(
    source: GradientSource, cfg: SimConfig, chunks: list[np.ndarray], threads: int
) -> list[dict[str, np.ndarray]]:
    semaphore = asyncio.Semaphore(threads)

    async def run(chunk: np.ndarray) -> dict[str, np.ndarray]:
        async with semaphore:
            return await asyncio.to_thread(_simulate_batch, source, cfg, chunk)

    return await asyncio.gather(*(run(c) for c in chunks))


def simulate_paths(
    field: SpectralField | GradientSource,
    cfg: SimConfig,
    threads: int | None = None,
) -> PathTerminals:
    """
    Euler-Maruyama accumulation of X = int grad U . dZ and its transform Y.

    Path i starts at start_points[i % S] and draws its increments from
    default_rng([seed, i]), so the result does not depend on threads.
    Paths entering the guard frame are flagged as escaped and frozen.
    """
    source = HeatGradient(field, cfg) if isinstance(field, SpectralField) else field
    threads = threads or get_threads()
    count = max(1, min(cfg.n_paths, 4 * threads))
    chunks = [c for c in np.array_split(np.arange(cfg.n_paths), count) if c.size]
    parts = asyncio.run(_run_batches(source, cfg, chunks, threads))

    start_index, weights = _path_weights(cfg)
    merged = {key: np.concatenate([part[key] for part in parts]) for key in parts[0]}
    terminals = PathTerminals(
        **merged, start_index=start_index, weights=weights, start_area=cfg.start_area
    )

    escaped = cfg.n_paths - terminals.survivors
    share = escaped / cfg.n_paths
    if share > ESCAPE_WARN_SHARE:
        logger.warning(f"{escaped} of {cfg.n_paths} paths reached the guard frame")
    else:
        logger.info(f"simulated {cfg.n_paths} paths, {escaped} escaped")
    return terminals


def verify_subordination(terminals: PathTerminals) -> float:
    """Largest pathwise gap between the quadratic variations of X and Y."""
    return float(np.max(np.abs(terminals.qvX - terminals.qvY)))


# ============================================================================
# Statistics
# ============================================================================


def _weighted_mean(values: np.ndarray, weights: np.ndarray, idx: np.ndarray) -> float:
    w = weights[idx]
    total = float(np.sum(w))
    if total == 0.0:
        return math.nan
    return float(np.sum(w * values[idx])) / total


def batch_statistics(
    estimator: Callable[[np.ndarray], float], n: int, batches: int
) -> tuple[float, float]:
    """Estimate on all paths, and the batch-means standard error."""
    full = estimator(np.arange(n))
    parts = np.array([estimator(idx) for idx in np.array_split(np.arange(n), batches)])
    parts = parts[np.isfinite(parts)]
    if parts.size < 2:
        return full, math.inf
    return full, float(np.std(parts, ddof=1)) / math.sqrt(parts.size)


def _require_precision(se: float, scale: float, paths: int) -> None:
    if paths < MIN_ASSERT_PATHS or se > SE_SHARE * scale:
        raise InsufficientSamplesError(se, scale, paths)


def empirical_inequality(
    terminals: PathTerminals, params: Params, batches: int = SE_BATCHES
) -> InequalityReport:
    """
    ||(tau^2 |X|^2 + |Y|^2)^(1/2)||_p against ((p*-1)^2 + tau^2)^(1/2) ||X||_p.

    Raises:
        InsufficientSamplesError: If (p, tau) is in T and fewer than 1000
            paths survive or the SE exceeds 10% of the right-hand side
    """
    p, tau = params.p, params.tau
    w = terminals.survivor_weights()
    ax = np.linalg.norm(terminals.X, axis=1)
    ay = np.linalg.norm(terminals.Y, axis=1)
    lhs_terms = (tau * tau * ax * ax + ay * ay) ** (p / 2.0)
    x_terms = ax**p
    constant = params.operator_norm_target

    def gap(idx: np.ndarray) -> float:
        lhs = _weighted_mean(lhs_terms, w, idx) ** (1.0 / p)
        return lhs - constant * _weighted_mean(x_terms, w, idx) ** (1.0 / p)

    everything = np.arange(terminals.n_paths)
    lhs = _weighted_mean(lhs_terms, w, everything) ** (1.0 / p)
    norm_x = _weighted_mean(x_terms, w, everything) ** (1.0 / p)
    rhs = constant * norm_x
    _, se = batch_statistics(gap, terminals.n_paths, batches)

    asserted = params.in_T
    if asserted:
        _require_precision(se, rhs, terminals.survivors)
    if se > 0.0:
        margin = (rhs - lhs) / se
    else:
        margin = math.inf if rhs >= lhs else -math.inf
    return InequalityReport(
        p=p,
        tau=tau,
        lhs=lhs,
        rhs=rhs,
        norm_x=norm_x,
        standard_error=se,
        margin=margin,
        asserted=asserted,
        holds=lhs <= rhs + 3.0 * se,
        paths=terminals.survivors,
        escaped=terminals.n_paths - terminals.survivors,
    )


def expected_v_nonpositive(
    terminals: PathTerminals, params: Params, batches: int = SE_BATCHES
) -> VMeanReport:
    """
    Mean of v(X_T, Y_T) = (tau^2 |X|^2 + |Y|^2)^(p/2) - c_B |X|^p.

    Raises:
        InsufficientSamplesError: As empirical_inequality, with c_B E|X|^p
            as the scale
    """
    w = terminals.survivor_weights()
    values = np.asarray(eval_v_pair(params, terminals.X, terminals.Y), dtype=float)
    mean, se = batch_statistics(
        lambda idx: _weighted_mean(values, w, idx), terminals.n_paths, batches
    )
    asserted = params.in_T
    if asserted:
        x_terms = np.linalg.norm(terminals.X, axis=1) ** params.p
        scale = params.c_B * _weighted_mean(x_terms, w, np.arange(terminals.n_paths))
        _require_precision(se, scale, terminals.survivors)
    return VMeanReport(
        p=params.p,
        tau=params.tau,
        mean=mean,
        standard_error=se,
        asserted=asserted,
        holds=mean <= 3.0 * se,
        paths=terminals.survivors,
    )


def binned_conditional_expectation(
    terminals: PathTerminals,
    bins: int,
    half_period: float,
    min_count: int = MIN_BIN_COUNT,
) -> BinnedExpectation:
    """
    Weighted per-bin means of X_T and Y_T over the terminal position.

    Away from the edges of the start grid the bins estimate
    transform_projection of phi by I and by diag(1, -1) at the bin centers.
    """
    if bins < 1:
        raise InvalidParamsError(f"bins must be >= 1, got {bins}")
    width = 2.0 * half_period / bins
    alive = ~terminals.escaped
    cells = np.clip(np.floor(terminals.zT[alive] / width).astype(int), 0, bins - 1)
    flat = cells[:, 0] * bins + cells[:, 1]
    w = terminals.weights[alive]
    size = bins * bins

    counts = np.bincount(flat, minlength=size)
    mass = np.bincount(flat, weights=w, minlength=size)
    dense = (counts >= min_count) & (mass > 0.0)

    def means(values: np.ndarray) -> np.ndarray:
        out = np.zeros((size, 2))
        for c in range(2):
            sums = np.bincount(flat, weights=w * values[alive, c], minlength=size)
            out[dense, c] = sums[dense] / mass[dense]
        return out.reshape(bins, bins, 2)

    empty = int(np.count_nonzero(counts == 0))
    sparse = int(np.count_nonzero((counts > 0) & (counts < min_count)))
    if empty or sparse:
        logger.info(f"{empty} empty and {sparse} sparse bins of {size}")
    return BinnedExpectation(
        centers=(np.arange(bins) + 0.5) * width,
        counts=counts.reshape(bins, bins),
        mean_x=means(terminals.X),
        mean_y=means(terminals.Y),
        min_count=min_count,
        empty_bins=empty,
        sparse_bins=sparse,
    )


def conditional_pairing(
    terminals: PathTerminals,
    phi: SpectralField,
    T: float,
    psi: SpectralField,
    batches: int = SE_BATCHES,
) -> PairingReport:
    """
    Pair E[X_T | B_T = z] and E[Y_T | B_T = z] with a test weight psi.

    The path estimate is start_area * E[psi(B_T) X_T], with escaped paths
    contributing 0. The oracles are the integrals of psi against the
    transform projections of phi by I and diag(1, -1) at horizon T, which
    carry the positive sign: for large T they tend to phi and to
    -(R1^2 - R2^2) phi. psi should vanish well inside the region covered by
    the start grid.

    Raises:
        InvalidParamsError: If phi is complex or psi lives on another grid
    """
    if np.iscomplexobj(phi.values):
        raise InvalidParamsError("conditional pairing needs a real field")
    if psi.n != phi.n or psi.half_period != phi.half_period:
        raise InvalidParamsError("psi must be sampled on the grid of phi")

    cell = phi.h * phi.h
    oracle_x = cell * float(
        np.sum(psi.values * transform_projection(phi, SymMat2.diag(1.0, 1.0), T).values)
    )
    oracle_y = cell * float(
        np.sum(psi.values * transform_projection(phi, SymMat2.diag(1.0, -1.0), T).values)
    )

    x = phi.coordinates()
    psi_at = RegularGridInterpolator(
        (x, x), psi.values, method="linear", bounds_error=False, fill_value=0.0
    )(terminals.zT)
    psi_at = np.where(terminals.escaped, 0.0, psi_at) * terminals.start_area
    fx = psi_at * terminals.X[:, 0]
    fy = psi_at * terminals.Y[:, 0]
    w = terminals.weights
    n = terminals.n_paths

    estimate_x, se_x = batch_statistics(lambda idx: _weighted_mean(fx, w, idx), n, batches)
    estimate_y, se_y = batch_statistics(lambda idx: _weighted_mean(fy, w, idx), n, batches)
    return PairingReport(
        estimate_x=estimate_x,
        oracle_x=oracle_x,
        se_x=se_x,
        estimate_y=estimate_y,
        oracle_y=oracle_y,
        se_y=se_y,
    )
