import math

import numpy as np
import pytest

from engine.martingale import (
    ConstantGradient,
    HeatGradient,
    binned_conditional_expectation,
    conditional_pairing,
    empirical_inequality,
    expected_v_nonpositive,
    heat_ladder,
    simulate_paths,
    uniform_start_grid,
    verify_subordination,
)
from engine.spectral import transform_projection
from engine.tests.helpers import make_params
from shared.errors import InsufficientSamplesError, InvalidParamsError
from shared.types import SimConfig, SpectralField, SymMat2

CENTER = (math.pi, math.pi)


def gaussian_field(var: float, n: int = 128) -> SpectralField:
    """Helper: exp(-|z - center|^2 / (2 var)) on the periodic cell [0, 2 pi)^2."""
    x = np.arange(n) * (2.0 * math.pi / n)
    r2 = (x[:, None] - math.pi) ** 2 + (x[None, :] - math.pi) ** 2
    return SpectralField(values=np.exp(-r2 / (2.0 * var)))


def make_config(n_paths: int, T: float = 0.1, k: int = 30, radius: float = 1.5, **kw):
    """Helper: SimConfig with 100 steps and a uniform start grid around the center."""
    return SimConfig(
        T=T,
        dt=T / 100.0,
        n_paths=n_paths,
        seed=7,
        ladder_levels=128,
        **uniform_start_grid(CENTER, k, radius),
        **kw,
    )


@pytest.fixture(scope="module")
def gaussian_run():
    phi = gaussian_field(0.16)
    cfg = make_config(9000)
    return phi, cfg, simulate_paths(phi, cfg, threads=4)


@pytest.fixture(scope="module")
def concentrated_run():
    cfg = make_config(16384, k=16, radius=0.8)
    return simulate_paths(gaussian_field(0.16, n=64), cfg, threads=4)


# ============================================================================
# Synthetic gradients
# ============================================================================


def test_first_axis_gradient_is_fixed_by_transform():
    """Test that grad U = (1, 0) gives X = Y = first increment of Z."""
    t = simulate_paths(ConstantGradient((1.0, 0.0)), make_config(50, k=2), threads=2)
    assert np.array_equal(t.X, t.Y)
    assert np.allclose(t.X[:, 0], t.zT[:, 0] - t.z0[:, 0], rtol=0.0, atol=1e-12)
    assert np.all(t.X[:, 1] == 0.0)


def test_second_axis_gradient_is_negated_by_transform():
    """Test that grad U = (0, 1) gives Y = -X."""
    t = simulate_paths(ConstantGradient((0.0, 1.0)), make_config(50, k=2), threads=2)
    assert np.array_equal(t.Y, -t.X)
    assert np.allclose(t.X[:, 0], t.zT[:, 1] - t.z0[:, 1], rtol=0.0, atol=1e-12)


def test_constant_gradient_quadratic_variation():
    """Test qv = |g|^2 T for a constant gradient."""
    t = simulate_paths(ConstantGradient((3.0, 4.0)), make_config(20, k=1), threads=1)
    assert np.allclose(t.qvX, 25.0 * 0.1, rtol=1e-12)
    assert verify_subordination(t) == 0.0


def test_simulation_is_deterministic_across_threads():
    """Test bit-identical terminals for one and several worker threads."""
    phi = gaussian_field(0.16, n=64)
    cfg = make_config(64, k=4)
    serial = simulate_paths(phi, cfg, threads=1)
    parallel = simulate_paths(phi, cfg, threads=3)
    for name in ("X", "Y", "zT", "qvX", "escaped"):
        assert np.array_equal(getattr(serial, name), getattr(parallel, name))


def test_paths_reaching_the_frame_are_excluded():
    """Test that paths started next to the guard frame escape and lose weight."""
    cfg = SimConfig(
        T=0.1,
        dt=0.001,
        n_paths=200,
        seed=1,
        start_points=[(0.9, math.pi)],
        start_weights=[1.0],
    )
    t = simulate_paths(gaussian_field(0.16, n=64), cfg, threads=2)
    assert 0 < t.survivors < t.n_paths
    w = t.survivor_weights()
    assert np.all(w[t.escaped] == 0.0)
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)


# ============================================================================
# Heat gradients and start grids
# ============================================================================


def test_heat_ladder_uses_step_times_when_short():
    """Test the exact ladder for short runs and the geometric one otherwise."""
    assert np.allclose(heat_ladder(make_config(10)), 0.001 * np.arange(1, 101))
    long = SimConfig(
        T=1.0, dt=0.001, n_paths=10, seed=0, start_points=[CENTER], start_weights=[1.0]
    )
    ladder = heat_ladder(long)
    assert ladder.shape == (32,)
    assert ladder[0] == pytest.approx(0.001)
    assert ladder[-1] == pytest.approx(1.0)


def test_heat_gradient_matches_closed_form():
    """Test the tabulated gradient of a heated Gaussian at a grid node."""
    n = 128
    phi = gaussian_field(0.16, n=n)
    cfg = make_config(10)
    source = HeatGradient(phi, cfg)
    x = phi.coordinates()
    z = np.array([[x[70], x[60]]])
    s = 0.05
    var = 0.16 + s
    d = z[0] - math.pi
    u = 0.16 / var * math.exp(-(d @ d) / (2.0 * var))
    g = source(z, s)
    assert g[0, 0] == pytest.approx(-d / var * u, abs=1e-9)
    assert np.all(g[0, 1] == 0.0)
    assert source.inside(z)[0]
    assert not source.inside(np.array([[0.1, math.pi]]))[0]


def test_uniform_start_grid():
    """Test cell centers, weights and area."""
    grid = uniform_start_grid((0.0, 0.0), 2, 1.0)
    assert sorted(grid["start_points"]) == [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)]
    assert grid["start_weights"] == [0.25] * 4
    assert grid["start_area"] == 4.0
    with pytest.raises(InvalidParamsError):
        uniform_start_grid((0.0, 0.0), 0, 1.0)


# ============================================================================
# Gaussian field statistics
# ============================================================================


def test_quadratic_variations_agree(gaussian_run):
    """Test that X and Y accumulate identical quadratic variation."""
    _, _, t = gaussian_run
    scale = max(1.0, float(np.max(t.qvX)))
    assert verify_subordination(t) <= 1e-10 * scale
    assert float(np.max(t.qvX)) > 0.0


def test_scaled_transform_is_detected():
    """Test that a halved Y shows up as a quadratic variation gap."""
    t = simulate_paths(ConstantGradient((1.0, 1.0)), make_config(20, k=1), threads=1)
    broken = t.model_copy(update={"qvY": 0.25 * t.qvY})
    assert verify_subordination(broken) == pytest.approx(0.75 * 2.0 * 0.1, rel=1e-9)


def test_isometry_at_p2(concentrated_run):
    """Test ||Y||_2 = ||X||_2 within three standard errors."""
    t = concentrated_run
    report = empirical_inequality(t, make_params(2.0))
    assert report.asserted
    assert report.escaped <= 0.01 * t.n_paths
    assert abs(report.lhs - report.rhs) <= 3.0 * report.standard_error


@pytest.mark.parametrize(("p", "tau"), [(4.0, 1.0), (3.0, 0.0), (1.5, 0.5)])
def test_burkholder_inequality(concentrated_run, p, tau):
    """Test lhs <= ((p*-1)^2 + tau^2)^(1/2) ||X||_p + 3 SE."""
    t = concentrated_run
    report = empirical_inequality(t, make_params(p, tau))
    assert report.holds
    assert report.margin > 3.0


def test_v_mean_at_p2(concentrated_run):
    """Test E(|Y|^2 - |X|^2) = 0 within three standard errors."""
    t = concentrated_run
    report = expected_v_nonpositive(t, make_params(2.0))
    assert report.holds
    assert abs(report.mean) <= 3.0 * report.standard_error


def test_v_mean_at_p4(concentrated_run):
    """Test E v(X, Y) <= 3 SE at p = 4."""
    t = concentrated_run
    report = expected_v_nonpositive(t, make_params(4.0))
    assert report.holds
    assert report.mean < 0.0


def test_conditional_pairing(gaussian_run):
    """Test the weak-form conditional expectations against the spectral oracles."""
    phi, cfg, t = gaussian_run
    psi = gaussian_field(0.09)
    report = conditional_pairing(t, phi, cfg.T, psi)
    assert report.oracle_x > 0.1
    assert abs(report.oracle_y) <= 1e-10
    assert report.within_x
    assert report.within_y


def test_pairing_needs_matching_grids(gaussian_run):
    """Test that psi must share the grid of phi."""
    phi, cfg, t = gaussian_run
    with pytest.raises(InvalidParamsError):
        conditional_pairing(t, phi, cfg.T, gaussian_field(0.09, n=64))


def test_binned_counts_cover_survivors(gaussian_run):
    """Test that bin counts add up to the surviving paths."""
    _, _, t = gaussian_run
    binned = binned_conditional_expectation(t, 16, math.pi)
    assert int(binned.counts.sum()) == t.survivors
    assert binned.mean_x.shape == (16, 16, 2)
    assert binned.empty_bins > 0
    sparse = (binned.counts > 0) & (binned.counts < 30)
    assert np.all(binned.mean_x[sparse] == 0.0)


def test_binned_expectation_tracks_transform_projection():
    """Test that binned E[Y_T | B_T] correlates with the diag(1, -1) projection above 0.9."""
    n = 64
    x = np.arange(n) * (2.0 * math.pi / n)
    phi = SpectralField(values=np.cos(2.0 * x)[:, None] - np.cos(2.0 * x)[None, :])
    cfg = make_config(20000, T=0.25)
    t = simulate_paths(phi, cfg, threads=4)
    binned = binned_conditional_expectation(t, 16, math.pi)

    # bin centers sit on grid points 4i + 2; keep those well inside the start grid
    inner = np.abs(binned.centers - math.pi) <= 1.0
    nodes = (4 * np.arange(16) + 2)[inner]
    window = np.ix_(nodes, nodes)
    oracle_y = transform_projection(phi, SymMat2.diag(1.0, -1.0), cfg.T).values[window]
    oracle_x = transform_projection(phi, SymMat2.diag(1.0, 1.0), cfg.T).values[window]
    mean_y = binned.mean_y[np.ix_(inner, inner)][..., 0]
    mean_x = binned.mean_x[np.ix_(inner, inner)][..., 0]

    assert np.all(binned.counts[np.ix_(inner, inner)] >= binned.min_count)
    assert np.corrcoef(mean_y.ravel(), oracle_y.ravel())[0, 1] > 0.9
    assert np.corrcoef(mean_x.ravel(), oracle_x.ravel())[0, 1] > 0.9
    assert abs(np.corrcoef(mean_y.ravel(), oracle_x.ravel())[0, 1]) < 0.5


# ============================================================================
# Degenerate cases
# ============================================================================


def test_zero_field_gives_zero_statistics():
    """Test that phi = 0 yields v mean 0 and zero bins."""
    t = simulate_paths(SpectralField(values=np.zeros((64, 64))), make_config(1200, k=10), threads=2)
    report = expected_v_nonpositive(t, make_params(2.0))
    assert report.mean == 0.0
    assert report.holds
    binned = binned_conditional_expectation(t, 8, math.pi)
    assert np.all(binned.mean_x == 0.0)
    assert np.all(binned.mean_y == 0.0)


def test_few_paths_are_refused():
    """Test that asserted statistics need at least 1000 paths."""
    t = simulate_paths(gaussian_field(0.16, n=64), make_config(64, k=4), threads=1)
    with pytest.raises(InsufficientSamplesError):
        empirical_inequality(t, make_params(2.0))


def test_outside_T_is_reported_only():
    """Test that parameters outside T are never asserted."""
    t = simulate_paths(gaussian_field(0.16, n=64), make_config(64, k=4), threads=1)
    report = empirical_inequality(t, make_params(1.5, 2.0))
    assert not report.asserted
