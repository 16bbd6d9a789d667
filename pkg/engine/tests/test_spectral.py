import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from engine.realization import realize
from engine.spectral import (
    cross_check_identity,
    frequencies,
    gradient,
    guard_frame_energy,
    heat_extension,
    laplacian,
    laplacian_source,
    norm_ratio,
    norm_ratio_report,
    periodic_field,
    riesz_mixed,
    riesz_square,
    transform_projection,
    zero_padded,
)
from engine.staircase import example_prelaminate
from engine.tests.helpers import make_params
from shared.errors import InvalidParamsError, WraparoundError, ZeroDenominatorError
from shared.types import GridFunction2D, SpectralField, SymMat2


def field(fn, n: int = 64, L: float = math.pi) -> SpectralField:
    """Helper: Sample fn(x1, x2) on the periodic grid over [0, 2L)^2."""
    x = np.arange(n) * (2.0 * L / n)
    return SpectralField(values=fn(x[:, None], x[None, :]), half_period=L)


def band_limited(seed: int, n: int = 64, kmax: int = 6) -> SpectralField:
    """Helper: Random real trigonometric polynomial with |k| <= kmax and mean 0."""
    rng = np.random.default_rng(seed)
    x = np.arange(n) * (2.0 * math.pi / n)
    values = np.zeros((n, n))
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(0, kmax + 1):
            if k1 == 0 and k2 == 0:
                continue
            a, b = rng.normal(size=2)
            phase = k1 * x[:, None] + k2 * x[None, :]
            values += a * np.cos(phase) + b * np.sin(phase)
    return SpectralField(values=values)


def gaussian_grid(n: int, sigma: float, center=(0.0, 0.0)) -> GridFunction2D:
    """Helper: Gaussian bump on the [-1, 1]^2 grid."""
    x = np.linspace(-1.0, 1.0, n)
    r2 = (x[:, None] - center[0]) ** 2 + (x[None, :] - center[1]) ** 2
    return GridFunction2D(values=np.exp(-r2 / (2.0 * sigma**2)))


# ============================================================================
# Multipliers
# ============================================================================


def test_single_frequency_is_eigenfunction():
    """Test R1^2 cos(x1) = -cos(x1) and R2^2 cos(x1) = 0."""
    phi = field(lambda x1, x2: np.cos(x1) + 0.0 * x2)
    assert np.max(np.abs(riesz_square(phi, 1).values + phi.values)) <= 1e-12
    assert np.max(np.abs(riesz_square(phi, 2).values)) <= 1e-12


def test_riesz_index_is_checked():
    """Test that only j = 1, 2 are accepted."""
    with pytest.raises(InvalidParamsError):
        riesz_square(field(lambda x1, x2: x1 * x2), 3)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_multiplier_sum_is_minus_identity(seed):
    """Test R1^2 + R2^2 = -I on zero-mean fields."""
    phi = band_limited(seed)
    total = riesz_square(phi, 1).values + riesz_square(phi, 2).values
    scale = 1.0 + np.max(np.abs(phi.values))
    assert np.max(np.abs(total + phi.values)) <= 1e-12 * scale


def test_multipliers_commute():
    """Test R1^2 R2^2 = R2^2 R1^2."""
    phi = band_limited(3)
    a = riesz_square(riesz_square(phi, 2), 1).values
    b = riesz_square(riesz_square(phi, 1), 2).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(phi.values))


def test_output_is_real_for_real_input():
    """Test that real fields stay real."""
    phi = band_limited(4)
    assert np.isrealobj(riesz_square(phi, 1).values)
    assert np.isrealobj(riesz_mixed(phi).values)


def test_mixed_on_diagonal_mode():
    """Test 2 R1 R2 cos(x1 + x2) = -cos(x1 + x2)."""
    phi = field(lambda x1, x2: np.cos(x1 + x2) + 0.0 * x2)
    mixed = riesz_mixed(phi).values
    assert np.max(np.abs(mixed + phi.values)) <= 1e-12


def test_frequency_grid():
    """Test integer multiples of pi / L with the symmetric layout."""
    xi1, xi2 = frequencies(SpectralField(values=np.zeros((8, 8)), half_period=2.0))
    assert xi1[1, 0] == pytest.approx(math.pi / 2.0)
    assert xi2[0, 7] == pytest.approx(-math.pi / 2.0)
    assert xi1[4, 0] == pytest.approx(-2.0 * math.pi)


def test_laplacian_and_gradient_of_single_mode():
    """Test spectral derivatives of sin(2 x1) cos(x2)."""
    phi = field(lambda x1, x2: np.sin(2.0 * x1) * np.cos(x2))
    assert np.max(np.abs(laplacian(phi).values + 5.0 * phi.values)) <= 1e-11
    d1, d2 = gradient(phi)
    expected = field(lambda x1, x2: 2.0 * np.cos(2.0 * x1) * np.cos(x2))
    assert np.max(np.abs(d1.values - expected.values)) <= 1e-11
    expected = field(lambda x1, x2: -np.sin(2.0 * x1) * np.sin(x2))
    assert np.max(np.abs(d2.values - expected.values)) <= 1e-11


# ============================================================================
# Heat extension
# ============================================================================


def test_heat_at_time_zero_is_identity():
    """Test heat(0) = I."""
    phi = band_limited(5)
    assert np.array_equal(heat_extension(phi, 0.0).values, phi.values)


def test_heat_semigroup():
    """Test heat(0.1) heat(0.2) = heat(0.3)."""
    phi = band_limited(6)
    twice = heat_extension(heat_extension(phi, 0.1), 0.2).values
    once = heat_extension(phi, 0.3).values
    assert np.max(np.abs(twice - once)) <= 1e-12 * np.max(np.abs(phi.values))


def test_heat_of_gaussian():
    """Test the closed-form Gaussian convolution at t = sigma^2."""
    L = math.pi
    sigma = L / 16.0
    t = sigma**2

    def bump(var):
        def fn(x1, x2):
            r2 = (x1 - L) ** 2 + (x2 - L) ** 2
            return np.exp(-r2 / (2.0 * var))

        return fn

    phi = field(bump(sigma**2), n=256)
    heated = heat_extension(phi, t).values
    expected = sigma**2 / (sigma**2 + t) * field(bump(sigma**2 + t), n=256).values
    assert np.max(np.abs(heated - expected)) <= 1e-6 * np.max(np.abs(expected))


def test_negative_time_is_rejected():
    """Test t >= 0."""
    with pytest.raises(InvalidParamsError):
        heat_extension(band_limited(1), -1.0)


def test_transform_projection_limits():
    """Test the identity transform: phi - heat(2T) phi."""
    phi = band_limited(7)
    T = 0.3
    projected = transform_projection(phi, SymMat2.diag(1.0, 1.0), T).values
    expected = phi.values - heat_extension(phi, 2.0 * T).values
    assert np.max(np.abs(projected - expected)) <= 1e-11
    flipped = transform_projection(phi, SymMat2.diag(1.0, -1.0), 50.0).values
    difference = riesz_square(phi, 1).values - riesz_square(phi, 2).values
    assert np.max(np.abs(flipped + difference)) <= 1e-10


def test_transform_projection_sign():
    """Test the positive multiplier on cos(x1) and cos(x2) under diag(1, -1)."""
    T = 0.5
    A = SymMat2.diag(1.0, -1.0)
    along = field(lambda x1, x2: np.cos(x1) + 0.0 * x2)
    across = field(lambda x1, x2: np.cos(x2) + 0.0 * x1)
    factor = -math.expm1(-T)
    projected = transform_projection(along, A, T).values
    assert np.max(np.abs(projected - factor * along.values)) <= 1e-12
    projected = transform_projection(across, A, T).values
    assert np.max(np.abs(projected + factor * across.values)) <= 1e-12


# ============================================================================
# Norm ratios
# ============================================================================


def test_ratio_of_single_mode():
    """Test ratio 1 at (2, 0) and (1 + tau^2)^(1/2) in general."""
    phi = field(lambda x1, x2: np.cos(x1) + 0.0 * x2)
    assert norm_ratio(make_params(2.0), phi) == pytest.approx(1.0, abs=1e-12)
    assert norm_ratio(make_params(3.0, 2.0), phi) == pytest.approx(
        math.sqrt(5.0), rel=1e-12
    )


def test_p2_ratio_never_exceeds_one():
    """Test the L2 ratio bound on 100 random zero-mean fields."""
    params = make_params(2.0)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        values = rng.normal(size=(32, 32))
        phi = SpectralField(values=values - values.mean())
        assert norm_ratio(params, phi) <= 1.0 + 1e-10
        assert norm_ratio(params, phi, "mixed") <= 1.0 + 1e-10


def test_ratio_is_dilation_invariant():
    """Test that phi(2x), sampled on the doubled grid, has the same ratio."""
    n = 64
    phi = band_limited(8, n=n, kmax=8)
    idx = np.arange(2 * n) % n
    dilated = SpectralField(values=phi.values[np.ix_(idx, idx)])
    params = make_params(3.0, 0.5)
    assert norm_ratio(params, dilated) == pytest.approx(
        norm_ratio(params, phi), rel=1e-10
    )


def test_ratio_report_denominators_agree():
    """Test that both denominators match and the mean is reported."""
    phi = band_limited(9)
    shifted = SpectralField(values=phi.values + 2.5)
    report = norm_ratio_report(make_params(4.0, 1.0), shifted)
    assert report.mean_correction == pytest.approx(2.5, rel=1e-12)
    assert report.denominator_gap <= 1e-12
    assert report.ratio == pytest.approx(report.ratio_phi, rel=1e-12)


def test_zero_field_ratio_is_refused():
    """Test the zero denominator."""
    with pytest.raises(ZeroDenominatorError):
        norm_ratio(make_params(2.0), SpectralField(values=np.zeros((32, 32))))


def test_guard_frame_energy():
    """Test the frame share of a centered bump and of a uniform field."""
    u = gaussian_grid(128, 0.05)
    assert guard_frame_energy(u.values) <= 1e-12
    assert guard_frame_energy(np.ones((10, 10))) == pytest.approx(0.36)


# ============================================================================
# Cross-check against finite differences
# ============================================================================


def test_cross_check_is_second_order():
    """Test the O(h^2) gap on a smooth bump."""
    coarse = cross_check_identity(gaussian_grid(129, 0.1))
    fine = cross_check_identity(gaussian_grid(257, 0.1))
    assert fine <= 5e-3
    assert 3.0 <= coarse / fine <= 5.0


def test_cross_check_with_spectral_reference():
    """Test the 1e-6 bound on a band-limited bump against spectral derivatives."""
    u = gaussian_grid(129, 0.1)
    assert cross_check_identity(u, reference="spectral") <= 1e-6
    assert cross_check_identity(u) > 1e-6


def test_cross_check_rejects_unknown_reference():
    """Test that an unknown reference mode is refused."""
    with pytest.raises(InvalidParamsError):
        cross_check_identity(gaussian_grid(64, 0.1), reference="fourth-order")


def test_cross_check_of_zero():
    """Test that u = 0 gives 0."""
    assert cross_check_identity(GridFunction2D(values=np.zeros((64, 64)))) == 0.0


def test_cross_check_rejects_wraparound():
    """Test that a bump near the cell boundary is refused."""
    with pytest.raises(WraparoundError):
        cross_check_identity(gaussian_grid(128, 0.1, center=(0.9, 0.0)))


def test_cross_check_on_realized_field():
    """Test that a realized field needs zero padding before the cross-check."""
    u = realize(example_prelaminate(), 256, 0.2)
    with pytest.raises(WraparoundError):
        cross_check_identity(u)
    padded = zero_padded(u)
    assert padded.n == 384
    assert padded.h == pytest.approx(u.h, rel=1e-12)
    assert math.isfinite(cross_check_identity(padded))


def test_laplacian_source_of_realized_field():
    """Test the realized source: zero mean, p = 2 ratio at most 1."""
    u = realize(example_prelaminate(), 256, 0.2)
    phi = laplacian_source(u)
    assert phi.n == 255
    assert abs(float(np.mean(phi.values))) <= 1e-9
    assert norm_ratio(make_params(2.0), phi) <= 1.0 + 1e-10
    assert periodic_field(u).n == 255
