import math

import numpy as np
import pytest

from engine.matrix_measures import (
    Integrand,
    barycenter,
    compose_measures,
    constant_integrand,
    from_document,
    integrate,
    jensen_check,
    laminate_majorant_gap,
    laminate_ratio_table,
    mass,
    nu_measure,
    phi1,
    phi1_integrand,
    phi2,
    phi2_integrand,
    ratio,
    ratio_error_constant,
    support_bounds,
    to_document,
    verify_biconvex_inequality,
    verify_splitting_inequalities,
)
from engine.tests.helpers import CONVERGENCE_SWEEP, make_params
from shared.errors import (
    InvalidParamsError,
    NotBiconvexError,
    WeightSumError,
    ZeroDenominatorError,
)
from shared.types import (
    AtomicMeasure,
    ContinuousLaminate,
    QuadratureSpec,
    SymMat2,
)

ADAPTIVE = QuadratureSpec(mode="adaptive")


def xy():
    return Integrand.of_plane(lambda x, y: x * y, degree=2.0, name="xy")


def x_squared():
    return Integrand.of_plane(lambda x, y: x * x, degree=2.0, name="x^2")


def test_phi_examples():
    """Test phi1 and phi2 at the documented matrices."""
    flat = make_params(2.0)
    assert phi1(flat, SymMat2.diag(1.0, 1.0)) == 0.0
    assert phi1(flat, SymMat2.diag(-1.0, 1.0)) == pytest.approx(4.0)
    assert phi1(make_params(3.0, 1.0), SymMat2.diag(0.0, -1.0)) == pytest.approx(
        2.0**1.5
    )
    assert phi2(flat, SymMat2.diag(-1.0, 1.0)) == 0.0
    assert phi2(flat, SymMat2.diag(1.0, 1.0)) == pytest.approx(4.0)
    assert phi2(make_params(4.0), SymMat2.diag(0.0, -1.0)) == pytest.approx(1.0)


@pytest.mark.parametrize("p", [1.25, 4.0 / 3.0, 1.5, 2.0, 3.0, 4.0, 6.0])
@pytest.mark.parametrize("N", [math.e, 100.0, math.exp(20.0)])
def test_mass_and_barycenter_exact(p, N):
    """Test mass 1 and barycenter diag(1, 1) of the standard laminate."""
    lam = ContinuousLaminate(params=make_params(p), N=N)
    assert mass(lam) == pytest.approx(1.0, abs=1e-12)
    center = barycenter(lam)
    assert center.a11 == pytest.approx(1.0, abs=1e-12)
    assert center.a12 == 0.0
    assert center.a22 == pytest.approx(1.0, abs=1e-12)


def test_flipped_barycenter():
    """Test barycenter diag(-1, 1) of the flipped laminate."""
    lam = ContinuousLaminate(params=make_params(4.0), N=100.0, variant="flipped")
    assert mass(lam) == pytest.approx(1.0, abs=1e-12)
    center = barycenter(lam)
    assert center.a11 == pytest.approx(-1.0, abs=1e-12)
    assert center.a22 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("variant", ["standard", "flipped"])
def test_nu_measure_has_zero_barycenter(variant):
    """Test that both mixtures are centered with mass 1."""
    m = nu_measure(make_params(3.0, 0.5), 50.0, variant)
    assert mass(m) == pytest.approx(1.0, abs=1e-12)
    center = barycenter(m)
    assert abs(center.a11) <= 1e-12
    assert abs(center.a22) <= 1e-12


@pytest.mark.parametrize("p,tau", [(1.5, 0.5), (4.0, 1.0)])
def test_closed_form_matches_adaptive(p, tau):
    """Test that both quadrature modes agree on mass, barycenter and phi integrals."""
    params = make_params(p, tau)
    for variant in ("standard", "flipped"):
        lam = ContinuousLaminate(params=params, N=30.0, variant=variant)
        assert mass(lam, ADAPTIVE) == pytest.approx(mass(lam), abs=1e-9)
        a, b = barycenter(lam, ADAPTIVE), barycenter(lam)
        assert a.a11 == pytest.approx(b.a11, abs=1e-9)
        assert a.a22 == pytest.approx(b.a22, abs=1e-9)
        for f in (phi1_integrand(params), phi2_integrand(params)):
            assert integrate(lam, f, ADAPTIVE) == pytest.approx(
                integrate(lam, f), rel=1e-9
            )


def test_phi_integrals_closed_forms():
    """Test the log-form integrals of phi1 and phi2 against mu_N at p = 2."""
    params = make_params(2.0)
    lam = ContinuousLaminate(params=params, N=math.e)
    assert integrate(lam, phi2_integrand(params)) == pytest.approx(6.0)
    assert integrate(lam, phi1_integrand(params)) == pytest.approx(2.0)


def test_phi1_atom_term_uses_tau():
    """Test that the atom contributes (2|tau|)^p to the phi1 integral."""
    params = make_params(3.0, 0.5)
    k = params.k_lam
    N = math.exp(5.0)
    lam = ContinuousLaminate(params=params, N=N)
    expected = params.p * ((1 - k) ** 2 + 0.25 * (1 + k) ** 2) ** 1.5 * 5.0 + 1.0
    assert integrate(lam, phi1_integrand(params)) == pytest.approx(expected, rel=1e-12)


def test_integral_of_one_against_nu():
    """Test that the constant integrand integrates to 1."""
    m = nu_measure(make_params(2.0), math.e)
    assert integrate(m, constant_integrand()) == pytest.approx(1.0, abs=1e-12)


def test_closed_form_rejects_inhomogeneous_integrand():
    """Test that closed-form mode needs a degree."""
    lam = ContinuousLaminate(params=make_params(3.0), N=10.0)
    f = Integrand.of_plane(lambda x, y: np.exp(x), name="exp")
    with pytest.raises(InvalidParamsError):
        integrate(lam, f)
    assert integrate(lam, f, ADAPTIVE) > 0.0


def test_ratio_at_p_two_is_one():
    """Test that the p = 2 ratio is 1 for every N."""
    params = make_params(2.0)
    for N in (math.e, math.exp(10.0), math.exp(40.0)):
        assert ratio(params, nu_measure(params, N)) == pytest.approx(1.0, abs=1e-12)


def test_ratio_rejects_zero_denominator():
    """Test the zero-denominator error."""
    m = AtomicMeasure.dirac(SymMat2.diag(-1.0, 1.0))
    with pytest.raises(ZeroDenominatorError):
        ratio(make_params(3.0), m)


@pytest.mark.parametrize("pair,c_B", CONVERGENCE_SWEEP)
def test_ratio_converges_to_c_B(pair, c_B):
    """Test that the error shrinks in N and error * log N stays below the limit constant."""
    params = make_params(*pair)
    assert params.c_B == pytest.approx(c_B, rel=1e-12)
    constant = ratio_error_constant(params)
    rows = laminate_ratio_table(params, [math.exp(10.0), math.exp(20.0), math.exp(40.0)])
    errors = [abs(row.ratio - c_B) for row in rows]
    assert errors[1] <= errors[0] + 1e-12 * c_B
    assert errors[2] <= errors[1] + 1e-12 * c_B
    for row in rows:
        assert row.error_log_N <= abs(constant) + 1e-9 * c_B


# At p = 4, tau = 0 the ratio is (5.0625 L + 4.5) / (0.0625 L + 4.5) with L = log N:
# 62.6 short of 81 at e^20 and 51.4 at e^40, against a bound of 41 at e^20.
SLOW_AT_FOUR = pytest.mark.xfail(
    strict=True, reason="error constant -5760 exceeds 10 (1 + c_B) at p = 4, tau = 0"
)


@pytest.mark.parametrize(
    "pair,c_B",
    [
        pytest.param(pair, c_B, marks=SLOW_AT_FOUR) if pair == (4.0, 0.0) else (pair, c_B)
        for pair, c_B in CONVERGENCE_SWEEP
    ],
)
def test_ratio_within_acceptance_bound(pair, c_B):
    """Test |ratio - c_B| <= 10 (1 + c_B) / log N at N = e^20."""
    params = make_params(*pair)
    (row,) = laminate_ratio_table(params, [math.exp(20.0)])
    assert abs(row.ratio - c_B) <= 10.0 * (1.0 + c_B) / 20.0


def test_ratio_error_constant_at_four():
    """Test the closed-form limit constant at p = 4, tau = 0."""
    params = make_params(4.0)
    assert ratio_error_constant(params) == pytest.approx(-5760.0)
    L = 30.0
    expected = (5.0625 * L + 4.5) / (0.0625 * L + 4.5)
    assert ratio(params, nu_measure(params, math.exp(L))) == pytest.approx(expected)


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("N", [10.0, 1e3])
def test_biconvex_equality_for_biaffine(k, N):
    """Test equality in the biconvexity inequality for f = xy."""
    report = verify_biconvex_inequality(k, N, xy())
    assert abs(report.slack) <= 1e-9
    assert report.lhs == 1.0


def test_biconvex_x_squared_limit():
    """Test that f = x^2 at k = 1/2 approaches (1 + k^2)/(2k) = 1.25."""
    for N in (10.0, 1e3, 1e6):
        report = verify_biconvex_inequality(0.5, N, x_squared())
        assert report.rhs == pytest.approx(1.25 - 0.25 / N**2, abs=1e-12)
        assert report.slack >= 0.0
    assert verify_biconvex_inequality(0.5, 1e6, x_squared()).rhs == pytest.approx(
        1.25, abs=1e-6
    )


def test_biconvex_constant_is_equality():
    """Test that constants give equality."""
    report = verify_biconvex_inequality(0.3, 50.0, constant_integrand())
    assert abs(report.slack) <= 1e-12


def test_biconvex_library_has_nonnegative_slack():
    """Test the inequality for a library of biconvex functions."""

    def softplus(z):
        return np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)

    library = [
        Integrand.of_plane(lambda x, y: np.abs(x) + np.abs(y), degree=1.0),
        Integrand.of_plane(lambda x, y: x * x + y * y, degree=2.0),
        Integrand.of_plane(lambda x, y: softplus(x) * softplus(y)),
        Integrand.of_plane(lambda x, y: x * y + 0.5 * x * x, degree=2.0),
    ]
    for f in library:
        for k in (-0.5, 0.2, 0.6):
            assert verify_biconvex_inequality(k, 20.0, f).slack >= -1e-9


def test_biconvex_gate_rejects_concave():
    """Test that a concave function fails the midpoint gate."""
    f = Integrand.of_plane(lambda x, y: -(x * x), degree=2.0)
    with pytest.raises(NotBiconvexError):
        verify_biconvex_inequality(0.5, 10.0, f)


def test_splitting_weights_are_barycentric():
    """Test lam = 10/11 at t = 1, k = 0, eps = 0.1 and both inequalities for y^2."""
    f = Integrand.of_plane(lambda x, y: y * y, degree=2.0)
    report = verify_splitting_inequalities(0.0, 1.0, 0.1, f)
    assert report.lam == pytest.approx(10.0 / 11.0)
    assert report.first_barycentric_error <= 1e-15
    assert report.second_barycentric_error <= 1e-15
    assert report.first_holds
    assert report.second_holds


def test_splitting_affine_is_equality():
    """Test that affine functions satisfy both splittings with equality."""
    f = Integrand.of_plane(lambda x, y: 2.0 * x - 3.0 * y + 1.0, degree=None)
    for k in (-0.5, 0.0, 0.7):
        report = verify_splitting_inequalities(k, 2.0, 0.5, f)
        assert report.first_holds
        assert report.second_holds
        assert report.first_barycentric_error <= 1e-14
        assert report.second_barycentric_error <= 1e-14


def test_splitting_rejects_bad_step():
    """Test the t >= 1, 0 < eps <= t precondition."""
    f = Integrand.of_plane(lambda x, y: x * y, degree=2.0)
    with pytest.raises(InvalidParamsError):
        verify_splitting_inequalities(0.0, 0.5, 0.1, f)
    with pytest.raises(InvalidParamsError):
        verify_splitting_inequalities(0.0, 1.0, 2.0, f)


@pytest.mark.parametrize("pair", [(4.0, 0.0), (3.0, 0.5), (1.5, 0.5), (2.0, 0.0)])
def test_laminate_majorant_gap_nonpositive(pair):
    """Test that U is below its value at the barycenter on average."""
    params = make_params(*pair)
    m = nu_measure(params, math.exp(8.0))
    gap = laminate_majorant_gap(params, m)
    scale = integrate(m, phi1_integrand(params)) + params.c_B * integrate(
        m, phi2_integrand(params)
    )
    assert gap <= 1e-9 * (1.0 + scale)


def test_jensen_for_rank_one_convex_library():
    """Test Jensen's inequality for rank-one convex functions against nu_N."""
    params = make_params(3.0)
    m = nu_measure(params, 20.0)
    directions = [SymMat2.diag(1.0, 0.0), SymMat2.diag(0.0, 1.0)]
    library = [
        Integrand(lambda a11, a12, a22: a11**2, degree=2.0),
        Integrand(lambda a11, a12, a22: np.abs(a22), degree=1.0),
        Integrand(lambda a11, a12, a22: a11 * a22, degree=2.0),
        Integrand(lambda a11, a12, a22: (a11 + a22) ** 2 + a11 * a22, degree=2.0),
    ]
    for f in library:
        assert jensen_check(m, f, directions) <= 1e-9


def test_determinant_is_affine_on_laminates():
    """Test that the determinant integrates to its barycenter value."""
    for pair in [(1.5, 0.0), (2.0, 0.0), (4.0, 0.0)]:
        m = nu_measure(make_params(*pair), 100.0)
        det = Integrand(lambda a11, a12, a22: a11 * a22 - a12**2, degree=2.0)
        assert abs(jensen_check(m, det)) <= 1e-12


def test_compose_rejects_bad_weights():
    """Test the weight-sum error of mixtures."""
    a = AtomicMeasure.dirac(SymMat2.diag(1.0, 1.0))
    with pytest.raises(WeightSumError):
        compose_measures([(0.5, a), (0.4, a)])
    mixed = compose_measures([(0.5, a), (0.5, nu_measure(make_params(3.0), 10.0))])
    assert mass(mixed) == pytest.approx(1.0, abs=1e-12)


def test_support_bounds_of_flipped_mixture():
    """Test the support interval of the flipped mixture."""
    lo, hi = support_bounds(nu_measure(make_params(4.0), 10.0, "flipped"))
    assert lo == -10.0
    assert hi == 10.0


def test_document_round_trip():
    """Test that documents reload to equal measures."""
    m = nu_measure(make_params(3.0, -0.5), 25.0)
    loaded = from_document(to_document(m))
    assert loaded == m
    assert ratio(make_params(3.0, 0.5), loaded) == ratio(make_params(3.0, 0.5), m)
