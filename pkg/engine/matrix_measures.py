"""Probability measures on symmetric 2x2 matrices and their integrals.

Integrals against a continuous laminate run along the curves
t -> diag(kt, t) and t -> diag(t, kt), t in [1, N], with density
(1/(1-k)) t^(-p-1) dt, plus the terminal atom of mass N^(-p) at diag(N, N).
Integrands homogeneous of degree a along the curves reduce to the exact
antiderivative of t^(a-p-1); everything else goes to adaptive quadrature
in s = log t.
"""

from collections.abc import Callable
from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate as scipy_integrate

from engine.burkholder import U_tilde_values
from shared.config import BICONVEX_GATE_SAMPLES, get_seed
from shared.contracts.measures import (
    BiconvexReport,
    LaminateRatioRow,
    MeasureDocument,
    SplittingReport,
)
from shared.errors import (
    InvalidParamsError,
    NotBiconvexError,
    QuadratureError,
    WeightSumError,
    ZeroDenominatorError,
)
from shared.logs import get_logger
from shared.types import (
    AtomicMeasure,
    CompositeLaminate,
    ContinuousLaminate,
    Measure,
    Params,
    Piece,
    QuadratureSpec,
    SymMat2,
)

logger = get_logger(__name__)


# ============================================================================
# Integrands
# ============================================================================


@dataclass(frozen=True)
class Integrand:
    """
    A vectorized function of the entries (a11, a12, a22).

    ``degree`` is set when f(t*A) = t^degree * f(A) for t > 0 along the
    laminate curves; it enables closed-form integration.
    """

    fn: Callable[..., np.ndarray]
    degree: float | None = None
    name: str = "f"

    def __call__(self, a11, a12, a22):
        return self.fn(
            np.asarray(a11, dtype=float),
            np.asarray(a12, dtype=float),
            np.asarray(a22, dtype=float),
        )

    def at(self, matrix: SymMat2) -> float:
        return float(self(matrix.a11, matrix.a12, matrix.a22))

    @classmethod
    def of_plane(
        cls, f: Callable[..., np.ndarray], degree: float | None = None, name: str = "f"
    ) -> "Integrand":
        """Wrap f(x, y) of the diagonal entries (x, y) = (a11, a22)."""
        return cls(fn=lambda a11, a12, a22: f(a11, a22), degree=degree, name=name)


def phi1(params: Params, A: SymMat2) -> float:
    """|(A11 - A22)^2 + tau^2 (A11 + A22)^2|^(p/2)."""
    return phi1_integrand(params).at(A)


def phi2(params: Params, A: SymMat2) -> float:
    """|A11 + A22|^p."""
    return phi2_integrand(params).at(A)


def phi1_integrand(params: Params) -> Integrand:
    p, tau2 = params.p, params.tau**2

    def fn(a11, a12, a22):
        return np.abs((a11 - a22) ** 2 + tau2 * (a11 + a22) ** 2) ** (p / 2.0)

    return Integrand(fn=fn, degree=p, name="phi1")


def phi2_integrand(params: Params) -> Integrand:
    p = params.p

    def fn(a11, a12, a22):
        return np.abs(a11 + a22) ** p

    return Integrand(fn=fn, degree=p, name="phi2")


def U_tilde_integrand(params: Params) -> Integrand:
    """U in the y-chart with (y1, y2) = (A11, A22); p-homogeneous."""

    def fn(a11, a12, a22):
        return U_tilde_values(params, a11, a22)

    return Integrand(fn=fn, degree=params.p, name="U_tilde")


def constant_integrand(value: float = 1.0) -> Integrand:
    return Integrand(
        fn=lambda a11, a12, a22: np.full(np.shape(a11), value, dtype=float),
        degree=0.0,
        name="one",
    )


def moment_integrands(params: Params) -> list[Integrand]:
    """The weak-* test set: phi1, phi2, entries, products and |A|^q, q = 1, 2."""
    return [
        phi1_integrand(params),
        phi2_integrand(params),
        Integrand(fn=lambda a11, a12, a22: a11, degree=1.0, name="a11"),
        Integrand(fn=lambda a11, a12, a22: a22, degree=1.0, name="a22"),
        Integrand(fn=lambda a11, a12, a22: a11 * a22, degree=2.0, name="a11*a22"),
        Integrand(
            fn=lambda a11, a12, a22: np.sqrt(a11**2 + 2.0 * a12**2 + a22**2),
            degree=1.0,
            name="|A|",
        ),
        Integrand(
            fn=lambda a11, a12, a22: a11**2 + 2.0 * a12**2 + a22**2,
            degree=2.0,
            name="|A|^2",
        ),
    ]


# ============================================================================
# Continuous laminates
# ============================================================================


def curve_points(lam: ContinuousLaminate, t) -> tuple[SymMat2, SymMat2]:
    """The two curve points at parameter t (a scalar)."""
    k, sign = lam.params.k_lam, lam.sign
    return (
        SymMat2.diag(sign * k * t, t),
        SymMat2.diag(sign * t, k * t),
    )


def terminal_atom(lam: ContinuousLaminate) -> SymMat2:
    return SymMat2.diag(lam.sign * lam.N, lam.N)


def _power_integral(b: float, log_N: float) -> float:
    """Integral of t^(b-1) over [1, N], given log N."""
    if b == 0.0:
        return log_N
    return math.expm1(b * log_N) / b


def _closed_form(lam: ContinuousLaminate, f: Integrand) -> float:
    if f.degree is None:
        raise InvalidParamsError(
            f"closed-form integration needs a homogeneous integrand, got {f.name}"
        )
    p, k = lam.params.p, lam.params.k_lam
    log_N = math.log(lam.N)
    first, second = curve_points(lam, 1.0)
    along = (f.at(first) + f.at(second)) / (1.0 - k)
    curves = along * _power_integral(f.degree - p, log_N)
    atom = f.at(SymMat2.diag(lam.sign, 1.0)) * math.exp((f.degree - p) * log_N)
    return curves + atom


def _adaptive(lam: ContinuousLaminate, f: Integrand, spec: QuadratureSpec) -> float:
    p, k, sign = lam.params.p, lam.params.k_lam, lam.sign
    log_N = math.log(lam.N)

    def integrand(s: float) -> float:
        t = math.exp(s)
        value = f(sign * k * t, 0.0, t) + f(sign * t, 0.0, k * t)
        return float(value) * math.exp(-p * s) / (1.0 - k)

    result = scipy_integrate.quad(
        integrand,
        0.0,
        log_N,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.limit,
        full_output=1,
    )
    estimate, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        raise QuadratureError(estimate, abserr, str(result[3]).strip())
    if abserr > max(spec.abs_tol, spec.rel_tol * abs(estimate)):
        raise QuadratureError(estimate, abserr, "tolerance not met")
    return estimate + f.at(terminal_atom(lam)) * lam.N ** (-p)


# ============================================================================
# Measure operations
# ============================================================================


def integrate(m: Measure, f: Integrand, spec: QuadratureSpec | None = None) -> float:
    """
    Integrate f against a measure.

    Args:
        m: An atomic, continuous or composite measure
        f: The integrand
        spec: Quadrature settings; closed-form mode needs a homogeneous f

    Returns:
        The integral of f against m

    Raises:
        InvalidParamsError: Closed-form mode with a non-homogeneous integrand
        QuadratureError: If adaptive quadrature misses its tolerance
    """
    spec = spec or QuadratureSpec()
    if isinstance(m, AtomicMeasure):
        weights = np.array([a.weight for a in m.atoms])
        values = f(
            [a.matrix.a11 for a in m.atoms],
            [a.matrix.a12 for a in m.atoms],
            [a.matrix.a22 for a in m.atoms],
        )
        return math.fsum(weights * values)
    if isinstance(m, ContinuousLaminate):
        if spec.mode == "closed_form":
            return _closed_form(m, f)
        return _adaptive(m, f, spec)
    return math.fsum(
        piece.weight * integrate(piece.measure, f, spec) for piece in m.pieces
    )


def mass(m: Measure, spec: QuadratureSpec | None = None) -> float:
    """Total mass; exact for continuous laminates in closed-form mode."""
    return integrate(m, constant_integrand(), spec)


def barycenter(m: Measure, spec: QuadratureSpec | None = None) -> SymMat2:
    """First moment of the measure."""
    return SymMat2(
        a11=integrate(m, Integrand(lambda a11, a12, a22: a11, 1.0, "a11"), spec),
        a12=integrate(m, Integrand(lambda a11, a12, a22: a12, 1.0, "a12"), spec),
        a22=integrate(m, Integrand(lambda a11, a12, a22: a22, 1.0, "a22"), spec),
    )


def ratio(params: Params, m: Measure, spec: QuadratureSpec | None = None) -> float:
    """
    The laminate ratio of phi1 to phi2 integrals.

    Raises:
        ZeroDenominatorError: If the phi2 integral vanishes
    """
    denominator = integrate(m, phi2_integrand(params), spec)
    if denominator <= 0.0:
        raise ZeroDenominatorError("laminate ratio", denominator)
    return integrate(m, phi1_integrand(params), spec) / denominator


def default_variant(params: Params) -> str:
    """The standard family for p <= 2, the flipped family above."""
    return "standard" if params.p <= 2.0 else "flipped"


def nu_measure(params: Params, N: float, variant: str | None = None) -> CompositeLaminate:
    """
    The mixture with barycenter 0 built on the continuous laminate.

    standard: 1/4 mu_N + 1/4 delta_diag(-1, 1) + 1/2 delta_diag(0, -1)
    flipped:  1/4 mu~_N + 1/4 delta_diag(1, 1) + 1/2 delta_diag(0, -1)
    """
    variant = variant or default_variant(params)
    lam = ContinuousLaminate(params=params, N=N, variant=variant)
    partner = SymMat2.diag(-1.0, 1.0) if variant == "standard" else SymMat2.diag(1.0, 1.0)
    return CompositeLaminate(
        pieces=[
            Piece(weight=0.25, measure=lam),
            Piece(weight=0.25, measure=AtomicMeasure.dirac(partner)),
            Piece(weight=0.5, measure=AtomicMeasure.dirac(SymMat2.diag(0.0, -1.0))),
        ]
    )


def compose_measures(pieces: list[tuple[float, Measure]]) -> CompositeLaminate:
    """
    Mix measures with the given weights.

    Raises:
        WeightSumError: If the weights do not sum to 1 within 1e-12
    """
    total = math.fsum(w for w, _ in pieces)
    if abs(total - 1.0) > 1e-12:
        raise WeightSumError(total)
    flat: list[Piece] = []
    for weight, measure in pieces:
        if isinstance(measure, CompositeLaminate):
            flat.extend(
                Piece(weight=weight * inner.weight, measure=inner.measure)
                for inner in measure.pieces
            )
        else:
            flat.append(Piece(weight=weight, measure=measure))
    return CompositeLaminate(pieces=flat)


def _log_affine(m: Measure, f: Integrand) -> tuple[float, float]:
    """(slope, intercept) of the integral of a p-homogeneous f as a function of log N."""
    if isinstance(m, AtomicMeasure):
        return 0.0, integrate(m, f)
    if isinstance(m, ContinuousLaminate):
        first, second = curve_points(m, 1.0)
        slope = (f.at(first) + f.at(second)) / (1.0 - m.params.k_lam)
        return slope, f.at(SymMat2.diag(m.sign, 1.0))
    slope = intercept = 0.0
    for piece in m.pieces:
        a, b = _log_affine(piece.measure, f)
        slope += piece.weight * a
        intercept += piece.weight * b
    return slope, intercept


def ratio_error_constant(params: Params, variant: str | None = None) -> float:
    """
    lim (ratio(nu_N) - c_B) * log N as N -> infinity.

    Both integrals are affine in log N, ratio = (a L + b)/(c L + d), so the
    limit is (b - c_B d)/c.
    """
    m = nu_measure(params, math.e, variant)
    a, b = _log_affine(m, phi1_integrand(params))
    c, d = _log_affine(m, phi2_integrand(params))
    if c == 0.0:
        raise ZeroDenominatorError("phi2 growth rate", c)
    return (b - (a / c) * d) / c


def laminate_ratio_table(
    params: Params, Ns: list[float], variant: str | None = None
) -> list[LaminateRatioRow]:
    """ratio(nu_N) against c_B for each N."""
    rows = []
    for N in Ns:
        value = ratio(params, nu_measure(params, N, variant))
        log_N = math.log(N)
        rows.append(
            LaminateRatioRow(
                N=N,
                log_N=log_N,
                ratio=value,
                c_B=params.c_B,
                error_log_N=abs(value - params.c_B) * log_N,
            )
        )
    return rows


def laminate_majorant_gap(
    params: Params, m: Measure, spec: QuadratureSpec | None = None
) -> float:
    """
    Jensen gap of U along the laminate, with (y1, y2) = (A11, A22).

    Returns the integral of U against m minus U at the barycenter; it is
    nonpositive when U is zigzag concave.
    """
    center = barycenter(m, spec)
    f = U_tilde_integrand(params)
    return integrate(m, f, spec) - f.at(center)


def support_bounds(m: Measure) -> tuple[float, float]:
    """Smallest interval containing every diagonal entry in the support."""
    if isinstance(m, AtomicMeasure):
        entries = [e for a in m.atoms for e in (a.matrix.a11, a.matrix.a22)]
        return min(entries), max(entries)
    if isinstance(m, ContinuousLaminate):
        points = [*curve_points(m, 1.0), *curve_points(m, m.N), terminal_atom(m)]
        entries = [e for a in points for e in (a.a11, a.a22)]
        return min(entries), max(entries)
    bounds = [support_bounds(piece.measure) for piece in m.pieces]
    return min(b[0] for b in bounds), max(b[1] for b in bounds)


# ============================================================================
# Jensen-type checks
# ============================================================================


def _midpoint_gate(
    f: Integrand,
    directions: list[SymMat2],
    lo: float,
    hi: float,
    seed: int,
) -> None:
    """Randomized midpoint convexity test of f along each direction."""
    rng = np.random.default_rng(seed)
    width = hi - lo
    for axis, d in enumerate(directions, start=1):
        x = rng.uniform(lo, hi, BICONVEX_GATE_SAMPLES)
        y = rng.uniform(lo, hi, BICONVEX_GATE_SAMPLES)
        step = rng.uniform(0.0, 0.25 * width, BICONVEX_GATE_SAMPLES)
        centre = f(x, 0.0, y)
        plus = f(x + step * d.a11, step * d.a12, y + step * d.a22)
        minus = f(x - step * d.a11, -step * d.a12, y - step * d.a22)
        excess = centre - 0.5 * (plus + minus)
        scale = 1.0 + np.abs(centre) + np.abs(plus) + np.abs(minus)
        bad = excess > 1e-9 * scale
        if np.any(bad):
            i = int(np.argmax(excess / scale))
            raise NotBiconvexError(axis, (float(x[i]), float(y[i])), float(excess[i]))


def verify_biconvex_inequality(
    k: float,
    N: float,
    f: Integrand,
    spec: QuadratureSpec | None = None,
    seed: int | None = None,
) -> BiconvexReport:
    """
    Check f(1, 1) <= the laminate integral of f for a biconvex f(x, y).

    The right side is the integral of f(A11, A22) against the continuous
    laminate with p = 2/(1 - k). The caller's claim of biconvexity is
    spot-checked by randomized midpoint tests on the support box first.

    Args:
        k: Laminate slope in (-1, 1)
        N: Truncation level, N > 1
        f: Integrand of the diagonal entries (see Integrand.of_plane)
        spec: Quadrature settings; defaults to closed form when f is homogeneous
        seed: Seed of the midpoint gate

    Returns:
        Report with both sides and the slack rhs - lhs

    Raises:
        NotBiconvexError: If the midpoint gate finds a violation
    """
    if not -1.0 < k < 1.0:
        raise InvalidParamsError(f"k must lie in (-1, 1), got {k!r}")
    if spec is None:
        spec = QuadratureSpec(mode="closed_form" if f.degree is not None else "adaptive")
    params = Params(p=2.0 / (1.0 - k), tau=0.0)
    lam = ContinuousLaminate(params=params, N=N, variant="standard")
    lo, hi = support_bounds(lam)
    _midpoint_gate(
        f,
        [SymMat2.diag(1.0, 0.0), SymMat2.diag(0.0, 1.0)],
        lo,
        hi,
        get_seed() if seed is None else seed,
    )
    lhs = f.at(SymMat2.diag(1.0, 1.0))
    rhs = integrate(lam, f, spec)
    return BiconvexReport(k=k, N=N, lhs=lhs, rhs=rhs, slack=rhs - lhs, mode=spec.mode)


def splitting_weights(k: float, t: float, eps: float) -> tuple[float, float]:
    """
    The weights of the two elementary splittings.

    lam = 1 - eps/(t(1-k) + eps) keeps (t, t + eps) against (t, kt);
    mu = 1 - eps/((1-k)(t + eps)) keeps (t + eps, t + eps) against
    (k(t + eps), t + eps).
    """
    lam = t * (1.0 - k) / (t * (1.0 - k) + eps)
    mu = 1.0 - eps / ((1.0 - k) * (t + eps))
    return lam, mu


def verify_splitting_inequalities(
    k: float,
    t: float,
    eps: float,
    f: Integrand,
    g: Integrand | None = None,
    tol: float = 1e-12,
) -> SplittingReport:
    """
    Check the two splitting inequalities pointwise.

    f(t, t) <= lam f(t, t+eps) + (1-lam) f(t, kt) for f convex in the second
    variable, and g(t, t+eps) <= mu g(t+eps, t+eps) + (1-mu) g(k(t+eps), t+eps)
    for g convex in the first variable (g defaults to f).

    Raises:
        InvalidParamsError: Unless t >= 1 and 0 < eps <= t
    """
    if t < 1.0 or not 0.0 < eps <= t:
        raise InvalidParamsError(f"need t >= 1 and 0 < eps <= t, got t={t}, eps={eps}")
    g = g or f
    lam, mu = splitting_weights(k, t, eps)
    s = t + eps

    def plane(h: Integrand, x: float, y: float) -> float:
        return h.at(SymMat2.diag(x, y))

    first_rhs = lam * plane(f, t, s) + (1.0 - lam) * plane(f, t, k * t)
    first_lhs = plane(f, t, t)
    second_rhs = mu * plane(g, s, s) + (1.0 - mu) * plane(g, k * s, s)
    second_lhs = plane(g, t, s)
    return SplittingReport(
        lam=lam,
        mu=mu,
        first_holds=first_lhs <= first_rhs + tol * (1.0 + abs(first_rhs)),
        second_holds=second_lhs <= second_rhs + tol * (1.0 + abs(second_rhs)),
        first_barycentric_error=abs(lam * s + (1.0 - lam) * k * t - t),
        second_barycentric_error=abs(mu * s + (1.0 - mu) * k * s - t),
    )


def jensen_check(
    m: Measure,
    f: Integrand,
    rank_one_directions: list[SymMat2] | None = None,
    spec: QuadratureSpec | None = None,
    seed: int | None = None,
) -> float:
    """
    f(barycenter) minus the integral of f; at most tol for rank-one convex f.

    When rank-one directions are given, f is first spot-checked for midpoint
    convexity along them over the support box of m.
    """
    if rank_one_directions:
        lo, hi = support_bounds(m)
        _midpoint_gate(
            f, rank_one_directions, lo, hi, get_seed() if seed is None else seed
        )
    return f.at(barycenter(m, spec)) - integrate(m, f, spec)


# ============================================================================
# Documents
# ============================================================================


def to_document(m: Measure) -> str:
    """Serialize a measure to a JSON text document."""
    return MeasureDocument(measure=m).model_dump_json(indent=2)


def from_document(text: str) -> Measure:
    """Load a measure written by to_document."""
    return MeasureDocument.model_validate_json(text).measure
