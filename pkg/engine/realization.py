"""Realization of diagonal prelaminates as Hessians of grid functions.

A split A = lam B + (1 - lam) C of diagonal matrices changes a single
diagonal entry, along axis d. The node's rectangle is cut across d into
periods laid out as C/2 | B | C/2 by adding a C1 periodic profile g(x_d)
with g'' = B_dd - A_dd on the B strips and C_dd - A_dd on the C strips.
Across the other axis the profile is multiplied by a quintic smoothstep;
the collar where that cutoff acts is charged to the exceptional set. The
collar width and the period are independent; the mixed derivative
psi' g' in the collar grows like period / collar.
Children recurse into their own strips, depth first.
"""

from dataclasses import dataclass, field
import math
from typing import Literal

import numpy as np
from scipy import ndimage

from engine.matrix_measures import (
    Integrand,
    integrate,
    phi1_integrand,
    phi2_integrand,
)
from engine.staircase import leaf_measure
from shared.config import FRAME_CELLS, MIN_STRIP_CELLS
from shared.contracts.realization import (
    AtomFraction,
    DistributionReport,
    MomentComparison,
    PrunedNode,
    PushforwardMoments,
    RealizationReport,
    SandwichReport,
)
from shared.errors import (
    InvalidParamsError,
    NonDiagonalError,
    RealizationError,
    ZeroDenominatorError,
)
from shared.logs import get_logger
from shared.types import (
    Atom,
    AtomicMeasure,
    GridFunction2D,
    HessianSample,
    Params,
    PrelaminateTree,
    SymMat2,
    TreeNode,
)
from shared.validation import validate_layer_fraction, validate_period_fraction

logger = get_logger(__name__)

# max |S'| of the quintic smoothstep S(s) = 6s^5 - 15s^4 + 10s^3
SMOOTHSTEP_SLOPE = 1.875
ROUNDOFF_FACTOR = 100.0
SMOOTHING_KERNEL = np.outer([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]) / 16.0


# ============================================================================
# Layout
# ============================================================================


@dataclass(frozen=True)
class Rect:
    lo: tuple[float, float]
    hi: tuple[float, float]

    def extent(self, axis: int) -> float:
        return self.hi[axis] - self.lo[axis]

    def with_axis(self, axis: int, lo: float, hi: float) -> "Rect":
        los, his = list(self.lo), list(self.hi)
        los[axis], his[axis] = lo, hi
        return Rect((los[0], los[1]), (his[0], his[1]))


@dataclass(frozen=True)
class Block:
    """One painted split: the profile parameters on its rectangle."""

    node: int
    rect: Rect
    axis: int
    period: float
    lam: float
    beta: float
    gamma: float
    collar: float
    level: int
    bound: float


@dataclass
class _Plan:
    blocks: list[Block] = field(default_factory=list)
    masses: dict[SymMat2, float] = field(default_factory=dict)
    pruned: list[PrunedNode] = field(default_factory=list)

    def add_mass(self, matrix: SymMat2, mass: float):
        self.masses[matrix] = self.masses.get(matrix, 0.0) + mass

    def c1_bound(self) -> float:
        per_level: dict[int, float] = {}
        for b in self.blocks:
            per_level[b.level] = max(per_level.get(b.level, 0.0), b.bound)
        return math.fsum(per_level.values())

    def target(self) -> AtomicMeasure:
        atoms = [Atom(weight=w, matrix=a) for a, w in self.masses.items() if w > 0.0]
        total = math.fsum(a.weight for a in atoms)
        return AtomicMeasure(
            atoms=[Atom(weight=a.weight / total, matrix=a.matrix) for a in atoms]
        )


class _Unresolved(Exception):
    def __init__(self, node: int, reason: str, factor: float):
        self.node = node
        self.reason = reason
        self.factor = factor
        super().__init__(reason)

    def min_n(self, n: int) -> int:
        return math.ceil((n - 1) * self.factor) + 1


def _level_bound(D: float, period: float, collar: float) -> float:
    """Bound on max|psi g| + max|grad(psi g)| for one profile."""
    return D * period / 2.0 + D * period**2 / 8.0 * (1.0 + SMOOTHSTEP_SLOPE / collar)


def _budget_period(D: float, collar: float, share: float) -> float:
    """Largest period whose level bound stays within share."""
    a = D * (1.0 + SMOOTHSTEP_SLOPE / collar) / 8.0
    b = D / 2.0
    return 2.0 * share / (b + math.sqrt(b * b + 4.0 * a * share))


def _entry(A: SymMat2, axis: int) -> float:
    return A.a11 if axis == 0 else A.a22


def _layout(
    tree: PrelaminateTree,
    index: int,
    rect: Rect,
    level: int,
    h: float,
    layer_fraction: float,
    period_fraction: float,
    share: float | None,
) -> tuple[Block, list[tuple[int, Rect, float]]]:
    """
    Lay out the strips of one split.

    Returns:
        The block and the child rectangles as (node, rect, share of the
        child's mass)

    Raises:
        _Unresolved: If a strip or the cutoff collar is too thin for the grid
    """
    node = tree.nodes[index]
    split = node.split
    B, C = tree.nodes[split.first], tree.nodes[split.second]
    d11 = abs(B.matrix.a11 - C.matrix.a11)
    d22 = abs(B.matrix.a22 - C.matrix.a22)
    if d11 == 0.0 and d22 == 0.0:
        raise InvalidParamsError(f"split at node {index} has identical children")
    axis = 0 if d11 >= d22 else 1
    other = 1 - axis
    lam = split.weight
    beta = _entry(B.matrix, axis) - _entry(node.matrix, axis)
    # exact barycentric balance keeps g' periodic
    gamma = -lam * beta / (1.0 - lam)
    D = abs(beta) * lam

    length, width = rect.extent(axis), rect.extent(other)
    collar = max(2.0 * h, layer_fraction * width / 2.0)
    period = min(length, period_fraction * width)
    if share is not None:
        period = min(period, _budget_period(D, collar, share))
    m = max(1, math.ceil(length / period - 1e-9))
    period = length / m

    def need(child: TreeNode) -> float:
        return (MIN_STRIP_CELLS if child.split is not None else 2) * h

    checks = [
        ("cutoff collar leaves no room", MIN_STRIP_CELLS * h, width - 2.0 * collar),
        ("first-child strips too thin", need(B), lam * period),
        ("second-child strips too thin", need(C), (1.0 - lam) * period / 2.0),
    ]
    failed = [(why, req, got) for why, req, got in checks if got < req]
    if failed:
        factor = max(req / max(got, 1e-3 * h) for _, req, got in failed)
        raise _Unresolved(index, "; ".join(why for why, _, _ in failed), factor)

    half = (1.0 - lam) * period / 2.0
    lo = rect.lo[axis]
    pieces: list[tuple[int, float, float]] = []
    for k in range(m):
        start = lo + k * period
        cuts = [start, start + half, start + half + lam * period, start + period]
        for child, a, b in zip(
            (split.second, split.first, split.second), cuts[:-1], cuts[1:], strict=True
        ):
            if pieces and child == split.second and pieces[-1][0] == child:
                pieces[-1] = (child, pieces[-1][1], b)
            else:
                pieces.append((child, a, b))

    across = rect.with_axis(other, rect.lo[other] + collar, rect.hi[other] - collar)
    totals = {split.first: lam * length, split.second: (1.0 - lam) * length}
    weights = {split.first: lam, split.second: 1.0 - lam}
    children = [
        (child, across.with_axis(axis, a, b), weights[child] * (b - a) / totals[child])
        for child, a, b in pieces
    ]
    block = Block(
        node=index,
        rect=rect,
        axis=axis,
        period=period,
        lam=lam,
        beta=beta,
        gamma=gamma,
        collar=collar,
        level=level,
        bound=_level_bound(D, period, collar),
    )
    return block, children


def _root_collar(h: float, L: float, layer_fraction: float) -> float:
    return max(4.0 * h, layer_fraction * L / 4.0)


def _plan(
    tree: PrelaminateTree,
    n: int,
    L: float,
    layer_fraction: float,
    period_fraction: float,
    delta: float | None,
    on_unresolved: str,
) -> _Plan:
    h = 2.0 * L / (n - 1)
    edge = L - FRAME_CELLS * h
    rect = Rect((-edge, -edge), (edge, edge))
    if tree.root != SymMat2.zero():
        c = _root_collar(h, L, layer_fraction)
        rect = Rect((-edge + c, -edge + c), (edge - c, edge - c))
    depth = tree.depth()
    share = delta / depth if delta is not None and depth > 0 else None

    plan = _Plan()
    stack = [(0, rect, 1.0, 0)]
    while stack:
        index, rect, mass, level = stack.pop()
        node = tree.nodes[index]
        if node.split is None:
            plan.add_mass(node.matrix, mass)
            continue
        try:
            block, children = _layout(
                tree, index, rect, level, h, layer_fraction, period_fraction, share
            )
        except _Unresolved as e:
            if index == 0 or on_unresolved == "error":
                raise
            logger.warning(f"pruned node {index} carrying mass {mass:.3g}: {e.reason}")
            plan.pruned.append(PrunedNode(node=index, mass=mass, reason=e.reason))
            plan.add_mass(node.matrix, mass)
            continue
        plan.blocks.append(block)
        stack.extend(
            (child, child_rect, mass * w, level + 1)
            for child, child_rect, w in reversed(children)
        )
    return plan


# ============================================================================
# Painting
# ============================================================================


def _smoothstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def _cutoff(x: np.ndarray, lo: float, hi: float, collar: float) -> np.ndarray:
    return _smoothstep((x - lo) / collar) * _smoothstep((hi - x) / collar)


def _profile(sigma: np.ndarray, block: Block) -> np.ndarray:
    """The periodic profile, folded about the middle of each period."""
    ell = block.period
    s = np.mod(sigma, ell)
    s = np.minimum(s, ell - s)
    a = (1.0 - block.lam) * ell / 2.0
    g, b = block.gamma, block.beta
    t = s - a
    return np.where(s <= a, g * s * s / 2.0, g * a * a / 2.0 + g * a * t + b * t * t / 2.0)


def _window(x: np.ndarray, lo: float, hi: float) -> slice:
    """Grid points strictly inside (lo, hi); every profile vanishes at the ends."""
    tol = 1e-12 * (1.0 + abs(lo) + abs(hi))
    start = int(np.searchsorted(x, lo + tol, side="right"))
    stop = int(np.searchsorted(x, hi - tol, side="left"))
    return slice(start, stop)


def _paint(values: np.ndarray, x: np.ndarray, block: Block):
    axis, other = block.axis, 1 - block.axis
    rect = block.rect
    along_idx = _window(x, rect.lo[axis], rect.hi[axis])
    across_idx = _window(x, rect.lo[other], rect.hi[other])
    along = _profile(x[along_idx] - rect.lo[axis], block)
    across = _cutoff(x[across_idx], rect.lo[other], rect.hi[other], block.collar)
    if axis == 0:
        values[along_idx, across_idx] += np.outer(along, across)
    else:
        values[across_idx, along_idx] += np.outer(across, along)


def _paint_root(values: np.ndarray, x: np.ndarray, A: SymMat2, c: float, edge: float):
    """chi(x1) chi(x2) (A11 x1^2 + A22 x2^2) / 2 with D2 = A inside the collar."""
    chi = np.zeros_like(x)
    inside = _window(x, -edge, edge)
    chi[inside] = _cutoff(x[inside], -edge, edge, c)
    values += np.outer(chi * x * x * (A.a11 / 2.0), chi)
    values += np.outer(chi, chi * x * x * (A.a22 / 2.0))


def _check_diagonal(tree: PrelaminateTree):
    for node in tree.nodes:
        if not node.matrix.is_diagonal():
            a = node.matrix
            raise NonDiagonalError(a.a11, a.a12, a.a22)


def _min_separation(m: AtomicMeasure) -> float:
    mats = [a.matrix for a in m.atoms]
    return min(
        (a.minus(b).norm() for i, a in enumerate(mats) for b in mats[i + 1 :]),
        default=math.inf,
    )


def default_radius(tree: PrelaminateTree, share: float = 0.4, cap: float = 0.25) -> float:
    """Ball radius used when none is given: a share of the leaf separation, capped."""
    return min(cap, share * _min_separation(leaf_measure(tree)))


def c1_norm(u: GridFunction2D) -> float:
    """max|u| + max|grad u| with centered differences."""
    g1, g2 = np.gradient(u.values, u.h)
    return float(np.max(np.abs(u.values)) + np.max(np.hypot(g1, g2)))


def realize_with_report(
    tree: PrelaminateTree,
    n: int,
    r: float,
    delta: float | None = None,
    layer_fraction: float = 0.2,
    period_fraction: float = 0.2,
    half_width: float = 1.0,
    mollify: bool = False,
    on_unresolved: Literal["error", "prune"] = "error",
) -> tuple[GridFunction2D, RealizationReport]:
    """
    Build a compactly supported u whose Hessian distribution follows the tree.

    Args:
        tree: Prelaminate with diagonal matrices
        n: Grid points per axis over [-L, L]
        r: Radius of the balls around the leaf matrices
        delta: Budget for max|u| + max|grad u|; needs a tree rooted at 0
        layer_fraction: Cutoff collar width as a fraction of the strip width
        period_fraction: Laminate period as a fraction of the strip width
        half_width: L
        mollify: Apply one pass of the 3x3 smoothing stencil
        on_unresolved: Raise, or keep a too-fine split as a leaf

    Returns:
        The grid function (zero on a frame of two cells) and the report

    Raises:
        NonDiagonalError: If a tree matrix is not diagonal
        InvalidParamsError: If r overlaps the balls of two leaves
        RealizationError: If the grid or the C1 budget cannot carry the tree
    """
    if not (math.isfinite(r) and r > 0.0):
        raise InvalidParamsError(f"r must be > 0, got {r!r}")
    if delta is not None and not delta > 0.0:
        raise InvalidParamsError(f"delta must be > 0, got {delta!r}")
    if n < 32:
        raise InvalidParamsError(f"n must be at least 32, got {n}")
    try:
        layer_fraction = validate_layer_fraction(layer_fraction)
        period_fraction = validate_period_fraction(period_fraction)
    except ValueError as e:
        raise InvalidParamsError(str(e)) from e
    _check_diagonal(tree)

    leaves = leaf_measure(tree)
    separation = _min_separation(leaves)
    if r >= separation / 2.0:
        raise InvalidParamsError(
            f"r={r:.4g} must be below half the leaf separation {separation:.4g}"
        )

    L = half_width
    h = 2.0 * L / (n - 1)
    depth = tree.depth()
    root = tree.root
    if delta is not None and root != SymMat2.zero():
        attainable = 0.5 * (abs(root.a11) + abs(root.a22)) * L * L + L * math.hypot(
            root.a11, root.a22
        )
        raise RealizationError("a C1 budget needs a tree rooted at 0", attainable)

    try:
        plan = _plan(
            tree, n, L, layer_fraction, period_fraction, delta, on_unresolved
        )
    except _Unresolved as e:
        if delta is not None:
            try:
                free = _plan(
                    tree, n, L, layer_fraction, period_fraction, None, on_unresolved
                )
            except _Unresolved:
                pass
            else:
                raise RealizationError(
                    f"C1 budget {delta:.4g} is infeasible for depth {depth} at n={n}",
                    free.c1_bound(),
                ) from None
        raise RealizationError(
            f"node {e.node} is unresolved ({e.reason}); minimal grid size estimate",
            float(e.min_n(n)),
        ) from None

    x = np.linspace(-L, L, n)
    values = np.zeros((n, n))
    edge = L - FRAME_CELLS * h
    if root != SymMat2.zero():
        _paint_root(values, x, root, _root_collar(h, L, layer_fraction), edge)
    for block in plan.blocks:
        _paint(values, x, block)
    if mollify:
        values = ndimage.convolve(values, SMOOTHING_KERNEL, mode="constant", cval=0.0)

    u = GridFunction2D(values=values, half_width=L, boundary_flag=True)
    floor = ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.max(np.abs(values))) / h**2
    if r <= floor:
        raise RealizationError("r is below the finite-difference roundoff floor", floor)

    pruned_mass = math.fsum(p.mass for p in plan.pruned)
    if plan.pruned:
        logger.warning(
            f"{len(plan.pruned)} splits pruned, {pruned_mass:.3g} of the mass "
            f"stays on internal nodes"
        )
    logger.info(f"realized {len(plan.blocks)} splits of a depth {depth} tree at n={n}")
    report = RealizationReport(
        n=n,
        half_width=L,
        r=r,
        delta=delta,
        layer_fraction=layer_fraction,
        period_fraction=period_fraction,
        mollified=mollify,
        on_unresolved=on_unresolved,
        target=plan.target(),
        pruned=plan.pruned,
        pruned_mass=pruned_mass,
        blocks=len(plan.blocks),
        c1_norm=c1_norm(u),
        min_r=floor,
    )
    return u, report


def realize(
    tree: PrelaminateTree,
    n: int,
    r: float,
    delta: float | None = None,
    layer_fraction: float = 0.2,
    **kwargs,
) -> GridFunction2D:
    """Grid function only; see realize_with_report."""
    u, _ = realize_with_report(tree, n, r, delta, layer_fraction, **kwargs)
    return u


# ============================================================================
# Hessian sampling and comparisons
# ============================================================================


def hessian(u: GridFunction2D) -> HessianSample:
    """Centered second differences at the interior points; 4-point mixed stencil."""
    v, h = u.values, u.h
    hh = h * h
    center = v[1:-1, 1:-1]
    h11 = (v[2:, 1:-1] - 2.0 * center + v[:-2, 1:-1]) / hh
    h22 = (v[1:-1, 2:] - 2.0 * center + v[1:-1, :-2]) / hh
    h12 = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * hh)
    return HessianSample(h11=h11, h12=h12, h22=h22, h=h)


def pushforward_moments(hs: HessianSample, params: Params) -> PushforwardMoments:
    """
    Grid sums of phi1(D2u) and phi2(D2u) times h^2, and their ratio.

    Raises:
        ZeroDenominatorError: If the phi2 sum vanishes
    """
    area = hs.h * hs.h
    s1 = float(np.sum(phi1_integrand(params)(hs.h11, hs.h12, hs.h22))) * area
    s2 = float(np.sum(phi2_integrand(params)(hs.h11, hs.h12, hs.h22))) * area
    if not s2 > 0.0:
        raise ZeroDenominatorError("pushforward integral of phi2", s2)
    return PushforwardMoments(phi1=s1, phi2=s2, ratio=s1 / s2)


def _assign(hs: HessianSample, m: AtomicMeasure, r: float) -> np.ndarray:
    """Index of the nearest atom within r at every point, -1 elsewhere."""
    best = np.full(hs.h11.shape, np.inf)
    owner = np.full(hs.h11.shape, -1, dtype=int)
    for i, atom in enumerate(m.atoms):
        a = atom.matrix
        dist = np.sqrt(
            (hs.h11 - a.a11) ** 2 + 2.0 * (hs.h12 - a.a12) ** 2 + (hs.h22 - a.a22) ** 2
        )
        closer = dist < best
        best[closer] = dist[closer]
        owner[closer] = i
    owner[best >= r] = -1
    return owner


def _comparison_integrands(params: Params | None) -> list[Integrand]:
    entries = [
        Integrand(lambda a11, a12, a22: a11, 1.0, "a11"),
        Integrand(lambda a11, a12, a22: a22, 1.0, "a22"),
        Integrand(lambda a11, a12, a22: a12, 1.0, "a12"),
        Integrand(lambda a11, a12, a22: a11 * a22, 2.0, "a11*a22"),
    ]
    if params is None:
        return entries
    return [phi1_integrand(params), phi2_integrand(params), *entries]


def compare_distribution(
    hs: HessianSample, m: AtomicMeasure, r: float, params: Params | None = None
) -> DistributionReport:
    """
    Area fractions of the r-balls around the atoms and moment comparisons.

    The phi moments are included when params are given.
    """
    owner = _assign(hs, m, r)
    count = owner.size
    counts = np.bincount(owner[owner >= 0], minlength=len(m.atoms))
    atoms = [
        AtomFraction(
            matrix=atom.matrix, target_weight=atom.weight, fraction=int(c) / count
        )
        for atom, c in zip(m.atoms, counts, strict=True)
    ]
    moments = []
    for f in _comparison_integrands(params):
        realized = float(np.mean(f(hs.h11, hs.h12, hs.h22)))
        target = integrate(m, f)
        moments.append(
            MomentComparison(
                name=f.name,
                realized=realized,
                target=target,
                abs_error=abs(realized - target),
            )
        )
    return DistributionReport(
        r=r,
        atoms=atoms,
        exceptional=int(np.count_nonzero(owner < 0)) / count,
        moments=moments,
    )


def ratio_sandwich(
    report: RealizationReport, params: Params, hs: HessianSample
) -> SandwichReport:
    """
    Compare the realized ratio with the ratio of the realized target.

    With f_A the measured fractions, w_A the target weights, B_i(A) the area
    mean of phi_i over the r-ball of A and E_i the exceptional contribution,
    each moment obeys

        |R_i - M_i| <= sum |B_i(A) - f_A phi_i(A)| + sum |f_A - w_A| phi_i(A) + E_i

    and the budget carries both bounds through the quotient.

    Raises:
        ZeroDenominatorError: If either phi2 integral vanishes
    """
    target = report.target
    owner = _assign(hs, target, report.r)
    count = owner.size
    fns = [phi1_integrand(params), phi2_integrand(params)]
    samples = [f(hs.h11, hs.h12, hs.h22) for f in fns]
    realized = [float(np.mean(s)) for s in samples]
    exceptional = [float(np.sum(s[owner < 0])) / count for s in samples]
    measure = [integrate(target, f) for f in fns]

    slack = list(exceptional)
    for i, atom in enumerate(target.atoms):
        in_ball = owner == i
        frac = int(np.count_nonzero(in_ball)) / count
        for j, (f, s) in enumerate(zip(fns, samples, strict=True)):
            at = float(f.at(atom.matrix))
            ball = float(np.sum(s[in_ball])) / count
            slack[j] += abs(ball - frac * at) + abs(frac - atom.weight) * at

    M1, M2 = measure
    if not M2 > 0.0:
        raise ZeroDenominatorError("target integral of phi2", M2)
    if not realized[1] > 0.0:
        raise ZeroDenominatorError("realized mean of phi2", realized[1])
    budget = (
        (slack[0] + (M1 / M2) * slack[1]) / (M2 - slack[1])
        if M2 > slack[1]
        else math.inf
    )
    return SandwichReport(
        realized_ratio=realized[0] / realized[1],
        measure_ratio=M1 / M2,
        exceptional=int(np.count_nonzero(owner < 0)) / count,
        exceptional_phi1=exceptional[0],
        exceptional_phi2=exceptional[1],
        budget=budget,
    )
