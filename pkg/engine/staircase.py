"""Staircase prelaminates approximating the continuous laminates.

Stage i of the staircase, on the geometric grid t_i = N^(i/M):

    diag(t, t)      = lam diag(t, t + eps) + (1 - lam) diag(t, k t)        (e2 x e2)
    diag(t, t + eps) = mu diag(t + eps, t + eps) + (1 - mu) diag(k(t + eps), t + eps)
                                                                           (e1 x e1)

The flipped variant negates every first entry. After M stages the
remaining mass sits at diag(N, N).
"""

import math

from engine.matrix_measures import (
    Integrand,
    default_variant,
    integrate,
    moment_integrands,
    splitting_weights,
)
from shared.contracts.measures import MomentErrorReport, SupportReport, TreeDocument
from shared.errors import InvalidParamsError, WeightSumError
from shared.logs import get_logger
from shared.types import (
    Atom,
    AtomicMeasure,
    CompositeLaminate,
    ContinuousLaminate,
    Params,
    Piece,
    PrelaminateTree,
    Split,
    SymMat2,
    TreeNode,
)

logger = get_logger(__name__)


class _TreeBuilder:
    """Mutable node table; frozen into a PrelaminateTree at the end."""

    def __init__(self, root: SymMat2):
        self.matrices = [root]
        self.splits: list[Split | None] = [None]

    def add(self, matrix: SymMat2) -> int:
        self.matrices.append(matrix)
        self.splits.append(None)
        return len(self.matrices) - 1

    def split(
        self, index: int, weight: float, first: SymMat2, second: SymMat2
    ) -> tuple[int, int]:
        i, j = self.add(first), self.add(second)
        self.splits[index] = Split(weight=weight, first=i, second=j)
        return i, j

    def build(self) -> PrelaminateTree:
        return PrelaminateTree(
            nodes=[
                TreeNode(matrix=m, split=s)
                for m, s in zip(self.matrices, self.splits, strict=True)
            ]
        )


def example_prelaminate() -> PrelaminateTree:
    """
    The second-order prelaminate with barycenter 0.

    0 = 1/2 diag(0, 1) + 1/2 diag(0, -1), then
    diag(0, 1) = 1/2 diag(1, 1) + 1/2 diag(-1, 1).
    """
    builder = _TreeBuilder(SymMat2.zero())
    upper, _ = builder.split(0, 0.5, SymMat2.diag(0.0, 1.0), SymMat2.diag(0.0, -1.0))
    builder.split(upper, 0.5, SymMat2.diag(1.0, 1.0), SymMat2.diag(-1.0, 1.0))
    return builder.build()


def min_steps(params: Params, N: float) -> int:
    """Smallest M keeping every staircase weight inside (0, 1)."""
    k = params.k_lam
    if k <= 0.0:
        return 1
    # mu > 0 needs N^(1/M) - 1 < (1 - k)/k
    return math.floor(math.log(N) / math.log(1.0 / k)) + 1


def build_staircase(
    params: Params, N: float, M: int, variant: str | None = None
) -> PrelaminateTree:
    """
    Build the staircase prelaminate with M stages.

    Args:
        params: The (p, tau) pair; k = 1 - 2/p
        N: Truncation level, N > 1
        M: Number of stages
        variant: "standard" or "flipped"; follows p when omitted

    Returns:
        Tree rooted at diag(1, 1) (flipped: diag(-1, 1)) with 2M + 1 leaves

    Raises:
        InvalidParamsError: If M < 1 or the steps are too coarse for k > 0
    """
    if M < 1:
        raise InvalidParamsError(f"M must be at least 1, got {M}")
    if not N > 1.0:
        raise InvalidParamsError(f"N must be > 1, got {N!r}")
    if M < min_steps(params, N):
        raise InvalidParamsError(
            f"M={M} is too coarse for k={params.k_lam:.4g}: "
            f"need M >= {min_steps(params, N)}"
        )
    variant = variant or default_variant(params)
    sign = -1.0 if variant == "flipped" else 1.0
    k = params.k_lam
    ts = [N ** (i / M) for i in range(M)] + [N]

    builder = _TreeBuilder(SymMat2.diag(sign, 1.0))
    current = 0
    for t, s in zip(ts[:-1], ts[1:], strict=True):
        lam, mu = splitting_weights(k, t, s - t)
        middle, _ = builder.split(
            current, lam, SymMat2.diag(sign * t, s), SymMat2.diag(sign * t, k * t)
        )
        current, _ = builder.split(
            middle, mu, SymMat2.diag(sign * s, s), SymMat2.diag(sign * k * s, s)
        )
    return builder.build()


def leaf_measure(tree: PrelaminateTree) -> AtomicMeasure:
    """The atomic measure of the leaves, weighted by products of path weights."""
    atoms = []
    underflowed = 0
    stack = [(0, 1.0)]
    while stack:
        index, weight = stack.pop()
        node = tree.nodes[index]
        if node.split is None:
            if weight > 0.0:
                atoms.append(Atom(weight=weight, matrix=node.matrix))
            else:
                underflowed += 1
            continue
        split = node.split
        stack.append((split.second, weight * (1.0 - split.weight)))
        stack.append((split.first, weight * split.weight))
    if underflowed:
        logger.warning(f"{underflowed} leaves carry underflowed weight and were dropped")
    return AtomicMeasure(atoms=atoms)


def leaf_indices(tree: PrelaminateTree) -> list[int]:
    return [i for i, node in enumerate(tree.nodes) if node.split is None]


def graft(tree: PrelaminateTree, leaf: int, subtree: PrelaminateTree) -> PrelaminateTree:
    """
    Replace a leaf by a subtree whose root is the leaf's matrix.

    Raises:
        InvalidParamsError: If the node is not a leaf or the matrices differ
    """
    node = tree.nodes[leaf]
    if node.split is not None:
        raise InvalidParamsError(f"node {leaf} is not a leaf")
    if subtree.root.minus(node.matrix).norm() > 1e-12 * (1.0 + node.matrix.norm()):
        raise InvalidParamsError("subtree root differs from the grafted leaf")

    offset = len(tree.nodes) - 1

    def moved(index: int) -> int:
        return leaf if index == 0 else index + offset

    nodes = list(tree.nodes)
    for index, sub in enumerate(subtree.nodes):
        split = sub.split
        if split is not None:
            split = Split(
                weight=split.weight, first=moved(split.first), second=moved(split.second)
            )
        if index == 0:
            nodes[leaf] = TreeNode(matrix=node.matrix, split=split)
        else:
            nodes.append(TreeNode(matrix=sub.matrix, split=split))
    return PrelaminateTree(nodes=nodes)


def nu_prelaminate(
    params: Params, N: float, M: int, variant: str | None = None
) -> PrelaminateTree:
    """
    The centered mixture as a single tree.

    The staircase is grafted onto the diag(1, 1) leaf of the example tree
    (flipped: onto diag(-1, 1)), giving weights 1/4 staircase, 1/4 partner
    atom and 1/2 at diag(0, -1).
    """
    variant = variant or default_variant(params)
    example = example_prelaminate()
    target = SymMat2.diag(1.0, 1.0) if variant == "standard" else SymMat2.diag(-1.0, 1.0)
    leaf = next(i for i in leaf_indices(example) if example.nodes[i].matrix == target)
    return graft(example, leaf, build_staircase(params, N, M, variant))


def compose(
    weight: float, tree: PrelaminateTree, extra_atoms: list[Atom]
) -> CompositeLaminate:
    """
    weight * (leaf measure of tree) plus the extra atoms at their own masses.

    Raises:
        WeightSumError: If weight and the extra masses do not sum to 1
    """
    total = math.fsum([weight, *(a.weight for a in extra_atoms)])
    if abs(total - 1.0) > 1e-12 or not 0.0 < weight <= 1.0:
        raise WeightSumError(total)
    pieces = [Piece(weight=weight, measure=leaf_measure(tree))]
    pieces.extend(
        Piece(weight=a.weight, measure=AtomicMeasure.dirac(a.matrix)) for a in extra_atoms
    )
    return CompositeLaminate(pieces=pieces)


def moment_errors(
    params: Params,
    N: float,
    Ms: list[int],
    integrands: list[Integrand] | None = None,
    variant: str | None = None,
) -> MomentErrorReport:
    """
    Compare staircase moments against the continuous laminate.

    The closed-form laminate integrals are the oracle; halving ratios
    error(M)/error(2M) estimate the convergence order.
    """
    variant = variant or default_variant(params)
    integrands = integrands or moment_integrands(params)
    lam = ContinuousLaminate(params=params, N=N, variant=variant)
    exact = {f.name: integrate(lam, f) for f in integrands}
    errors: dict[str, list[float]] = {f.name: [] for f in integrands}
    for M in Ms:
        leaves = leaf_measure(build_staircase(params, N, M, variant))
        for f in integrands:
            errors[f.name].append(abs(integrate(leaves, f) - exact[f.name]))
    ratios = {
        name: [
            a / b if b > 0.0 else math.inf
            for a, b in zip(values[:-1], values[1:], strict=True)
        ]
        for name, values in errors.items()
    }
    return MomentErrorReport(
        params=params,
        N=N,
        variant=variant,
        Ms=list(Ms),
        errors=errors,
        halving_ratios=ratios,
    )


def support_box_check(
    tree: PrelaminateTree, params: Params, N: float, variant: str | None = None
) -> SupportReport:
    """
    Check that every atom is diagonal with entries in [min(k, 0) N, N].

    The flipped variant is checked after negating the first entry.
    """
    variant = variant or default_variant(params)
    sign = -1.0 if variant == "flipped" else 1.0
    lo, hi = min(params.k_lam, 0.0) * N, N
    worst = 0.0
    for atom in leaf_measure(tree).atoms:
        a = atom.matrix
        worst = max(worst, abs(a.a12))
        for entry in (sign * a.a11, a.a22):
            worst = max(worst, lo - entry, entry - hi)
    return SupportReport(lo=lo, hi=hi, inside=worst <= 0.0, worst_excursion=worst)


def to_document(tree: PrelaminateTree, params: Params | None = None) -> str:
    """Serialize a tree to a JSON text document."""
    return TreeDocument(params=params, tree=tree).model_dump_json(indent=2)


def from_document(text: str) -> PrelaminateTree:
    """Load a tree written by to_document."""
    return TreeDocument.model_validate_json(text).tree
