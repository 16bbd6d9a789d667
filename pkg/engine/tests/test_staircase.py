import math

import pytest

from engine.matrix_measures import (
    barycenter,
    mass,
    moment_integrands,
    nu_measure,
    ratio,
    splitting_weights,
)
from engine.staircase import (
    build_staircase,
    compose,
    example_prelaminate,
    from_document,
    graft,
    leaf_indices,
    leaf_measure,
    min_steps,
    moment_errors,
    nu_prelaminate,
    support_box_check,
    to_document,
)
from engine.tests.helpers import make_params
from shared.errors import InvalidParamsError, WeightSumError
from shared.types import Atom, PrelaminateTree, SymMat2, TreeNode


def atom_table(tree):
    return sorted(
        (a.matrix.a11, a.matrix.a22, a.weight) for a in leaf_measure(tree).atoms
    )


def test_example_leaf_measure():
    """Test the three atoms of the example prelaminate."""
    assert atom_table(example_prelaminate()) == [
        (-1.0, 1.0, 0.25),
        (0.0, -1.0, 0.5),
        (1.0, 1.0, 0.25),
    ]


def test_example_barycenter_and_order():
    """Test barycenter 0 and order 2 of the example."""
    tree = example_prelaminate()
    center = barycenter(leaf_measure(tree))
    assert center == SymMat2.zero()
    assert tree.depth() == 2


def test_every_split_is_exactly_rank_one():
    """Test det(B - C) = 0 exactly for every constructed split."""
    trees = [
        example_prelaminate(),
        build_staircase(make_params(4.0), math.exp(4.0), 16),
        build_staircase(make_params(1.5), 100.0, 9),
        nu_prelaminate(make_params(3.0, 0.5), 20.0, 8),
    ]
    for tree in trees:
        for node in tree.nodes:
            if node.split is None:
                continue
            b = tree.nodes[node.split.first].matrix
            c = tree.nodes[node.split.second].matrix
            assert b.minus(c).det() == 0.0


def test_single_pass_staircase():
    """Test M = 1 at p = 2, N = e."""
    tree = build_staircase(make_params(2.0), math.e, 1)
    measure = leaf_measure(tree)
    assert len(measure.atoms) == 3
    center = barycenter(measure)
    assert center.a11 == pytest.approx(1.0, abs=1e-10)
    assert center.a22 == pytest.approx(1.0, abs=1e-10)
    lam, _ = splitting_weights(0.0, 1.0, math.e - 1.0)
    assert tree.nodes[0].split.weight == pytest.approx(lam)


def test_staircase_atom_count_and_mass():
    """Test 2M + 1 atoms and mass 1 at p = 4, N = 10, M = 8."""
    measure = leaf_measure(build_staircase(make_params(4.0), 10.0, 8))
    assert len(measure.atoms) == 17
    assert math.fsum(a.weight for a in measure.atoms) == pytest.approx(1.0, abs=1e-12)
    assert mass(measure) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_staircase_barycenter(p):
    """Test that the leaf barycenter equals the root."""
    tree = build_staircase(make_params(p), math.exp(4.0), 32)
    center = barycenter(leaf_measure(tree))
    assert center.minus(tree.root).norm() <= 1e-10


def test_staircase_nodes_are_barycentric():
    """Test lam (t + eps) + (1 - lam) k t = t at every first-stage split."""
    params = make_params(4.0)
    k = params.k_lam
    tree = build_staircase(params, math.exp(4.0), 16)
    for node in tree.nodes:
        if node.split is None:
            continue
        b = tree.nodes[node.split.first].matrix
        c = tree.nodes[node.split.second].matrix
        mixed = b.mix(node.split.weight, c)
        assert mixed.minus(node.matrix).norm() <= 1e-12 * (1.0 + node.matrix.norm())
        if b.a11 == c.a11:
            t = node.matrix.a22
            eps = b.a22 - t
            lam = node.split.weight
            assert lam * (t + eps) + (1.0 - lam) * k * t == pytest.approx(t, rel=1e-12)


def test_flipped_staircase_negates_first_entry():
    """Test that the flipped staircase mirrors the standard one."""
    params = make_params(4.0)
    standard = atom_table(build_staircase(params, 10.0, 8, "standard"))
    flipped = atom_table(build_staircase(params, 10.0, 8, "flipped"))
    assert sorted((-a, b, w) for a, b, w in flipped) == standard


def test_coarse_steps_are_rejected():
    """Test that M below the weight bound is refused for k > 0."""
    params = make_params(4.0)
    assert min_steps(params, math.exp(4.0)) == 6
    with pytest.raises(InvalidParamsError):
        build_staircase(params, math.exp(4.0), 3)
    with pytest.raises(InvalidParamsError):
        build_staircase(params, 10.0, 0)
    build_staircase(params, 4.0, 3)


def test_moment_errors_shrink_with_halving():
    """Test that the phi moment errors at least halve when M doubles."""
    params = make_params(4.0)
    report = moment_errors(
        params, math.exp(4.0), [64, 128, 256], moment_integrands(params)
    )
    assert report.variant == "flipped"
    assert {"phi1", "phi2"} <= report.halving_ratios.keys()
    for name in ("phi1", "phi2"):
        assert all(r >= 1.9 for r in report.halving_ratios[name])
    for values in report.errors.values():
        assert values[-1] <= values[0] + 1e-12


def test_leaf_measure_of_single_node():
    """Test that a single node gives a Dirac mass."""
    A = SymMat2.diag(0.3, -2.0)
    measure = leaf_measure(PrelaminateTree(nodes=[TreeNode(matrix=A)]))
    assert len(measure.atoms) == 1
    assert measure.atoms[0].weight == 1.0
    assert measure.atoms[0].matrix == A


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_compose_recipe_is_centered(p):
    """Test that the composed mixture has barycenter 0."""
    params = make_params(p)
    tree = build_staircase(params, math.exp(4.0), 16)
    partner = SymMat2.diag(-1.0, 1.0) if p <= 2.0 else SymMat2.diag(1.0, 1.0)
    composite = compose(
        0.25,
        tree,
        [
            Atom(weight=0.25, matrix=partner),
            Atom(weight=0.5, matrix=SymMat2.diag(0.0, -1.0)),
        ],
    )
    center = barycenter(composite)
    assert abs(center.a11) <= 1e-10
    assert abs(center.a22) <= 1e-10


def test_compose_weight_one_keeps_leaves():
    """Test that weight 1 with no extra atoms keeps the leaf measure."""
    tree = example_prelaminate()
    composite = compose(1.0, tree, [])
    assert composite.pieces[0].measure == leaf_measure(tree)


def test_compose_rejects_bad_weights():
    """Test the weight-sum error."""
    extra = [Atom(weight=0.5, matrix=SymMat2.diag(0.0, -1.0))]
    with pytest.raises(WeightSumError):
        compose(0.25, example_prelaminate(), extra)


@pytest.mark.parametrize("p", [1.5, 4.0])
def test_nu_prelaminate_approaches_measure_ratio(p):
    """Test the grafted tree: centered, 2M + 3 atoms, ratio near the laminate ratio."""
    params = make_params(p, 0.5)
    N, M = math.exp(4.0), 256
    tree = nu_prelaminate(params, N, M)
    measure = leaf_measure(tree)
    assert len(measure.atoms) == 2 * M + 3
    assert barycenter(measure).norm() <= 1e-10
    target = ratio(params, nu_measure(params, N))
    assert ratio(params, measure) == pytest.approx(target, rel=5e-2)


def test_graft_rejects_mismatched_root():
    """Test that the subtree root must equal the leaf."""
    example = example_prelaminate()
    wrong = build_staircase(make_params(4.0), 10.0, 8, "standard")
    leaf = next(
        i for i in leaf_indices(example) if example.nodes[i].matrix != wrong.root
    )
    with pytest.raises(InvalidParamsError):
        graft(example, leaf, wrong)
    with pytest.raises(InvalidParamsError):
        graft(example, 0, wrong)


@pytest.mark.parametrize("p", [1.5, 4.0])
def test_support_box(p):
    """Test that staircase atoms stay in [min(k, 0) N, N]."""
    params = make_params(p)
    report = support_box_check(build_staircase(params, 50.0, 32), params, 50.0)
    assert report.inside
    assert report.hi == 50.0


def test_tree_document_round_trip():
    """Test that tree documents reload to equal trees."""
    params = make_params(3.0)
    tree = nu_prelaminate(params, 10.0, 4)
    assert from_document(to_document(tree, params)) == tree
