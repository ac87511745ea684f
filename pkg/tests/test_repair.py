import itertools
import json
import random

import numpy as np
import pytest

from mdsrepair.codes import realize, skeleton_new
from mdsrepair.errors import (
    BadRank,
    BadShape,
    BudgetExceeded,
    NotARepairMatrix,
    NotMds,
)
from mdsrepair.gf import build_tower
from mdsrepair.linalg import (
    Matrix,
    Subspace,
    batched_rank,
    enumerate_rref,
    gaussian_binomial,
    intersect_dim,
    kernel,
    matmul,
    projective_point_count,
    rank_of,
)
from mdsrepair.repair import (
    RepairScheme,
    bandwidth,
    bruteforce_column_hits,
    bruteforce_overlap,
    dual_cover,
    evaluate_scheme,
    hierarchy_check,
    incidence_profile,
    io_count,
    scheme_from_json,
    scheme_to_json,
)


def _coordinate_realization(tower):
    """Two coordinate-block nodes of F_q^4 with the standard basis columns."""
    ell = tower.ell
    nodes = []
    for i in range(2):
        rows = np.zeros((ell, 2 * ell), dtype=np.int64)
        rows[:, i * ell:(i + 1) * ell] = np.eye(ell, dtype=np.int64)
        nodes.append(Subspace.from_rows(tower.base, rows))
    s = skeleton_new(tower, 2, nodes)
    sets = [[[1, 0, 0, 0], [0, 1, 0, 0]], [[0, 0, 1, 0], [0, 0, 0, 1]]]
    return realize(s, sets)


def test_bandwidth_kernel_missing_all_helpers(tower3):
    re = _coordinate_realization(tower3)
    # ker([I | A]) = {(-Ay, y)}; invertible A makes it avoid both blocks
    m = Matrix(tower3.base, [[1, 0, 1, 2], [0, 1, 2, 2]])
    assert bandwidth(m, re, 0) == 2  # l*(n-1) with l=2, n=2
    assert io_count(m, re, 0) == 2


def test_bandwidth_on_attaining_code(bundle3):
    re = bundle3.realization
    for i in range(9):
        assert bandwidth(bundle3.scheme[i], re, i) == 12  # 2*8 - 4
        assert io_count(bundle3.scheme[i], re, i) == 12


def test_not_a_repair_matrix(bundle3):
    re = bundle3.realization
    # a matrix whose kernel contains the first node subspace cannot repair it
    m_bad = kernel(Matrix(re.skeleton.tower.base,
                          re.skeleton.nodes[0].basis.array)).basis
    with pytest.raises(NotARepairMatrix):
        bandwidth(Matrix(re.skeleton.tower.base, m_bad.array[:2]), re, 0)
    with pytest.raises(NotARepairMatrix):
        io_count(Matrix(re.skeleton.tower.base, m_bad.array[:2]), re, 0)


def _random_feasible_matrix(field, s, i, rng):
    ell, d = s.ell, s.ambient
    cols_i = s.basis_stack()[i].T
    while True:
        m = np.array([[rng.randrange(field.order) for _ in range(d)]
                      for _ in range(ell)], dtype=np.int64)
        if batched_rank(field, m[None])[0] != ell:
            continue
        prod = field.matmul(m, cols_i)
        if batched_rank(field, prod[None])[0] == ell:
            return Matrix(field, m)


def test_io_at_least_bandwidth_random(bundle3):
    rng = random.Random(3)
    re = bundle3.realization
    s = re.skeleton
    for _ in range(300):
        i = rng.randrange(s.n)
        m = _random_feasible_matrix(s.tower.base, s, i, rng)
        assert io_count(m, re, i) >= bandwidth(m, re, i)


# -- incidence profiles -----------------------------------------------------------


def test_profile_all_zero(tower3):
    re = _coordinate_realization(tower3)
    m = Matrix(tower3.base, [[1, 0, 1, 2], [0, 1, 2, 2]])
    pr = incidence_profile(m, re.skeleton, 0)
    assert pr.dims == (0,) and pr.sum_dims == 0 and pr.sum_points == 0
    assert pr.holds


def test_profile_requires_full_rank(bundle3):
    s = bundle3.skeleton
    with pytest.raises(BadRank):
        incidence_profile(Matrix(s.tower.base, np.zeros((2, 4), int)), s, 0)


def test_profile_on_attaining_scheme(bundle3):
    s = bundle3.skeleton
    cap = projective_point_count(3, 2)  # 4
    for i in range(s.n):
        pr = incidence_profile(bundle3.scheme[i], s, i)
        assert sorted(set(pr.dims)) in ([0, 1], [1])
        assert pr.dims.count(1) == cap
        assert pr.sum_dims == cap and pr.holds


def test_hierarchy_lines(bundle3):
    s = bundle3.skeleton
    pr = incidence_profile(bundle3.scheme[0], s, 0)
    lines = hierarchy_check(pr, s.ell, s.r, 3)
    assert [ln.s for ln in lines] == [1, 2]
    assert all(ln.holds for ln in lines)
    # s = 1 recounts the profile's projective points
    assert lines[0].lhs == pr.sum_points
    assert lines[0].rhs == pr.cap
    # all intersections are 1-dimensional, so the s = 2 line vanishes
    assert lines[1].lhs == 0


# -- dual cover ---------------------------------------------------------------------


def test_dual_cover_trivial(tower3):
    re = _coordinate_realization(tower3)
    m = Matrix(tower3.base, [[1, 0, 1, 2], [0, 1, 2, 2]])
    dc = dual_cover(m, re.skeleton, 0)
    assert dc.max_mult == 0 and dc.total == 0
    assert not dc.regular  # r - 1 = 1 and every multiplicity is 0


def test_dual_cover_on_attaining_scheme(bundle3, bundle5):
    for bundle in (bundle3, bundle5):
        s = bundle.skeleton
        for i in range(s.n):
            dc = dual_cover(bundle.scheme[i], s, i)
            assert dc.regular
            assert set(dc.mults) == {s.r - 1}
            assert len(dc.mults) == projective_point_count(s.tower.q, s.ell)


def test_dual_cover_bookkeeping_random(bundle5):
    rng = random.Random(17)
    s = bundle5.skeleton
    field = s.tower.base
    for _ in range(60):
        i = rng.randrange(s.n)
        m = _random_feasible_matrix(field, s, i, rng)
        pr = incidence_profile(m, s, i)
        dc = dual_cover(m, s, i)
        assert dc.total == pr.sum_points
        assert dc.max_mult <= s.r - 1


# -- brute force --------------------------------------------------------------------


def test_bruteforce_direct_sum_exhaustive_oracle():
    # q=2, l=1, r=2, n=2: enumerate all 1-dim subspaces W directly and
    # maximize the helper overlap; the optimizer must match the oracle
    tower = build_tower(2, 1, 1)
    field = tower.base
    nodes = [Subspace.from_rows(field, [[1, 0]]),
             Subspace.from_rows(field, [[0, 1]])]
    s = skeleton_new(tower, 2, nodes)
    best = -1
    for vec in ([0, 1], [1, 0], [1, 1]):
        w = Subspace.from_rows(field, [vec])
        if intersect_dim(w, nodes[0]) != 0:
            continue  # not feasible for node 0
        best = max(best, intersect_dim(w, nodes[1]))
    assert best == 1  # W = H_2 itself is feasible and meets H_2 fully
    value, witness = bruteforce_overlap(s, 0)
    assert value == best == 1
    assert kernel(witness).dim == 1
    # the multiplicity cap (r-1) * (projective points of F_2^1) = 1 holds
    assert value <= 1


def test_bruteforce_overlap_attaining_code(bundle3):
    s = bundle3.skeleton
    assert gaussian_binomial(4, 2, 3) == 130
    for i in range(s.n):
        value, witness = bruteforce_overlap(s, i)
        assert value == 4
        assert rank_of(witness) == 2
        # witness really is feasible and achieves the value
        pr = incidence_profile(witness, s, i)
        assert pr.sum_dims == 4
        assert intersect_dim(kernel(witness), s.nodes[i]) == 0


def test_bruteforce_column_hits_attaining_code(bundle3):
    re = bundle3.realization
    for i in range(re.skeleton.n):
        value, witness = bruteforce_column_hits(re, i)
        assert value == 4


def test_bruteforce_column_hits_never_exceed_overlap(bundle3):
    # every captured column spans a 1-dim piece of the intersection, so
    # the column count is dominated by the total intersection dimension
    re = bundle3.realization
    for i in range(re.skeleton.n):
        a, _ = bruteforce_overlap(re.skeleton, i)
        l, _ = bruteforce_column_hits(re, i)
        assert l <= a


def test_bruteforce_column_hits_against_naive_scan(bundle3):
    # independent reference: walk the enumeration one matrix at a time and
    # count captured columns by direct multiplication
    re = bundle3.realization
    s = re.skeleton
    field = s.tower.base
    best = -1
    best_m = None
    for m in enumerate_rref(field, 2, 4):
        if rank_of(matmul(m, re.blocks[0])) != 2:
            continue
        captured = 0
        for j in range(1, s.n):
            prod = field.matmul(m.array, re.blocks[j].array)
            captured += int((~(prod != 0).any(axis=0)).sum())
        if captured > best:
            best = captured
            best_m = m
    value, witness = bruteforce_column_hits(re, 0)
    assert (value, witness) == (best, best_m)


def test_bruteforce_witness_is_first_maximizer(bundle3):
    s = bundle3.skeleton
    field = s.tower.base
    value, witness = bruteforce_overlap(s, 0)
    for m in enumerate_rref(field, 2, 4):
        prod = field.matmul(m.array, s.basis_stack()[0].T)
        if batched_rank(field, prod[None])[0] != 2:
            continue
        total = sum(intersect_dim(kernel(m), s.nodes[j])
                    for j in range(s.n) if j != 0)
        if total == value:
            assert m == witness
            break
    else:
        pytest.fail("no maximizer found by the reference scan")


def test_bruteforce_range_split_matches_full(bundle3):
    s = bundle3.skeleton
    full_value, full_witness = bruteforce_overlap(s, 2)
    parts = [bruteforce_overlap(s, 2, index_range=(0, 65)),
             bruteforce_overlap(s, 2, index_range=(65, 130))]
    assert max(p[0] for p in parts) == full_value
    # combining by value, ties broken towards the earlier range, recovers
    # the global first maximizer
    combined = parts[0] if parts[0][0] >= parts[1][0] else parts[1]
    assert combined[1] == full_witness


def test_bruteforce_budget(bundle5):
    s = bundle5.skeleton
    with pytest.raises(BudgetExceeded) as exc:
        bruteforce_overlap(s, 0, budget=1000)
    assert exc.value.count == 508431
    # an explicit range bypasses the budget
    value, _ = bruteforce_overlap(s, 0, index_range=(0, 500))
    assert value >= 0


def test_bruteforce_requires_mds(tower3):
    nodes = [Subspace.from_rows(tower3.base, [[1, 0, 0, 0], [0, 1, 0, 0]])] * 2
    s = skeleton_new(tower3, 2, nodes)
    with pytest.raises(NotMds):
        bruteforce_overlap(s, 0)


# -- scheme evaluation -----------------------------------------------------------------


def test_evaluate_scheme_attaining(bundle3, bundle5):
    for bundle, expect in ((bundle3, 12), (bundle5, 34)):
        m = bundle.metrics
        assert set(m.bandwidth) == {expect} and set(m.io) == {expect}
        assert m.bandwidth_avg == expect and m.io_avg == expect
        assert m.bandwidth_max == expect and m.io_max == expect
        assert m.equality
        assert set(m.bandwidth_gap) == {0} and set(m.io_gap) == {0}


def test_evaluate_scheme_trivial_gap(bundle3):
    # repairing every node with the kernel equal to the one spread member
    # missing from the code leaves all helpers untouched: cost l*(n-1)
    re = bundle3.realization
    field = re.skeleton.tower.base
    m = Matrix(field, [[1, 0, 0, 0], [0, 1, 0, 0]])  # kernel = last block
    sch = RepairScheme([m] * re.skeleton.n)
    metrics = evaluate_scheme(re, sch)
    assert set(metrics.bandwidth) == {16} and set(metrics.io) == {16}
    assert set(metrics.bandwidth_gap) == {4} == set(metrics.io_gap)
    assert not metrics.equality
    assert metrics.overlap_achieved == (0,) * 9
    assert metrics.column_hits_achieved == (0,) * 9


def test_evaluate_scheme_shape_checks(bundle3):
    with pytest.raises(BadShape):
        evaluate_scheme(bundle3.realization,
                        RepairScheme(list(bundle3.scheme.matrices[:3])))


def test_scheme_json_roundtrip(bundle3):
    obj = scheme_to_json(bundle3.scheme, {"x": 1})
    text = json.dumps(obj, indent=2, sort_keys=True)
    sch, prov = scheme_from_json(json.loads(text),
                                 bundle3.skeleton.tower.base)
    assert prov == {"x": 1}
    assert json.dumps(scheme_to_json(sch, prov), indent=2,
                      sort_keys=True) == text


def test_scheme_validation(tower3):
    with pytest.raises(BadRank):
        RepairScheme([Matrix(tower3.base, [[1, 0, 1, 0], [2, 0, 2, 0]])])


def test_input_guards(bundle3, tower5):
    re = bundle3.realization
    s = re.skeleton
    good = bundle3.scheme[0]
    with pytest.raises(BadShape):
        bandwidth(good, re, 9)  # node out of range
    with pytest.raises(BadShape):
        incidence_profile(good, s, -1)
    with pytest.raises(BadShape):
        bruteforce_overlap(s, 99)
    wrong_field = Matrix(tower5.base, good.array)
    with pytest.raises(BadShape):
        io_count(wrong_field, re, 0)
    with pytest.raises(BadShape):
        dual_cover(Matrix(s.tower.base, good.array[:, :2]), s, 0)
