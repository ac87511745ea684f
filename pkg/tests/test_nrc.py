import json

import numpy as np
import pytest

from mdsrepair.codes import check_mds, realization_to_json
from mdsrepair.errors import (
    BadParameters,
    EllTooSmall,
    LengthOutOfRange,
    Nondivisible,
    QuotientTooSmall,
    RExceedsQ,
    ZeroB,
)
from mdsrepair.gf import build_tower
from mdsrepair.linalg import intersect_dim, projective_point_count
from mdsrepair.nrc import (
    INF,
    block_partition,
    build,
    bundle_provenance,
    norm_one_subgroup,
    nrc_subspace,
    repair_subspace,
    validate_params,
)
from mdsrepair.repair import scheme_to_json


# -- parameter gate ---------------------------------------------------------------


def test_validate_params_accepts_valid_instance(tower5):
    p = validate_params(tower5, 3, 24)
    assert (p.q, p.ell, p.r, p.n) == (5, 2, 3, 24)


def test_validate_params_length_window(tower5):
    with pytest.raises(LengthOutOfRange) as exc:
        validate_params(tower5, 3, 23)
    assert (exc.value.minimum, exc.value.maximum) == (24, 26)
    with pytest.raises(LengthOutOfRange):
        validate_params(tower5, 3, 27)


def test_validate_params_nondivisible():
    tower4 = build_tower(2, 2, 2)  # q = 4
    with pytest.raises(Nondivisible):
        validate_params(tower4, 3, 16)


def test_validate_params_quotient(tower3):
    with pytest.raises(QuotientTooSmall):
        validate_params(tower3, 3, 9)
    with pytest.raises(QuotientTooSmall):
        validate_params(build_tower(2, 1, 2), 2, 4)  # q = 2 leaves one block


def test_validate_params_ell(tower3):
    with pytest.raises(EllTooSmall):
        validate_params(build_tower(3, 1, 1), 2, 3)


def test_validate_params_r_bounds(tower3):
    with pytest.raises(RExceedsQ):
        validate_params(tower3, 4, 9)
    with pytest.raises(BadParameters):
        validate_params(tower3, 1, 9)


# -- curve subspaces -----------------------------------------------------------------


def test_nrc_subspace_infinity_and_zero(tower3):
    s_inf = nrc_subspace(tower3, 3, INF)
    assert s_inf.basis.array.tolist() == [
        [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]]
    s0 = nrc_subspace(tower3, 3, 0)
    assert s0.basis.array.tolist() == [
        [1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]]


def test_nrc_subspace_dimensions_all_parameters(tower3):
    for c in list(range(9)) + [INF]:
        assert nrc_subspace(tower3, 3, c).dim == 2


# -- norm-one subgroup ----------------------------------------------------------------


def test_norm_one_subgroup(tower3):
    sigma = norm_one_subgroup(tower3)
    assert 1 in sigma
    assert len(sigma) == 4 == projective_point_count(3, 2)
    top = tower3.top
    members = set(sigma)
    for x in sigma:
        assert top.inv(x) in members
        for y in sigma:
            assert top.mul(x, y) in members


@pytest.mark.parametrize("p,m,ell", [(3, 1, 2), (5, 1, 2), (2, 2, 2)])
def test_norm_one_equals_power_image(p, m, ell):
    t = build_tower(p, m, ell)
    sigma = set(norm_one_subgroup(t))
    image = {t.top.pow(x, t.q - 1) for x in t.top_units()}
    assert sigma == image


# -- parameter blocks ------------------------------------------------------------------


def test_block_partition_two_parity_cosets(tower3):
    part = block_partition(tower3, 2)
    sigma = set(part.sigma)
    assert len(part.blocks) == 2
    assert all(len(b.members) == 4 for b in part.blocks)
    # for r = 2 the blocks are exactly the cosets of the norm-one subgroup
    top = tower3.top
    for blk in part.blocks:
        cosets = {frozenset(top.mul(c, s) for s in sigma)
                  for c in blk.members}
        assert cosets == {frozenset(blk.members)}


def test_block_partition_higher_redundancy(tower5):
    part = block_partition(tower5, 3)
    assert len(part.blocks) == 2
    assert all(len(b.members) == 12 for b in part.blocks)
    union = set()
    for b in part.blocks:
        assert not (union & set(b.members))
        union |= set(b.members)
    assert union == set(range(1, 25))


def test_block_partition_representative_invariance(tower5):
    # the block of c depends only on the norm-one coset of c^(r-1): testing
    # membership against any member's power recovers the same block
    part = block_partition(tower5, 3)
    top = tower5.top
    sigma = set(part.sigma)
    for blk in part.blocks:
        for probe in blk.members[:3]:
            b_alt = top.pow(probe, 2)
            coset = {top.mul(b_alt, s) for s in sigma}
            members = {c for c in tower5.top_units()
                       if top.pow(c, 2) in coset}
            assert members == set(blk.members)


def test_block_partition_nondivisible():
    with pytest.raises(Nondivisible):
        block_partition(build_tower(2, 2, 2), 3)


# -- repair kernels ---------------------------------------------------------------------


def test_repair_subspace_rejects_zero(tower3):
    with pytest.raises(ZeroB):
        repair_subspace(tower3, 2, 0)


def test_repair_subspace_dimension_and_extremes(tower5):
    for b in (1, 7, 24):
        w, m = repair_subspace(tower5, 3, b)
        assert w.dim == 4  # (r-1) * l
        assert m.shape == (2, 6)
        assert intersect_dim(w, nrc_subspace(tower5, 3, 0)) == 0
        assert intersect_dim(w, nrc_subspace(tower5, 3, INF)) == 0


def test_repair_subspace_hit_pattern_exhaustive(tower5):
    # dim(W_b /\ H_c) is 1 exactly on the block of b and 0 elsewhere,
    # for every unit b and every unit c
    top = tower5.top
    sigma = set(norm_one_subgroup(tower5))
    for b in tower5.top_units():
        w, _ = repair_subspace(tower5, 3, b)
        coset = {top.mul(b, s) for s in sigma}
        for c in tower5.top_units():
            expected = 1 if top.pow(c, 2) in coset else 0
            assert intersect_dim(w, nrc_subspace(tower5, 3, c)) == expected


def test_repair_subspace_hit_pattern_two_parity(tower3):
    top = tower3.top
    sigma = set(norm_one_subgroup(tower3))
    for b in tower3.top_units():
        w, _ = repair_subspace(tower3, 2, b)
        for c in tower3.top_units():
            expected = 1 if c in {top.mul(b, s) for s in sigma} else 0
            assert intersect_dim(w, nrc_subspace(tower3, 2, c)) == expected


# -- the full construction -----------------------------------------------------------------


def test_build_two_parity_lengths(tower3):
    for n, cost in ((8, 10), (9, 12), (10, 14)):
        bundle = build(validate_params(tower3, 2, n))
        m = bundle.metrics
        assert set(m.bandwidth) == {cost} and set(m.io) == {cost}
        assert m.equality
        assert check_mds(bundle.skeleton) is None


def test_build_omega_ordering(tower3):
    b9 = build(validate_params(tower3, 2, 9))
    # first the two norm-one cosets, then the leftover parameter 0
    part = b9.partition
    expected = (part.blocks[0].members + part.blocks[1].members + (0,))
    assert b9.parameters == expected
    b10 = build(validate_params(tower3, 2, 10))
    assert b10.parameters[-1] is INF
    b8 = build(validate_params(tower3, 2, 8))
    assert 0 not in b8.parameters and INF not in b8.parameters


def test_build_higher_redundancy_lengths(tower5):
    for n in (24, 25, 26):
        bundle = build(validate_params(tower5, 3, n))
        cost = 2 * (n - 1) - 12
        m = bundle.metrics
        assert set(m.bandwidth) == {cost} and set(m.io) == {cost}
        assert m.equality


def test_build_forced_columns_present(bundle5):
    # every node of the two chosen blocks carries the unique projective
    # point its designated hitting kernel captures
    from mdsrepair.linalg import canonical_point, intersection

    field = bundle5.skeleton.tower.base
    block_a, block_b = bundle5.blocks_used
    w_a, _ = repair_subspace(bundle5.params.tower, 3, block_a.rep)
    w_b, _ = repair_subspace(bundle5.params.tower, 3, block_b.rep)
    for idx, c in enumerate(bundle5.parameters):
        node = bundle5.skeleton.nodes[idx]
        if c in set(block_a.members):
            hit = intersection(w_a, node)
        elif c in set(block_b.members):
            hit = intersection(w_b, node)
        else:
            continue
        assert hit.dim == 1
        point = tuple(int(x) for x in canonical_point(field,
                                                      hit.basis.array[0]))
        assert point in bundle5.realization.column_sets[idx]


def test_build_per_node_hit_counts(bundle3, bundle5):
    from mdsrepair.repair import incidence_profile

    for bundle in (bundle3, bundle5):
        s = bundle.skeleton
        expect = (s.r - 1) * projective_point_count(s.tower.q, s.ell)
        for i in range(s.n):
            pr = incidence_profile(bundle.scheme[i], s, i)
            assert set(pr.dims) <= {0, 1}
            assert pr.sum_dims == expect


def test_build_deterministic(tower3):
    a = build(validate_params(tower3, 2, 9))
    b = build(validate_params(tower3, 2, 9))
    ja = json.dumps(realization_to_json(a.realization, a.labels,
                                        bundle_provenance(a, "t")),
                    sort_keys=True)
    jb = json.dumps(realization_to_json(b.realization, b.labels,
                                        bundle_provenance(b, "t")),
                    sort_keys=True)
    assert ja == jb
    assert json.dumps(scheme_to_json(a.scheme), sort_keys=True) == \
        json.dumps(scheme_to_json(b.scheme), sort_keys=True)


def test_labels(bundle3):
    labels = bundle3.labels
    assert len(labels) == 9
    assert all(lab.isdigit() for lab in labels)
    b10 = build(validate_params(bundle3.params.tower, 2, 10))
    assert b10.labels[-1] == "inf"


def test_build_deeper_subpacketization():
    # l = 3 over F_3: bound 3*25 - 13 = 62 attained across the window edge
    tower = build_tower(3, 1, 3)
    bundle = build(validate_params(tower, 2, 26))
    assert bundle.metrics.bounds.im_bound == 62
    assert set(bundle.metrics.bandwidth) == {62} == set(bundle.metrics.io)
    assert bundle.metrics.equality


def test_build_non_prime_field():
    # q = 4 through the two-level base F_2 <= F_4; window is [10, 17]
    tower = build_tower(2, 2, 2)
    for n, cost in ((10, 13), (17, 27)):
        bundle = build(validate_params(tower, 2, n))
        assert set(bundle.metrics.bandwidth) == {cost}
        assert set(bundle.metrics.io) == {cost}
        assert bundle.metrics.equality
    # the achieved overlap is certified optimal by the exhaustive scan
    from mdsrepair.repair import bruteforce_column_hits, bruteforce_overlap

    bundle = build(validate_params(tower, 2, 10))
    for i in (0, 9):
        assert bruteforce_overlap(bundle.skeleton, i)[0] == 5
        assert bruteforce_column_hits(bundle.realization, i)[0] == 5


@pytest.mark.extended
def test_build_redundancy_four():
    # r = 4 needs 3 | (q-1), smallest case q = 7; bound 2*47 - 3*8 = 70
    tower = build_tower(7, 1, 2)
    bundle = build(validate_params(tower, 4, 48))
    assert bundle.metrics.bounds.im_bound == 70
    assert set(bundle.metrics.bandwidth) == {70} == set(bundle.metrics.io)
    assert bundle.metrics.equality
