"""Attaining codes from field reduction of a normal rational curve.

Node subspaces come from the moment-curve points (1, c, c^2, ..., c^(r-1))
over F_(q^l), read as l-dimensional F_q-subspaces of F_q^(r*l) through
field reduction; the point at infinity contributes the last coordinate
block.  Any r distinct parameters give a Vandermonde system, so every
skeleton built this way is MDS.

Repair subspaces are kernels of the maps y -> y_(r-1) - b * y_0^q.  Such
a kernel meets the node of parameter c nontrivially exactly when c^(r-1)
falls in the norm-one coset of b, and then in dimension 1; the
parameters therefore split into (q-1)/(r-1) blocks of size
(r-1)(q^l-1)/(q-1) according to which kernels hit them.  The builder
picks the two blocks containing the smallest parameter codes, lists
their members first, repairs every node with the kernel that hits the
opposite block (or the first block's kernel for nodes outside both), and
forces each constrained node's column set to contain the one projective
point its designated kernel captures.  Every property the construction
promises is re-verified on the finished bundle.

All choices left open by the mathematics (block choice, parameter order,
column fill) are pinned to deterministic rules so rebuilt artifacts are
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodeSkeleton, Realization, realize
from .errors import (
    BadParameters,
    EllTooSmall,
    InternalInconsistency,
    LengthOutOfRange,
    Nondivisible,
    QuotientTooSmall,
    RExceedsQ,
    ZeroB,
)
from .gf import FieldTower
from .linalg import (
    Matrix,
    Subspace,
    canonical_point,
    intersection,
    kernel,
    projective_point_count,
)
from .repair import (
    NodeMetrics,
    RepairScheme,
    dual_cover,
    evaluate_scheme,
    incidence_profile,
)


class _Infinity:
    """Sentinel for the curve parameter at infinity."""

    _instance = None
    __slots__ = ()

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"


INF = _Infinity()


@dataclass(frozen=True)
class NrcParams:
    tower: FieldTower
    r: int
    n: int

    @property
    def q(self) -> int:
        return self.tower.q

    @property
    def ell(self) -> int:
        return self.tower.ell


def validate_params(tower: FieldTower, r: int, n: int) -> NrcParams:
    """Gate the construction hypotheses, naming the first one violated."""
    r, n = int(r), int(n)
    q, ell = tower.q, tower.ell
    if ell < 2:
        raise EllTooSmall(f"construction needs ell >= 2, got {ell}")
    if r < 2:
        raise BadParameters(f"redundancy r must be at least 2, got {r}")
    if r > q:
        raise RExceedsQ(f"r={r} exceeds q={q}; the bound cannot be attained")
    if (q - 1) % (r - 1) != 0:
        raise Nondivisible(f"r-1={r - 1} does not divide q-1={q - 1}")
    if (q - 1) // (r - 1) < 2:
        raise QuotientTooSmall(
            f"(q-1)/(r-1)={(q - 1) // (r - 1)} but two parameter blocks are needed")
    t = projective_point_count(q, ell)
    lo, hi = 2 * (r - 1) * t, q ** ell + 1
    if not lo <= n <= hi:
        raise LengthOutOfRange(n, lo, hi)
    return NrcParams(tower=tower, r=r, n=n)


def _moment_vector(tower: FieldTower, r: int, c) -> list[int]:
    if c is INF:
        return [0] * (r - 1) + [1]
    return [tower.top.pow(c, e) for e in range(r)]


def _curve_rows(tower: FieldTower, r: int, c) -> np.ndarray:
    """F_q-basis rows of the field-reduced curve subspace at parameter c.

    Row t is the reduction of z^t * (1, c, ..., c^(r-1)); the rows are an
    F_q-basis because scaling a fixed nonzero vector by F_(q^l) is
    injective.
    """
    nu = _moment_vector(tower, r, c)
    top = tower.top
    rows = np.empty((tower.ell, r * tower.ell), dtype=np.int64)
    for t in range(tower.ell):
        zt = tower.q ** t  # code of z^t
        rows[t] = tower.reduce_vector([top.mul(zt, x) for x in nu])
    return rows


def nrc_subspace(tower: FieldTower, r: int, c) -> Subspace:
    """The l-dimensional node subspace of curve parameter c (or INF)."""
    s = Subspace.from_rows(tower.base, _curve_rows(tower, r, c))
    if s.dim != tower.ell:
        raise InternalInconsistency("curve subspace has wrong dimension")
    return s


def norm_one_subgroup(tower: FieldTower) -> tuple[int, ...]:
    """All top-field units of norm 1, in ascending code order."""
    sigma = tuple(x for x in tower.top_units() if tower.norm_to_base(x) == 1)
    if len(sigma) != projective_point_count(tower.q, tower.ell):
        raise InternalInconsistency("norm-one subgroup has wrong size")
    return sigma


@dataclass(frozen=True)
class Block:
    """One block of the parameter partition: all c with c^(r-1) in rep*Sigma."""

    rep: int
    members: tuple[int, ...]


@dataclass(frozen=True)
class BlockPartition:
    sigma: tuple[int, ...]
    blocks: tuple[Block, ...]


def block_partition(tower: FieldTower, r: int) -> BlockPartition:
    """Partition the nonzero parameters by which repair kernels hit them.

    Blocks are keyed by the norm-one coset of c^(r-1); each block is
    tagged with the representative (smallest member)^(r-1) and the result
    is ordered by smallest member, so any coset representative produces
    the identical partition.
    """
    r = int(r)
    if r < 2:
        raise BadParameters(f"redundancy r must be at least 2, got {r}")
    q = tower.q
    if (q - 1) % (r - 1) != 0:
        raise Nondivisible(f"r-1={r - 1} does not divide q-1={q - 1}")
    top = tower.top
    sigma = norm_one_subgroup(tower)
    coset_key = {}
    groups: dict[int, list[int]] = {}
    for c in tower.top_units():
        v = top.pow(c, r - 1)
        key = coset_key.get(v)
        if key is None:
            key = min(top.mul(v, s) for s in sigma)
            for s in sigma:
                coset_key[top.mul(v, s)] = key
        groups.setdefault(key, []).append(c)
    blocks = []
    for members in sorted(groups.values(), key=lambda ms: ms[0]):
        blocks.append(Block(rep=top.pow(members[0], r - 1),
                            members=tuple(members)))
    expected_count = (q - 1) // (r - 1)
    size = (r - 1) * len(sigma)
    if len(blocks) != expected_count or any(len(b.members) != size
                                            for b in blocks):
        raise InternalInconsistency("parameter partition has wrong shape")
    if sum(len(b.members) for b in blocks) != tower.top_order - 1:
        raise InternalInconsistency("parameter partition does not cover units")
    return BlockPartition(sigma=sigma, blocks=tuple(blocks))


def repair_subspace(tower: FieldTower, r: int, b: int):
    """Kernel of y -> y_(r-1) - b * y_0^q, expanded over F_q.

    Returns (W, M) where M is the l x (r*l) block row
    [-(multiply-by-b o Frobenius) | 0 | ... | 0 | I] and W = ker(M) has
    dimension (r-1)*l.
    """
    b = tower.top.check(b)
    if b == 0:
        raise ZeroB("the repair kernel parameter must be a unit")
    ell = tower.ell
    field = tower.base
    amat = field.matmul(tower.multiplication_matrix(b),
                        tower.frobenius_matrix())
    m = np.zeros((ell, r * ell), dtype=np.int64)
    m[:, :ell] = field.arr_neg(amat)
    m[:, (r - 1) * ell:] = np.eye(ell, dtype=np.int64)
    mat = Matrix(field, m)
    w = kernel(mat)
    if w.dim != (r - 1) * ell:
        raise InternalInconsistency("repair kernel has wrong dimension")
    return w, mat


@dataclass(frozen=True)
class NrcBundle:
    """A constructed code with its repair scheme and verification results."""

    params: NrcParams
    parameters: tuple  # node parameters, ints plus possibly INF, in order
    partition: BlockPartition
    blocks_used: tuple[Block, Block]
    skeleton: CodeSkeleton
    realization: Realization
    scheme: RepairScheme
    metrics: NodeMetrics

    @property
    def labels(self) -> list[str]:
        return ["inf" if c is INF else str(c) for c in self.parameters]


def _spanning_points(field, node: Subspace, gens: np.ndarray, forced):
    ell = node.dim
    chosen: list[np.ndarray] = []
    if forced is not None:
        chosen.append(forced)
    rank = len(chosen)
    for row in gens:
        if rank == ell:
            break
        p = canonical_point(field, row)
        if any(np.array_equal(p, c) for c in chosen):
            continue
        stacked = np.vstack(chosen + [p]) if chosen else p[None, :]
        new_rank = Subspace.from_rows(field, stacked).dim
        if new_rank > rank:
            chosen.append(p)
            rank = new_rank
    if rank != ell:
        raise InternalInconsistency("column fill failed to span a node")
    return chosen


def build(params: NrcParams) -> NrcBundle:
    """Assemble skeleton, realization, and scheme, then verify the bundle.

    Nodes are ordered: first block, second block (each ascending), the
    remaining finite parameters ascending (0 first), infinity last,
    truncated to n.  Nodes in the first block are repaired with the
    second block's kernel; every other node uses the first block's
    kernel, which misses 0, infinity, and all other blocks.
    """
    tower, r, n = params.tower, params.r, params.n
    field = tower.base
    part = block_partition(tower, r)
    block_a, block_b = part.blocks[0], part.blocks[1]
    w_a, m_a = repair_subspace(tower, r, block_a.rep)
    w_b, m_b = repair_subspace(tower, r, block_b.rep)
    in_a = set(block_a.members)
    in_b = set(block_b.members)
    rest = sorted(set(range(tower.top_order)) - in_a - in_b)
    parameters = (list(block_a.members) + list(block_b.members)
                  + rest + [INF])[:n]

    skeleton = CodeSkeleton(
        tower, r, [nrc_subspace(tower, r, c) for c in parameters])
    scheme = RepairScheme([m_b if c in in_a else m_a for c in parameters])

    column_sets = []
    for idx, c in enumerate(parameters):
        node = skeleton.nodes[idx]
        forced = None
        if c is not INF and c in in_a:
            hit = intersection(w_a, node)
        elif c is not INF and c in in_b:
            hit = intersection(w_b, node)
        else:
            hit = None
        if hit is not None:
            if hit.dim != 1:
                raise InternalInconsistency(
                    "constrained node meets its kernel in dimension != 1")
            forced = canonical_point(field, hit.basis.array[0])
        column_sets.append(_spanning_points(field, node,
                                            _curve_rows(tower, r, c), forced))
    realization = realize(skeleton, column_sets)

    bundle = NrcBundle(params=params, parameters=tuple(parameters),
                       partition=part, blocks_used=(block_a, block_b),
                       skeleton=skeleton, realization=realization,
                       scheme=scheme,
                       metrics=evaluate_scheme(realization, scheme))
    _verify_bundle(bundle)
    return bundle


def _verify_bundle(bundle: NrcBundle) -> None:
    """Re-check every promised property of a finished bundle."""
    s = bundle.skeleton
    tower = s.tower
    witness = s.mds_witness()
    if witness is not None:
        raise InternalInconsistency(f"constructed skeleton not MDS: {witness}")
    hits_expected = (s.r - 1) * projective_point_count(tower.q, s.ell)
    for i in range(s.n):
        profile = incidence_profile(bundle.scheme[i], s, i)
        if any(t not in (0, 1) for t in profile.dims):
            raise InternalInconsistency("a helper intersection exceeds dim 1")
        if profile.sum_dims != hits_expected:
            raise InternalInconsistency("wrong helper hit count at a node")
        if not dual_cover(bundle.scheme[i], s, i).regular:
            raise InternalInconsistency("dual cover is not (r-1)-regular")
    if not bundle.metrics.equality:
        raise InternalInconsistency("constructed scheme misses the bound")


def bundle_provenance(bundle: NrcBundle, version: str) -> dict:
    """Machine-readable record of every deterministic choice made."""
    a, b = bundle.blocks_used
    return {
        "params": {"p": bundle.params.tower.p, "m": bundle.params.tower.m,
                   "ell": bundle.params.ell, "q": bundle.params.q,
                   "r": bundle.params.r, "n": bundle.params.n},
        "blocks": [
            {"rep": a.rep, "members": list(a.members)},
            {"rep": b.rep, "members": list(b.members)},
        ],
        "parameters": ["inf" if c is INF else int(c)
                       for c in bundle.parameters],
        "version": version,
    }
