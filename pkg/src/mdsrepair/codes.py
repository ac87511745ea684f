"""MDS array-code skeletons, parity-check realizations, and bound formulas.

A skeleton is a family of n node subspaces of F_q^(r*l), each of
dimension l; it is MDS when every r of them sum to the whole ambient
space, and then any choice of l distinct spanning projective points per
node realizes it as a concrete parity-check matrix whose column space at
node i is the node subspace.  Codewords are elements of the kernel of
that parity-check matrix, grouped into n blocks of l symbols.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    BadParameters,
    DuplicatePoint,
    MalformedInput,
    NotMds,
    NotSpanning,
    PointOutsideNode,
    RepairToolError,
    TooFewNodes,
    WrongAmbient,
    WrongNodeDim,
)
from .gf import FieldTower, prime_power
from .linalg import (
    Matrix,
    Subspace,
    batched_rank,
    canonical_point,
    gaussian_binomial,
    kernel,
    projective_point_count,
)

# Identifier of the codeword sampling algorithm, persisted in reports so
# simulation runs stay reproducible across environments.
CODEWORD_SAMPLER = "pcg64-integers-v1"

_MDS_CHUNK = 2048


class CodeSkeleton:
    """n node subspaces of F_q^(r*l), each of dimension l."""

    __slots__ = ("tower", "r", "nodes", "_bases", "_mds")

    def __init__(self, tower: FieldTower, r: int,
                 nodes: Sequence[Subspace]):
        r = int(r)
        nodes = tuple(nodes)
        ell = tower.ell
        ambient = r * ell
        if len(nodes) < r or r < 1:
            raise TooFewNodes(f"need at least r={r} nodes, got {len(nodes)}")
        for i, s in enumerate(nodes):
            if s.ambient != ambient or s.field != tower.base:
                raise WrongAmbient(
                    f"node {i} lives in ambient {s.ambient}, expected {ambient}")
            if s.dim != ell:
                raise WrongNodeDim(
                    f"node {i} has dimension {s.dim}, expected {ell}")
        self.tower = tower
        self.r = r
        self.nodes = nodes
        self._bases = None
        self._mds = False  # not yet checked

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def ell(self) -> int:
        return self.tower.ell

    @property
    def ambient(self) -> int:
        return self.r * self.tower.ell

    def basis_stack(self) -> np.ndarray:
        """All node bases as one (n, l, r*l) array (cached, read-only)."""
        if self._bases is None:
            b = np.stack([s.basis.array for s in self.nodes])
            b.setflags(write=False)
            self._bases = b
        return self._bases

    def mds_witness(self):
        """Cached check_mds result; None means verified MDS."""
        if self._mds is False:
            self._mds = check_mds(self)
        return self._mds

    @property
    def is_mds(self) -> bool:
        return self.mds_witness() is None


def skeleton_new(tower: FieldTower, r: int,
                 subspaces: Sequence[Subspace]) -> CodeSkeleton:
    """Validate dimensions and assemble a skeleton (MDS-ness not asserted)."""
    return CodeSkeleton(tower, r, subspaces)


def check_mds(s: CodeSkeleton):
    """None if every r-subset of nodes spans the ambient space.

    Otherwise the lexicographically first failing subset of node indices
    (0-based).  Subsets of stacked node bases are rank-checked in batches.
    """
    field = s.tower.base
    ambient = s.ambient
    bases = s.basis_stack()
    combos = itertools.combinations(range(s.n), s.r)
    while True:
        batch = list(itertools.islice(combos, _MDS_CHUNK))
        if not batch:
            return None
        idx = np.array(batch, dtype=np.int64)
        stacked = bases[idx].reshape(len(batch), ambient, ambient)
        ranks = batched_rank(field, stacked)
        bad = np.nonzero(ranks != ambient)[0]
        if bad.size:
            return tuple(batch[int(bad[0])])


class Realization:
    """A skeleton together with concrete parity-check blocks and columns.

    ``blocks[i]`` is the (r*l) x l block whose t-th column is the chosen
    canonical representative of the t-th projective column point of node
    i; ``column_sets[i]`` is that point list.
    """

    __slots__ = ("skeleton", "blocks", "column_sets", "_parity", "_kernel")

    def __init__(self, skeleton: CodeSkeleton, blocks: Sequence[Matrix],
                 column_sets):
        self.skeleton = skeleton
        self.blocks = tuple(blocks)
        self.column_sets = tuple(tuple(pts) for pts in column_sets)
        self._parity = None
        self._kernel = None

    @property
    def n(self) -> int:
        return self.skeleton.n

    def parity_matrix(self) -> Matrix:
        if self._parity is None:
            arr = np.hstack([b.array for b in self.blocks])
            self._parity = Matrix(self.skeleton.tower.base, arr)
        return self._parity

    def kernel_basis(self) -> Matrix:
        if self._kernel is None:
            self._kernel = kernel(self.parity_matrix()).basis
        return self._kernel

    def column_stack(self) -> np.ndarray:
        """All parity columns side by side: shape (r*l, n*l)."""
        return self.parity_matrix().array


def realize(s: CodeSkeleton, column_sets) -> Realization:
    """Build the realization with the given projective column points.

    Each node needs exactly l distinct points, all inside the node
    subspace and jointly spanning it.  Input vectors are canonicalized
    (first nonzero coordinate scaled to 1) before validation.
    """
    field = s.tower.base
    ell = s.ell
    blocks = []
    cleaned = []
    for i, pts in enumerate(column_sets):
        pts = [canonical_point(field, p) for p in pts]
        if len(pts) != ell:
            raise NotSpanning(f"node {i}: need exactly {ell} column points")
        seen = set()
        for p in pts:
            key = p.tobytes()
            if key in seen:
                raise DuplicatePoint(f"node {i}: repeated projective point")
            seen.add(key)
            if not s.nodes[i].contains(p):
                raise PointOutsideNode(
                    f"node {i}: column point outside the node subspace")
        stacked = np.stack(pts)
        if Subspace.from_rows(field, stacked).dim != ell:
            raise NotSpanning(f"node {i}: column points do not span the node")
        blocks.append(Matrix(field, stacked.T))
        cleaned.append(tuple(tuple(int(x) for x in p) for p in pts))
    return Realization(s, blocks, cleaned)


def sample_codeword(re: Realization, seed) -> np.ndarray:
    """A seed-determined uniform random codeword, shaped (n, l).

    Coefficients over the kernel basis are drawn from numpy's PCG64
    generator (see CODEWORD_SAMPLER); equal seeds give equal codewords.
    ``seed`` may be an int or a sequence of ints.
    """
    s = re.skeleton
    if not s.is_mds:
        raise NotMds(s.mds_witness())
    field = s.tower.base
    kb = re.kernel_basis()
    rng = np.random.default_rng(seed)
    coeffs = rng.integers(0, field.order, size=kb.rows, dtype=np.int64)
    flat = field.matmul(coeffs[None, :], kb.array)[0]
    cw = flat.reshape(s.n, s.ell)
    cw.setflags(write=False)
    return cw


def is_codeword(re: Realization, cw: np.ndarray) -> bool:
    s = re.skeleton
    cw = np.asarray(cw, dtype=np.int64)
    if cw.shape != (s.n, s.ell):
        return False
    field = s.tower.base
    syndrome = field.matmul(re.column_stack(), cw.reshape(-1, 1))
    return not syndrome.any()


# ---------------------------------------------------------------------------
# bound formulas


@dataclass(frozen=True)
class BoundsReport:
    """The two lower bounds and the attainment-side quantities.

    ``im_bound`` caps how much any repair subspace can overlap the
    helpers by the multiplicity of dual projective points; ``pc_bound``
    is the older packing-based bound, kept even when vacuous (negative)
    because the gap between the two is the interesting quantity.
    """

    q: int
    ell: int
    r: int
    n: int
    im_bound: int
    pc_bound: int
    length_max: int
    equality_min_length: int
    coverage_fraction: Fraction
    r_le_q: bool

    def to_json_dict(self) -> dict:
        cf = self.coverage_fraction
        return {
            "q": self.q, "ell": self.ell, "r": self.r, "n": self.n,
            "im_bound": self.im_bound,
            "pc_bound": self.pc_bound,
            "length_max": self.length_max,
            "equality_min_length": self.equality_min_length,
            "coverage_fraction": str(cf) if cf.denominator != 1 else int(cf),
            "r_le_q": self.r_le_q,
        }


def bounds_report(q: int, ell: int, r: int, n: int) -> BoundsReport:
    """Evaluate the bound formulas for one parameter point.

    im_bound = l(n-1) - (r-1)(q^l-1)/(q-1); pc_bound replaces the
    correction term by (q^((r-1)l)-1)/(q-1).  length_max is the general
    MDS length ceiling q^l + r - 1, and equality_min_length the shortest
    length at which im_bound can possibly be attained.
    """
    q, ell, r, n = int(q), int(ell), int(r), int(n)
    if prime_power(q) is None:
        raise BadParameters(f"q={q} is not a prime power")
    if ell < 1 or r < 2 or n < r:
        raise BadParameters(
            f"need ell >= 1, r >= 2, n >= r; got ell={ell}, r={r}, n={n}")
    t = projective_point_count(q, ell)
    im = ell * (n - 1) - (r - 1) * t
    pc = ell * (n - 1) - (q ** ((r - 1) * ell) - 1) // (q - 1)
    length_max = q ** ell + r - 1
    eq_min = 1 + (r - 1) * t
    cov = Fraction(q ** ell + 2 - 2 * (r - 1) * t, length_max)
    if cov < 0:
        cov = Fraction(0)
    return BoundsReport(q=q, ell=ell, r=r, n=n, im_bound=im, pc_bound=pc,
                        length_max=length_max, equality_min_length=eq_min,
                        coverage_fraction=cov, r_le_q=(r <= q))


# ---------------------------------------------------------------------------
# persistence (code.json)


def realization_to_json(re: Realization, labels: Sequence[str] | None = None,
                        provenance: dict | None = None) -> dict:
    s = re.skeleton
    if labels is None:
        labels = ["free"] * s.n
    nodes = []
    for i in range(s.n):
        nodes.append({
            "label": str(labels[i]),
            "H": [[int(x) for x in col] for col in re.blocks[i].array.T],
            "X": [list(p) for p in re.column_sets[i]],
        })
    obj = {
        "v": 1,
        "tower": s.tower.to_json_dict(),
        "ell": s.ell,
        "r": s.r,
        "n": s.n,
        "nodes": nodes,
    }
    if provenance is not None:
        obj["provenance"] = provenance
    return obj


def realization_from_json(obj: dict):
    """Rebuild (realization, labels, provenance) from a code.json dict.

    Every type invariant is re-validated: tower polynomials, node
    dimensions, column membership/spanning, and the X/H correspondence.
    """
    try:
        if obj.get("v") != 1:
            raise MalformedInput(f"unsupported schema version {obj.get('v')!r}")
        tower = FieldTower.from_json_dict(obj["tower"])
        ell, r, n = int(obj["ell"]), int(obj["r"]), int(obj["n"])
        raw_nodes = obj["nodes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad code object: {exc}") from exc
    if ell != tower.ell:
        raise MalformedInput("ell disagrees with the tower descriptor")
    if len(raw_nodes) != n:
        raise MalformedInput("node count disagrees with n")
    field = tower.base
    subspaces = []
    column_sets = []
    labels = []
    for nd in raw_nodes:
        try:
            labels.append(str(nd["label"]))
            cols = np.array(nd["H"], dtype=np.int64)
            pts = np.array(nd["X"], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad node object: {exc}") from exc
        if cols.ndim != 2 or cols.shape != (ell, r * ell):
            raise MalformedInput("node H must be ell columns of length r*ell")
        if pts.shape != (ell, r * ell):
            raise MalformedInput("node X must be ell points of length r*ell")
        subspaces.append(Subspace.from_rows(field, cols))
        column_sets.append(list(pts))
    try:
        skeleton = CodeSkeleton(tower, r, subspaces)
        re = realize(skeleton, column_sets)
    except RepairToolError as exc:
        raise MalformedInput(f"invariant violated on load: {exc}") from exc
    # the stored columns must equal the canonical realization columns
    for i, nd in enumerate(raw_nodes):
        if [list(map(int, c)) for c in re.blocks[i].array.T] != \
                [list(map(int, c)) for c in nd["H"]]:
            raise MalformedInput(f"node {i}: H columns are not canonical "
                                 "representatives of X")
    return re, labels, obj.get("provenance")
