"""Repair metrics, exhaustive repair-subspace search, and counting checks.

A repair matrix for node i is an l x (r*l) matrix M with M * H_i
invertible; the failed block is then a linear function of the compressed
helper blocks M * H_j.  Bandwidth counts the symbols downloaded
(sum of rank(M H_j) over helpers), I/O counts the symbols read
(sum of nonzero columns of M H_j).  Writing W = ker(M), the bandwidth
identity rank(M H_j) = l - dim(W /\\ H_j) ties both quantities to how the
codimension-l subspace W meets the helper node subspaces, which is what
the diagnostics in this module count.

The brute-force optimizers scan every codimension-l subspace exactly once
by enumerating canonical full-rank RREF matrices M (row space <-> kernel
is a bijection), so their maxima are exact and their witnesses are the
first maximizers in a deterministic order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .codes import BoundsReport, CodeSkeleton, Realization, bounds_report
from .errors import (
    BadRank,
    BadShape,
    BudgetExceeded,
    InternalInconsistency,
    MalformedInput,
    NotARepairMatrix,
    NotMds,
)
from .gf import Field
from .linalg import (
    Matrix,
    batched_rank,
    gaussian_binomial,
    kernel,
    projective_point_array,
    projective_point_count,
    rref_blocks,
)

DEFAULT_BUDGET = 10_000_000


class RepairScheme:
    """One repair matrix per node, each of full row rank l."""

    __slots__ = ("matrices",)

    def __init__(self, matrices: Sequence[Matrix]):
        matrices = tuple(matrices)
        if not matrices:
            raise BadShape("a repair scheme needs at least one matrix")
        shape = matrices[0].shape
        field = matrices[0].field
        for i, m in enumerate(matrices):
            if m.shape != shape or m.field != field:
                raise BadShape(f"matrix {i} has mismatched shape or field")
            if batched_rank(field, m.array[None, :, :])[0] != shape[0]:
                raise BadRank(f"matrix {i} does not have full row rank")
        self.matrices = matrices

    def __len__(self) -> int:
        return len(self.matrices)

    def __getitem__(self, i: int) -> Matrix:
        return self.matrices[i]


def scheme_to_json(sch: RepairScheme, provenance: dict | None = None) -> dict:
    obj = {
        "v": 1,
        "per_node": [{"i": i + 1, "M": m.to_json_dict()}
                     for i, m in enumerate(sch.matrices)],
    }
    if provenance is not None:
        obj["provenance"] = provenance
    return obj


def scheme_from_json(obj: dict, field: Field):
    try:
        if obj.get("v") != 1:
            raise MalformedInput(f"unsupported schema version {obj.get('v')!r}")
        rows = list(obj["per_node"])
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"bad scheme object: {exc}") from exc
    by_index = {}
    for entry in rows:
        try:
            i = int(entry["i"])
            m = Matrix.from_json_dict(field, entry["M"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad scheme entry: {exc}") from exc
        if i in by_index:
            raise MalformedInput(f"duplicate node index {i}")
        by_index[i] = m
    n = len(by_index)
    if sorted(by_index) != list(range(1, n + 1)):
        raise MalformedInput("scheme node indices must be 1..n")
    return RepairScheme([by_index[i] for i in range(1, n + 1)]), \
        obj.get("provenance")


# ---------------------------------------------------------------------------
# helpers


def _compressed_blocks(field: Field, m_arr: np.ndarray,
                       col_stack: np.ndarray, n: int, ell: int) -> np.ndarray:
    """All products M * (block j) as an (n, l, l) array."""
    prod = field.matmul(m_arr, col_stack)
    return np.ascontiguousarray(prod.reshape(ell, n, ell).transpose(1, 0, 2))


def _skeleton_col_stack(s: CodeSkeleton) -> np.ndarray:
    """Node basis vectors as columns, side by side: (r*l, n*l)."""
    bases = s.basis_stack()
    return np.ascontiguousarray(
        bases.transpose(2, 0, 1).reshape(s.ambient, s.n * s.ell))


def _check_repair_inputs(s: CodeSkeleton, m: Matrix, i: int) -> None:
    if not 0 <= int(i) < s.n:
        raise BadShape(f"node index {i} out of range for n={s.n}")
    if m.field != s.tower.base:
        raise BadShape("repair matrix is over a different field")
    if m.shape != (s.ell, s.ambient):
        raise BadShape(f"repair matrix must be {s.ell} x {s.ambient}, "
                       f"got {m.rows} x {m.cols}")


def _require_full_row_rank(field: Field, m: Matrix, ell: int) -> None:
    if m.rows != ell:
        raise BadRank(f"expected {ell} rows, got {m.rows}")
    if batched_rank(field, m.array[None, :, :])[0] != ell:
        raise BadRank("matrix does not have full row rank")


def _intersection_dims(s: CodeSkeleton, w_basis: np.ndarray,
                       helpers: Sequence[int]) -> np.ndarray:
    """dim(W /\\ H_j) for each listed node, via batched stacked ranks."""
    field = s.tower.base
    d = s.ambient
    bases = s.basis_stack()
    wdim = w_basis.shape[0]
    stacked = np.empty((len(helpers), wdim + s.ell, d), dtype=np.int64)
    stacked[:, :wdim, :] = w_basis
    stacked[:, wdim:, :] = bases[list(helpers)]
    ranks = batched_rank(field, stacked)
    return wdim + s.ell - ranks


# ---------------------------------------------------------------------------
# per-matrix metrics


def bandwidth(m: Matrix, re: Realization, i: int) -> int:
    """Symbols downloaded when m repairs node i: sum of rank(M H_j).

    Also recomputes the same count through the kernel of m and the node
    subspaces; the two totals must agree exactly.
    """
    s = re.skeleton
    _check_repair_inputs(s, m, i)
    field = s.tower.base
    n, ell = s.n, s.ell
    blocks = _compressed_blocks(field, m.array, re.column_stack(), n, ell)
    ranks = batched_rank(field, blocks)
    if ranks[i] != ell:
        raise NotARepairMatrix(i)
    helpers = [j for j in range(n) if j != i]
    bw = int(ranks[helpers].sum())
    w = kernel(m)
    dims = _intersection_dims(s, w.basis.array, helpers)
    if bw != ell * (n - 1) - int(dims.sum()):
        raise InternalInconsistency(
            "rank route and kernel route disagree on bandwidth")
    return bw


def io_count(m: Matrix, re: Realization, i: int) -> int:
    """Symbols read at the helpers: sum of nonzero columns of M H_j."""
    s = re.skeleton
    _check_repair_inputs(s, m, i)
    field = s.tower.base
    n, ell = s.n, s.ell
    blocks = _compressed_blocks(field, m.array, re.column_stack(), n, ell)
    if batched_rank(field, blocks[i][None])[0] != ell:
        raise NotARepairMatrix(i)
    nonzero_cols = (blocks != 0).any(axis=1).sum(axis=1)
    nonzero_cols[i] = 0
    return int(nonzero_cols.sum())


# ---------------------------------------------------------------------------
# counting diagnostics


@dataclass(frozen=True)
class IncidenceProfile:
    """How a codimension-l subspace W meets the helper nodes.

    ``dims[k]`` is dim(W /\\ H_j) for helper ``helpers[k]``; ``sum_points``
    counts the projective points of W inside the helpers, which can never
    exceed ``cap`` = (r-1) * (number of projective points of F_q^l) on an
    MDS skeleton.
    """

    failed: int
    helpers: tuple[int, ...]
    dims: tuple[int, ...]
    sum_dims: int
    sum_points: int
    cap: int
    holds: bool


def incidence_profile(m: Matrix, s: CodeSkeleton, i: int) -> IncidenceProfile:
    _check_repair_inputs(s, m, i)
    field = s.tower.base
    q = field.order
    _require_full_row_rank(field, m, s.ell)
    w = kernel(m)
    helpers = tuple(j for j in range(s.n) if j != i)
    dims = _intersection_dims(s, w.basis.array, helpers)
    sum_dims = int(dims.sum())
    sum_points = sum(projective_point_count(q, int(t)) for t in dims)
    cap = (s.r - 1) * projective_point_count(q, s.ell)
    holds = sum_points <= cap
    if not holds and s.is_mds:
        raise InternalInconsistency(
            "incidence cap violated on a verified MDS skeleton")
    return IncidenceProfile(failed=i, helpers=helpers,
                            dims=tuple(int(t) for t in dims),
                            sum_dims=sum_dims, sum_points=sum_points,
                            cap=cap, holds=holds)


@dataclass(frozen=True)
class HierarchyLine:
    s: int
    lhs: int
    rhs: int
    holds: bool


def hierarchy_check(pr: IncidenceProfile, ell: int, r: int,
                    q: int) -> tuple[HierarchyLine, ...]:
    """Subspace-counting inequalities for every dimension s in [1, l].

    For each s the number of s-dimensional subspaces inside the W /\\ H_j,
    summed over helpers, is at most (r-1) times the count in F_q^l.  The
    s = 1 line is exactly the point count of the profile.
    """
    out = []
    for s_dim in range(1, ell + 1):
        lhs = sum(gaussian_binomial(t, s_dim, q) for t in pr.dims)
        rhs = (r - 1) * gaussian_binomial(ell, s_dim, q)
        out.append(HierarchyLine(s=s_dim, lhs=lhs, rhs=rhs, holds=lhs <= rhs))
    return tuple(out)


@dataclass(frozen=True)
class DualCover:
    """Multiplicity of each dual projective point over the helper family.

    ``mults[k]`` counts the helpers j whose compressed block M H_j is
    annihilated by the k-th canonical covector; on an MDS skeleton no
    covector can kill r of them.  ``regular`` reports whether every
    multiplicity equals r - 1 exactly.
    """

    failed: int
    points: np.ndarray
    mults: tuple[int, ...]
    max_mult: int
    regular: bool
    total: int


def dual_cover(m: Matrix, s: CodeSkeleton, i: int) -> DualCover:
    _check_repair_inputs(s, m, i)
    field = s.tower.base
    q = field.order
    ell = s.ell
    _require_full_row_rank(field, m, ell)
    pts = projective_point_array(field, ell)
    col_stack = _skeleton_col_stack(s)
    compressed = field.matmul(m.array, col_stack)          # (l, n*l)
    prod = field.matmul(pts, compressed)                   # (t, n*l)
    killed = (prod.reshape(len(pts), s.n, ell) == 0).all(axis=2)
    killed[:, i] = False
    mults = killed.sum(axis=1)
    blocks = np.ascontiguousarray(
        compressed.reshape(ell, s.n, ell).transpose(1, 0, 2))
    dims = ell - batched_rank(field, blocks)
    expected = sum(projective_point_count(q, int(dims[j]))
                   for j in range(s.n) if j != i)
    total = int(mults.sum())
    if total != expected:
        raise InternalInconsistency(
            "dual cover bookkeeping does not match intersection dimensions")
    max_mult = int(mults.max()) if len(mults) else 0
    if max_mult > s.r - 1 and s.is_mds:
        raise InternalInconsistency(
            "dual point covered r times on a verified MDS skeleton")
    return DualCover(failed=i, points=pts,
                     mults=tuple(int(x) for x in mults),
                     max_mult=max_mult,
                     regular=all(x == s.r - 1 for x in mults),
                     total=total)


# ---------------------------------------------------------------------------
# exhaustive optimization over repair subspaces


def _bruteforce(field: Field, targets: np.ndarray, block_i: np.ndarray,
                ell: int, d: int, objective: str, start: int, stop: int):
    """Scan canonical RREF candidates in [start, stop).

    ``targets`` is the (d, k) column stack the objective reads from and
    ``block_i`` the (d, l) column stack of the failed node used for the
    feasibility filter.  Returns (best value, witness array, count) with
    the witness being the first maximizer; (-1, None, count) if nothing
    in the range is feasible.
    """
    q = field.order
    n_cols = targets.shape[1] // ell
    best = -1
    witness = None
    seen = 0
    for _, block in rref_blocks(q, ell, d, start, stop):
        cnt = block.shape[0]
        seen += cnt
        flat = block.reshape(cnt * ell, d)
        feas_blocks = field.matmul(flat, block_i).reshape(cnt, ell, ell)
        feasible = batched_rank(field, feas_blocks) == ell
        sel = np.nonzero(feasible)[0]
        if sel.size == 0:
            continue
        prod = field.matmul(block[sel].reshape(sel.size * ell, d), targets)
        cube = prod.reshape(sel.size, ell, n_cols, ell).transpose(0, 2, 1, 3)
        if objective == "overlap":
            ranks = batched_rank(field, cube.reshape(-1, ell, ell))
            obj = (ell - ranks.reshape(sel.size, n_cols)).sum(axis=1)
        else:
            zero_col = (cube == 0).all(axis=2)
            obj = zero_col.sum(axis=(1, 2))
        omax = int(obj.max())
        if omax > best:
            k = int(np.argmax(obj == omax))
            best = omax
            witness = block[sel[k]].copy()
    return best, witness, seen


def _resolve_range(total: int, index_range, budget: int):
    if index_range is None:
        if total > budget:
            raise BudgetExceeded(total)
        return 0, total
    start, stop = int(index_range[0]), int(index_range[1])
    if not 0 <= start <= stop <= total:
        raise BadShape(f"index range [{start}, {stop}) outside [0, {total})")
    return start, stop


def bruteforce_overlap(s: CodeSkeleton, i: int,
                       index_range: tuple[int, int] | None = None,
                       budget: int = DEFAULT_BUDGET):
    """Exact maximum of the total helper intersection dimension at node i.

    Scans every feasible codimension-l repair subspace once; the optimal
    repair bandwidth for node i is l*(n-1) minus the returned value.
    Returns (value, witness Matrix).
    """
    if not 0 <= int(i) < s.n:
        raise BadShape(f"node index {i} out of range for n={s.n}")
    if not s.is_mds:
        raise NotMds(s.mds_witness())
    field = s.tower.base
    ell, d = s.ell, s.ambient
    total = gaussian_binomial(d, ell, field.order)
    start, stop = _resolve_range(total, index_range, budget)
    bases = s.basis_stack()
    helpers = [j for j in range(s.n) if j != i]
    targets = np.ascontiguousarray(
        bases[helpers].transpose(2, 0, 1).reshape(d, len(helpers) * ell))
    block_i = np.ascontiguousarray(bases[i].T)
    best, witness, _ = _bruteforce(field, targets, block_i, ell, d,
                                   "overlap", start, stop)
    return best, None if witness is None else Matrix(field, witness)


def bruteforce_column_hits(re: Realization, i: int,
                           index_range: tuple[int, int] | None = None,
                           budget: int = DEFAULT_BUDGET):
    """Exact maximum number of helper parity columns inside ker(M) at node i.

    The realization's actual column vectors are what count here; the
    optimal repair I/O for node i is l*(n-1) minus the returned value.
    Returns (value, witness Matrix).
    """
    s = re.skeleton
    if not 0 <= int(i) < s.n:
        raise BadShape(f"node index {i} out of range for n={s.n}")
    if not s.is_mds:
        raise NotMds(s.mds_witness())
    field = s.tower.base
    ell, d = s.ell, s.ambient
    total = gaussian_binomial(d, ell, field.order)
    start, stop = _resolve_range(total, index_range, budget)
    helpers = [j for j in range(s.n) if j != i]
    targets = np.ascontiguousarray(
        np.hstack([re.blocks[j].array for j in helpers]))
    block_i = re.blocks[i].array
    best, witness, _ = _bruteforce(field, targets, block_i, ell, d,
                                   "columns", start, stop)
    return best, None if witness is None else Matrix(field, witness)


# ---------------------------------------------------------------------------
# scheme evaluation


@dataclass(frozen=True)
class NodeMetrics:
    """Per-node achieved repair cost of a concrete scheme, plus aggregates.

    ``bandwidth``/``io`` are what the scheme's matrices actually achieve
    (wire names beta/gamma); gaps measure the distance to the
    incidence-multiplicity bound, and ``equality`` is set when every gap
    vanishes.
    """

    n: int
    ell: int
    bandwidth: tuple[int, ...]
    io: tuple[int, ...]
    bounds: BoundsReport
    bandwidth_avg: Fraction
    bandwidth_max: int
    io_avg: Fraction
    io_max: int
    bandwidth_gap: tuple[int, ...]
    io_gap: tuple[int, ...]
    equality: bool

    @property
    def overlap_achieved(self) -> tuple[int, ...]:
        return tuple(self.ell * (self.n - 1) - b for b in self.bandwidth)

    @property
    def column_hits_achieved(self) -> tuple[int, ...]:
        return tuple(self.ell * (self.n - 1) - g for g in self.io)

    def to_json_dict(self) -> dict:
        def frac(x: Fraction):
            return int(x) if x.denominator == 1 else str(x)
        return {
            "per_node": [
                {"i": i + 1, "beta": self.bandwidth[i], "gamma": self.io[i],
                 "gap": max(self.bandwidth_gap[i], self.io_gap[i])}
                for i in range(self.n)
            ],
            "aggregates": {
                "beta_avg": frac(self.bandwidth_avg),
                "beta_max": self.bandwidth_max,
                "gamma_avg": frac(self.io_avg),
                "gamma_max": self.io_max,
            },
            "bounds": self.bounds.to_json_dict(),
            "equality": self.equality,
        }


def evaluate_scheme(re: Realization, sch: RepairScheme) -> NodeMetrics:
    """Achieved bandwidth/IO of the scheme at every node, with bound gaps."""
    s = re.skeleton
    if len(sch) != s.n:
        raise BadShape(f"scheme has {len(sch)} matrices for {s.n} nodes")
    bw = []
    io = []
    for i in range(s.n):
        bw.append(bandwidth(sch[i], re, i))
        io.append(io_count(sch[i], re, i))
        if io[i] < bw[i]:
            raise InternalInconsistency("io below bandwidth at a node")
    rep = bounds_report(s.tower.q, s.ell, s.r, s.n)
    bw_gap = tuple(b - rep.im_bound for b in bw)
    io_gap = tuple(g - rep.im_bound for g in io)
    if any(g < 0 for g in bw_gap + io_gap) and s.is_mds:
        raise InternalInconsistency("achieved cost below the proven bound")
    return NodeMetrics(
        n=s.n, ell=s.ell,
        bandwidth=tuple(bw), io=tuple(io), bounds=rep,
        bandwidth_avg=Fraction(sum(bw), s.n), bandwidth_max=max(bw),
        io_avg=Fraction(sum(io), s.n), io_max=max(io),
        bandwidth_gap=bw_gap, io_gap=io_gap,
        equality=all(g == 0 for g in bw_gap + io_gap),
    )
