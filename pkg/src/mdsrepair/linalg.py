"""Exact matrices and canonical subspaces over a finite field.

Vectors are row vectors throughout: a subspace is the row space of its
basis matrix, and the basis is kept in reduced row-echelon form with no
zero rows, so equal subspaces have identical basis matrices and equality
is a plain array comparison.

The module also provides the canonical enumeration of all rank-k RREF
matrices of a given shape.  Distinct outputs have distinct row spaces and
their kernels range exactly once over all codimension-k subspaces, which
is what the brute-force repair optimizer scans.  The enumeration order is
fixed: pivot column sets in lexicographic order, then the free entries as
a little-endian base-q counter over the free positions in row-major
order, so a stream can be split by index range across workers and always
replays identically.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    AmbientMismatch,
    BadShape,
    DivisionByZero,
    LevelMismatch,
    MalformedInput,
)
from .gf import Field


def gaussian_binomial(a: int, s: int, q: int) -> int:
    """Number of s-dimensional subspaces of an a-dimensional space over F_q.

    Evaluates the product formula exactly with integer arithmetic; zero
    when a < s.
    """
    if a < 0 or s < 0:
        raise ValueError("gaussian_binomial arguments must be nonnegative")
    if a < s:
        return 0
    num = 1
    den = 1
    for i in range(s):
        num *= q ** a - q ** i
        den *= q ** s - q ** i
    return num // den


def projective_point_count(q: int, dim: int) -> int:
    """Number of projective points of F_q^dim, i.e. (q^dim - 1)/(q - 1)."""
    return gaussian_binomial(dim, 1, q)


class Matrix:
    """Immutable dense matrix of field element codes."""

    __slots__ = ("field", "_a")

    def __init__(self, field: Field, entries):
        a = np.array(entries, dtype=np.int64)
        if a.ndim != 2:
            raise BadShape("matrix entries must be two-dimensional")
        if a.size and (a.min() < 0 or a.max() >= field.order):
            raise LevelMismatch("matrix entry out of range for the field")
        a.setflags(write=False)
        self.field = field
        self._a = a

    @classmethod
    def zeros(cls, field: Field, rows: int, cols: int) -> "Matrix":
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: Field, n: int) -> "Matrix":
        return cls(field, np.eye(n, dtype=np.int64))

    @property
    def array(self) -> np.ndarray:
        return self._a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    def to_json_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols,
                "entries": [int(x) for x in self._a.ravel()]}

    @classmethod
    def from_json_dict(cls, field: Field, obj: dict) -> "Matrix":
        try:
            rows, cols = int(obj["rows"]), int(obj["cols"])
            entries = list(obj["entries"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad matrix object: {exc}") from exc
        if len(entries) != rows * cols:
            raise MalformedInput("matrix entry count does not match shape")
        return cls(field, np.array(entries, dtype=np.int64).reshape(rows, cols))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.field == other.field and self.shape == other.shape
                and bool(np.array_equal(self._a, other._a)))

    def __hash__(self):
        return hash((self.field, self.shape, self._a.tobytes()))

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols} over order {self.field.order})"


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.field != b.field:
        raise AmbientMismatch("matrices over different fields")
    if a.cols != b.rows:
        raise BadShape(f"cannot multiply {a.shape} by {b.shape}")
    return Matrix(a.field, a.field.matmul(a.array, b.array))


def _rref_array(field: Field, a: np.ndarray) -> tuple[np.ndarray, int, tuple[int, ...]]:
    a = a.copy()
    rows, cols = a.shape
    row = 0
    pivots = []
    for col in range(cols):
        if row == rows:
            break
        nz = np.nonzero(a[row:, col])[0]
        if nz.size == 0:
            continue
        pr = row + int(nz[0])
        if pr != row:
            a[[row, pr]] = a[[pr, row]]
        inv = field.inv(int(a[row, col]))
        a[row] = field.arr_mul(a[row], inv)
        factors = a[:, col].copy()
        factors[row] = 0
        if factors.any():
            a = field.arr_sub(a, field.arr_mul(factors[:, None], a[row][None, :]))
        pivots.append(col)
        row += 1
    return a, row, tuple(pivots)


def rref(m: Matrix) -> tuple[Matrix, int, tuple[int, ...]]:
    """Unique reduced row-echelon form, with rank and pivot columns."""
    a, rank, pivots = _rref_array(m.field, m.array)
    return Matrix(m.field, a), rank, pivots


def rank_of(m: Matrix) -> int:
    return _rref_array(m.field, m.array)[1]


def batched_rank(field: Field, blocks: np.ndarray) -> np.ndarray:
    """Ranks of a stack of small matrices, eliminated in lockstep.

    ``blocks`` has shape (batch, rows, cols); returns an int array of
    length batch.  The loop is over columns only, so large batches cost a
    handful of vectorised operations each.
    """
    a = np.array(blocks, dtype=np.int64)
    if a.ndim != 3:
        raise BadShape("expected a (batch, rows, cols) array")
    nb, rows, cols = a.shape
    if nb == 0 or rows == 0 or cols == 0:
        return np.zeros(nb, dtype=np.int64)
    piv_row = np.zeros(nb, dtype=np.int64)
    row_idx = np.arange(rows)[None, :]
    for col in range(cols):
        eligible = (row_idx >= piv_row[:, None]) & (a[:, :, col] != 0)
        has = eligible.any(axis=1)
        sel = np.nonzero(has)[0]
        if sel.size == 0:
            continue
        pr = piv_row[sel]
        pv = eligible[sel].argmax(axis=1)
        need_swap = np.nonzero(pv != pr)[0]
        if need_swap.size:
            bs = sel[need_swap]
            r1 = pr[need_swap]
            r2 = pv[need_swap]
            tmp = a[bs, r1, :].copy()
            a[bs, r1, :] = a[bs, r2, :]
            a[bs, r2, :] = tmp
        inv = field.arr_inv(a[sel, pr, col])
        a[sel, pr, :] = field.arr_mul(a[sel, pr, :], inv[:, None])
        factors = a[sel, :, col].copy()
        factors[np.arange(sel.size), pr] = 0
        pivrows = a[sel, pr, :]
        a[sel] = field.arr_sub(a[sel], field.arr_mul(factors[:, :, None],
                                                     pivrows[:, None, :]))
        piv_row[sel] += 1
    return piv_row


class Subspace:
    """A subspace of F_q^d stored as a canonical RREF basis."""

    __slots__ = ("field", "ambient", "basis", "pivots")

    def __init__(self, field: Field, ambient: int, basis: Matrix,
                 pivots: tuple[int, ...]):
        self.field = field
        self.ambient = ambient
        self.basis = basis
        self.pivots = pivots

    @classmethod
    def from_rows(cls, field: Field, rows) -> "Subspace":
        a = np.array(rows, dtype=np.int64)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2:
            raise BadShape("expected a 2-D array of generator rows")
        r, rank, pivots = _rref_array(field, a)
        return cls(field, a.shape[1], Matrix(field, r[:rank]), pivots)

    @classmethod
    def zero(cls, field: Field, ambient: int) -> "Subspace":
        return cls(field, ambient, Matrix.zeros(field, 0, ambient), ())

    @classmethod
    def full(cls, field: Field, ambient: int) -> "Subspace":
        return cls(field, ambient, Matrix.identity(field, ambient),
                   tuple(range(ambient)))

    @property
    def dim(self) -> int:
        return self.basis.rows

    def contains(self, v) -> bool:
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (self.ambient,):
            raise AmbientMismatch(
                f"vector of length {v.shape} in ambient {self.ambient}")
        if self.dim == 0:
            return not v.any()
        coeffs = v[list(self.pivots)]
        combo = self.field.matmul(coeffs[None, :], self.basis.array)[0]
        return not self.field.arr_sub(v, combo).any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient == other.ambient and self.basis == other.basis

    def __hash__(self):
        return hash((self.ambient, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def kernel(m: Matrix) -> Subspace:
    """Right kernel {v : m v^T = 0} as a subspace of row vectors."""
    r, rank, pivots = rref(m)
    d = m.cols
    free = [c for c in range(d) if c not in pivots]
    if not free:
        return Subspace.zero(m.field, d)
    rows = np.zeros((len(free), d), dtype=np.int64)
    for k, f in enumerate(free):
        rows[k, f] = 1
        for i, pc in enumerate(pivots):
            rows[k, pc] = m.field.neg(int(r.array[i, f]))
    return Subspace.from_rows(m.field, rows)


def contains(s: Subspace, v) -> bool:
    return s.contains(v)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    if a.ambient != b.ambient or a.field != b.field:
        raise AmbientMismatch("subspaces live in different ambient spaces")
    stacked = np.vstack([a.basis.array, b.basis.array])
    return Subspace.from_rows(a.field, stacked)


def intersect_dim(a: Subspace, b: Subspace) -> int:
    """dim(a) + dim(b) - dim(a + b), computed from one stacked rank."""
    if a.ambient != b.ambient or a.field != b.field:
        raise AmbientMismatch("subspaces live in different ambient spaces")
    stacked = np.vstack([a.basis.array, b.basis.array])
    rank = _rref_array(a.field, stacked)[1]
    return a.dim + b.dim - rank


def annihilator(s: Subspace) -> Subspace:
    """{y : x . y = 0 for all x in s} under the standard bilinear form."""
    if s.dim == 0:
        return Subspace.full(s.field, s.ambient)
    return kernel(s.basis)


def intersection(a: Subspace, b: Subspace) -> Subspace:
    """Intersection via annihilators: (a^o + b^o)^o."""
    return annihilator(subspace_sum(annihilator(a), annihilator(b)))


def inverse(m: Matrix) -> Matrix:
    if m.rows != m.cols:
        raise BadShape("only square matrices can be inverted")
    n = m.rows
    aug = np.hstack([m.array, np.eye(n, dtype=np.int64)])
    r, _, pivots = _rref_array(m.field, aug)
    if pivots[:n] != tuple(range(n)):
        raise DivisionByZero("matrix is singular")
    return Matrix(m.field, r[:, n:])


def solve_exact(a: Matrix, b: Matrix) -> Matrix:
    """The unique X with a @ X = b; a must have full column rank."""
    if a.rows != b.rows:
        raise BadShape("incompatible shapes in solve")
    aug = np.hstack([a.array, b.array])
    r, rank, pivots = _rref_array(a.field, aug)
    if any(p >= a.cols for p in pivots):
        raise BadShape("inconsistent linear system")
    if len(pivots) != a.cols:
        raise BadShape("coefficient matrix does not have full column rank")
    return Matrix(a.field, r[:a.cols, a.cols:])


def canonical_point(field: Field, v) -> np.ndarray:
    """Projective representative with first nonzero coordinate scaled to 1."""
    v = np.asarray(v, dtype=np.int64)
    nz = np.nonzero(v)[0]
    if nz.size == 0:
        raise ValueError("the zero vector is not a projective point")
    out = field.arr_mul(v, field.inv(int(v[nz[0]])))
    out.setflags(write=False)
    return out


def projective_point_array(field: Field, dim: int) -> np.ndarray:
    """All canonical projective points of F_q^dim, in a fixed order.

    Points are grouped by the position of the leading 1 (ascending), and
    within a group the tail coordinates count up as a little-endian base-q
    number.  Row count is projective_point_count(q, dim).
    """
    q = field.order
    rows = []
    for lead in range(dim):
        tail = dim - lead - 1
        count = q ** tail
        block = np.zeros((count, dim), dtype=np.int64)
        block[:, lead] = 1
        c = np.arange(count, dtype=np.int64)
        for t in range(tail):
            block[:, lead + 1 + t] = (c // q ** t) % q
        rows.append(block)
    out = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.int64)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# canonical enumeration of rank-k RREF matrices


def _free_positions(pivots: Sequence[int], d: int) -> list[tuple[int, int]]:
    pivot_set = set(pivots)
    return [(i, j) for i in range(len(pivots)) for j in range(d)
            if j not in pivot_set and j > pivots[i]]


def rref_blocks(q: int, k: int, d: int, start: int = 0,
                stop: int | None = None,
                chunk: int = 8192) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (base_index, array) chunks of the canonical RREF enumeration.

    Each array has shape (count, k, d); concatenated over the whole range
    [start, stop) the chunks list every rank-k RREF matrix exactly once in
    the canonical order.
    """
    if not 0 <= k <= d:
        raise BadShape(f"need 0 <= k <= d, got k={k}, d={d}")
    total = gaussian_binomial(d, k, q)
    if stop is None:
        stop = total
    if not 0 <= start <= stop <= total:
        raise BadShape(f"index range [{start}, {stop}) outside [0, {total})")
    if start == stop:
        return
    offset = 0
    for pivots in itertools.combinations(range(d), k):
        free = _free_positions(pivots, d)
        block_total = q ** len(free)
        lo = max(start, offset)
        hi = min(stop, offset + block_total)
        if lo < hi:
            for c0 in range(lo - offset, hi - offset, chunk):
                c1 = min(c0 + chunk, hi - offset)
                cnt = c1 - c0
                arr = np.zeros((cnt, k, d), dtype=np.int64)
                for i, pc in enumerate(pivots):
                    arr[:, i, pc] = 1
                cvals = np.arange(c0, c1, dtype=object) if q ** len(free) > 2**62 \
                    else np.arange(c0, c1, dtype=np.int64)
                for t, (ri, cj) in enumerate(free):
                    arr[:, ri, cj] = (cvals // q ** t) % q
                yield offset + c0, arr
        offset += block_total
        if offset >= stop:
            break


def enumerate_rref(field: Field, k: int, d: int, start: int = 0,
                   stop: int | None = None) -> Iterator[Matrix]:
    """Every rank-k RREF matrix with k rows and d columns, exactly once.

    Deterministic order (see :func:`rref_blocks`); the total count equals
    gaussian_binomial(d, k, q).  ``start``/``stop`` select a sub-range of
    the enumeration so independent workers can scan disjoint pieces.
    """
    for _, block in rref_blocks(field.order, k, d, start, stop):
        for row in block:
            yield Matrix(field, row)
