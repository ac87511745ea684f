"""Exact arithmetic in the two-level field tower F_p <= F_q <= F_(q^l).

Elements are plain integer codes.  A code is the value of the element's
polynomial coefficient vector read as a digit string: base-field codes are
base-p digit strings over F_p, top-field codes are base-q digit strings
whose digits are base-field codes.  The least significant digit is always
the constant coefficient.  Under this encoding 0 and 1 are the additive
and multiplicative identities at every level, and the embedded copy of
F_q inside F_(q^l) is exactly the set of codes below q (the constant
polynomials), so base codes are valid top codes as they stand.

The tower carries the three maps that turn F_(q^l)-linear objects into
F_q-linear ones: the q-power Frobenius, the norm down to F_q, and field
reduction (coordinates in the power basis 1, z, ..., z^(l-1) of the
extension generator z).

Defaults are deterministic: when a defining polynomial is omitted, the
lexicographically smallest monic irreducible of the required degree is
selected, with coefficient tuples ordered low-degree-first.  Everything
here targets desk-scale fields (q^l up to a few thousand); there are no
large-field shortcuts on purpose.

Fields and towers are immutable after construction; the operation tables
are filled in lazily but idempotently, so instances can be shared across
concurrent workers.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DegreeMismatch,
    DivisionByZero,
    InternalInconsistency,
    LevelMismatch,
    NonPrime,
    ReduciblePolynomial,
)

# Dense q x q multiplication tables are only built below this order; the
# inverse table is cheap (length q) and gets a higher cap.
_MUL_TABLE_CAP = 1024
_INV_TABLE_CAP = 65536


def is_prime(n: int) -> bool:
    """Trial-division primality test; fine for desk-scale moduli."""
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return (p, e) with n = p**e and p prime, or None."""
    if n < 2:
        return None
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            return (d, e) if n == 1 else None
        d += 1
    return (n, 1)


# ---------------------------------------------------------------------------
# polynomial helpers (coefficients low-degree-first, as field codes)


def _poly_trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mod(field: "Field", a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Remainder of a modulo b over the given field; b must be nonzero."""
    r = list(a)
    _poly_trim(r)
    db = len(b) - 1
    lead_inv = field.inv(b[-1])
    while len(r) - 1 >= db and r:
        shift = len(r) - 1 - db
        factor = field.mul(r[-1], lead_inv)
        for i, bc in enumerate(b):
            r[shift + i] = field.sub(r[shift + i], field.mul(factor, bc))
        _poly_trim(r)
    return r


def poly_is_irreducible(field: "Field", poly: Sequence[int]) -> bool:
    """Exhaustively test a monic polynomial for irreducibility.

    Divides by every monic polynomial of degree up to deg/2.  Quadratic in
    the number of low-degree candidates, which is fine at desk scale.
    """
    d = len(poly) - 1
    if d < 1:
        return False
    for e in range(1, d // 2 + 1):
        for coeffs in itertools.product(range(field.order), repeat=e):
            g = (*coeffs, 1)
            if not _poly_mod(field, poly, g):
                return False
    return True


def smallest_irreducible(field: "Field", degree: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of the given degree."""
    for coeffs in itertools.product(range(field.order), repeat=degree):
        poly = (*coeffs, 1)
        if poly_is_irreducible(field, poly):
            return poly
    raise InternalInconsistency(
        f"no irreducible of degree {degree} over order {field.order}")


# ---------------------------------------------------------------------------


class Field:
    """A finite field operating on integer element codes.

    Either a prime field F_p or an extension of another :class:`Field` by a
    monic irreducible polynomial.  Scalar operations take and return codes;
    the ``arr_*`` family operates elementwise on numpy arrays of codes and
    is what the linear algebra layer runs on.
    """

    __slots__ = ("p", "subfield", "poly", "deg", "order",
                 "_zpow", "_mul_table", "_inv_table")

    def __init__(self, subfield: "Field | None", poly: tuple[int, ...] | None,
                 p: int | None = None):
        if subfield is None:
            self.p = int(p)
            self.subfield = None
            self.poly = None
            self.deg = 1
            self.order = self.p
            self._zpow = None
        else:
            self.p = subfield.p
            self.subfield = subfield
            self.poly = tuple(poly)
            self.deg = len(self.poly) - 1
            self.order = subfield.order ** self.deg
            self._zpow = self._reduction_rows()
        self._mul_table = None
        self._inv_table = None

    @classmethod
    def prime(cls, p: int) -> "Field":
        if not is_prime(p):
            raise NonPrime(p)
        return cls(None, None, p=p)

    @classmethod
    def extension(cls, subfield: "Field", poly: Sequence[int],
                  which: str = "poly") -> "Field":
        poly = tuple(int(c) for c in poly)
        if len(poly) < 2:
            raise DegreeMismatch(f"{which} must have degree at least 1")
        if any(not 0 <= c < subfield.order for c in poly):
            raise LevelMismatch(f"{which} coefficients out of range")
        if poly[-1] != 1:
            raise DegreeMismatch(f"{which} must be monic")
        if not poly_is_irreducible(subfield, poly):
            raise ReduciblePolynomial(which, poly)
        return cls(subfield, poly)

    # -- encoding ----------------------------------------------------------

    def check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.order:
            raise LevelMismatch(
                f"code {a} out of range for field of order {self.order}")
        return a

    def decode(self, a: int) -> tuple[int, ...]:
        """Coefficient tuple (low degree first) of the element's polynomial."""
        a = self.check(a)
        if self.subfield is None:
            return (a,)
        s = self.subfield.order
        out = []
        for _ in range(self.deg):
            a, digit = divmod(a, s)
            out.append(digit)
        return tuple(out)

    def encode(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) != self.deg:
            raise DegreeMismatch(f"expected {self.deg} coefficients")
        if self.subfield is None:
            return self.check(coeffs[0])
        s = self.subfield.order
        a = 0
        for c in reversed(coeffs):
            self.subfield.check(c)
            a = a * s + int(c)
        return a

    def elements(self) -> range:
        return range(self.order)

    def units(self) -> range:
        return range(1, self.order)

    # -- scalar arithmetic ---------------------------------------------------

    def add(self, a: int, b: int) -> int:
        a, b = self.check(a), self.check(b)
        if self.subfield is None:
            return (a + b) % self.p
        sub = self.subfield
        return self.encode([sub.add(x, y)
                            for x, y in zip(self.decode(a), self.decode(b))])

    def neg(self, a: int) -> int:
        a = self.check(a)
        if self.subfield is None:
            return (-a) % self.p
        sub = self.subfield
        return self.encode([sub.neg(x) for x in self.decode(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        a, b = self.check(a), self.check(b)
        if self.subfield is None:
            return (a * b) % self.p
        if self._mul_table is not None:
            return int(self._mul_table[a, b])
        return self._mul_raw(a, b)

    def inv(self, a: int) -> int:
        a = self.check(a)
        if a == 0:
            raise DivisionByZero("zero has no multiplicative inverse")
        if self.subfield is None:
            return pow(a, self.p - 2, self.p)
        if self._inv_table is not None:
            return int(self._inv_table[a])
        return self.pow(a, self.order - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        """a**e for a nonnegative integer exponent."""
        a = self.check(a)
        e = int(e)
        if e < 0:
            raise ValueError("negative exponent; use inv() and pow()")
        if self.subfield is None:
            return pow(a, e, self.p)
        result = 1
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def _reduction_rows(self):
        # coefficient rows of x^j for j = deg .. 2*deg-2, reduced mod poly
        sub = self.subfield
        d = self.deg
        top = tuple(sub.neg(c) for c in self.poly[:d])
        rows = [top]
        for _ in range(d - 2):
            prev = rows[-1]
            overflow = prev[d - 1]
            shifted = (0,) + prev[:d - 1]
            rows.append(tuple(sub.add(s, sub.mul(overflow, t))
                              for s, t in zip(shifted, top)))
        return rows

    def _mul_raw(self, a: int, b: int) -> int:
        sub = self.subfield
        d = self.deg
        ca, cb = self.decode(a), self.decode(b)
        conv = [0] * (2 * d - 1)
        for i, x in enumerate(ca):
            if x == 0:
                continue
            for j, y in enumerate(cb):
                if y:
                    conv[i + j] = sub.add(conv[i + j], sub.mul(x, y))
        res = list(conv[:d])
        for j in range(d, 2 * d - 1):
            c = conv[j]
            if c == 0:
                continue
            row = self._zpow[j - d]
            for t in range(d):
                if row[t]:
                    res[t] = sub.add(res[t], sub.mul(c, row[t]))
        return self.encode(res)

    # -- vectorised arithmetic on numpy arrays of codes ----------------------

    def _ensure_tables(self) -> None:
        if self._inv_table is None and self.order <= _INV_TABLE_CAP:
            inv = np.zeros(self.order, dtype=np.int64)
            for a in range(1, self.order):
                inv[a] = self.inv(a) if self.subfield is None else self.pow(a, self.order - 2)
            self._inv_table = inv
        if (self._mul_table is None and self.subfield is not None
                and self.order <= _MUL_TABLE_CAP):
            tbl = np.zeros((self.order, self.order), dtype=np.int64)
            for a in range(1, self.order):
                for b in range(a, self.order):
                    v = self._mul_raw(a, b)
                    tbl[a, b] = v
                    tbl[b, a] = v
            self._mul_table = tbl

    def arr_add(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.subfield is None:
            return (x + y) % self.p
        s = self.subfield.order
        out = np.zeros(np.broadcast(x, y).shape, dtype=np.int64)
        for t in range(self.deg):
            st = s ** t
            out += self.subfield.arr_add((x // st) % s, (y // st) % s) * st
        return out

    def arr_neg(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if self.subfield is None:
            return (-x) % self.p
        s = self.subfield.order
        out = np.zeros(x.shape, dtype=np.int64)
        for t in range(self.deg):
            st = s ** t
            out += self.subfield.arr_neg((x // st) % s) * st
        return out

    def arr_sub(self, x, y) -> np.ndarray:
        if self.subfield is None:
            x = np.asarray(x, dtype=np.int64)
            y = np.asarray(y, dtype=np.int64)
            return (x - y) % self.p
        return self.arr_add(x, self.arr_neg(y))

    def arr_mul(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.subfield is None:
            return (x * y) % self.p
        self._ensure_tables()
        if self._mul_table is not None:
            return self._mul_table[x, y]
        return np.frompyfunc(self.mul, 2, 1)(x, y).astype(np.int64)

    def arr_inv(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if (x == 0).any():
            raise DivisionByZero("zero has no multiplicative inverse")
        self._ensure_tables()
        if self._inv_table is not None:
            return self._inv_table[x]
        return np.frompyfunc(self.inv, 1, 1)(x).astype(np.int64)

    def arr_sum(self, x, axis: int) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if self.subfield is None:
            return x.sum(axis=axis) % self.p
        s = self.subfield.order
        shape = list(x.shape)
        del shape[axis]
        out = np.zeros(shape, dtype=np.int64)
        for t in range(self.deg):
            st = s ** t
            out += self.subfield.arr_sum((x // st) % s, axis=axis) * st
        return out

    def matmul(self, a, b) -> np.ndarray:
        """Exact product of two 2-D code arrays over this field."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.subfield is None:
            return (a @ b) % self.p
        if a.shape[1] == 0:
            return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        prods = self.arr_mul(a[:, :, None], b[None, :, :])
        return self.arr_sum(prods, axis=1)

    # -- misc ----------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Field):
            return NotImplemented
        return (self.p == other.p and self.poly == other.poly
                and (self.subfield == other.subfield))

    def __hash__(self):
        return hash((self.p, self.poly, self.subfield))

    def __repr__(self):
        if self.subfield is None:
            return f"Field(p={self.p})"
        return f"Field(order={self.order}, poly={list(self.poly)})"


# ---------------------------------------------------------------------------


class FieldTower:
    """F_p <= F_q <= F_(q^l) with field-reduction coordinates.

    ``base`` is F_q (q = p^m) and ``top`` is F_(q^l); for l = 1 they are the
    same object.  The power basis used by :meth:`field_reduce` is
    1, z, ..., z^(l-1), where z is the class of the extension variable, so
    the code of z^t is q**t.
    """

    __slots__ = ("p", "m", "ell", "q", "top_order",
                 "base", "top", "base_poly", "ext_poly")

    def __init__(self, base: Field, ell: int, ext_poly: tuple[int, ...],
                 top: Field):
        self.base = base
        self.top = top
        self.ell = ell
        self.p = base.p
        self.m = base.deg if base.subfield is not None else 1
        self.q = base.order
        self.top_order = self.q ** ell
        self.base_poly = base.poly or ()
        self.ext_poly = tuple(ext_poly)
        if top.order != self.top_order:
            raise InternalInconsistency("tower levels disagree on order")

    # -- tower maps ----------------------------------------------------------

    def frobenius(self, x: int) -> int:
        """x**q, the generator of the Galois group of the top level."""
        return self.top.pow(x, self.q)

    def norm_to_base(self, x: int) -> int:
        """Product of the Galois conjugates of x, landing inside F_q."""
        e = (self.top_order - 1) // (self.q - 1)
        v = self.top.pow(x, e)
        if v >= self.q:
            raise InternalInconsistency("norm value escaped the base field")
        return v

    def field_reduce(self, x: int) -> tuple[int, ...]:
        """Coordinates of x in the basis 1, z, ..., z^(l-1) over F_q."""
        x = self.top.check(x)
        out = []
        for _ in range(self.ell):
            x, digit = divmod(x, self.q)
            out.append(digit)
        return tuple(out)

    def field_lift(self, coords: Sequence[int]) -> int:
        if len(coords) != self.ell:
            raise DegreeMismatch(f"expected {self.ell} coordinates")
        x = 0
        for c in reversed(coords):
            self.base.check(c)
            x = x * self.q + int(c)
        return x

    def embed(self, a: int) -> int:
        """The top-level code of a base element (identical integer)."""
        return self.base.check(a)

    def reduce_vector(self, xs: Sequence[int]) -> np.ndarray:
        """Concatenated field-reduction coordinates of a top-level vector."""
        out = np.empty(len(xs) * self.ell, dtype=np.int64)
        for k, x in enumerate(xs):
            out[k * self.ell:(k + 1) * self.ell] = self.field_reduce(x)
        return out

    def multiplication_matrix(self, a: int) -> np.ndarray:
        """Matrix over F_q of y -> a*y in field-reduction coordinates.

        Columns are the coordinates of a * z^t, so the matrix acts on
        coordinate column vectors.
        """
        a = self.top.check(a)
        cols = [self.field_reduce(self.top.mul(a, self.q ** t))
                for t in range(self.ell)]
        return np.array(cols, dtype=np.int64).T

    def frobenius_matrix(self) -> np.ndarray:
        """Matrix over F_q of y -> y**q in field-reduction coordinates."""
        cols = [self.field_reduce(self.frobenius(self.q ** t))
                for t in range(self.ell)]
        return np.array(cols, dtype=np.int64).T

    # -- persistence -----------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "ell": self.ell,
            "base_poly": list(self.base_poly),
            "ext_poly": list(self.ext_poly),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FieldTower":
        return build_tower(obj["p"], obj["m"], obj["ell"],
                           base_poly=obj.get("base_poly") or None,
                           ext_poly=obj.get("ext_poly") or None)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldTower):
            return NotImplemented
        return (self.p, self.m, self.ell, self.base_poly, self.ext_poly) == \
               (other.p, other.m, other.ell, other.base_poly, other.ext_poly)

    def __hash__(self):
        return hash((self.p, self.m, self.ell, self.base_poly, self.ext_poly))

    def __repr__(self):
        return f"FieldTower(p={self.p}, m={self.m}, ell={self.ell})"

    def top_elements(self) -> Iterator[int]:
        return iter(range(self.top_order))

    def top_units(self) -> Iterator[int]:
        return iter(range(1, self.top_order))


def build_tower(p: int, m: int, ell: int,
                base_poly: Sequence[int] | None = None,
                ext_poly: Sequence[int] | None = None) -> FieldTower:
    """Construct and validate the tower F_p <= F_(p^m) <= F_(p^(m*ell)).

    Omitted defining polynomials are filled in deterministically with the
    lexicographically smallest monic irreducible of the right degree.
    """
    if not is_prime(p):
        raise NonPrime(p)
    m = int(m)
    ell = int(ell)
    if m < 1:
        raise DegreeMismatch("base extension degree m must be at least 1")
    if ell < 1:
        raise DegreeMismatch("top extension degree ell must be at least 1")

    prime = Field.prime(p)
    if m == 1:
        if base_poly:
            raise DegreeMismatch("base_poly must be empty when m = 1")
        base = prime
    else:
        if base_poly is None:
            base_poly = smallest_irreducible(prime, m)
        if len(base_poly) != m + 1:
            raise DegreeMismatch(f"base_poly must have degree {m}")
        base = Field.extension(prime, base_poly, which="base_poly")

    if ext_poly is None:
        ext_poly = smallest_irreducible(base, ell)
    if len(ext_poly) != ell + 1:
        raise DegreeMismatch(f"ext_poly must have degree {ell}")
    if ell == 1:
        # degenerate top level: validate the polynomial, reuse the base field
        ext_poly = tuple(int(c) for c in ext_poly)
        if any(not 0 <= c < base.order for c in ext_poly):
            raise LevelMismatch("ext_poly coefficients out of range")
        if ext_poly[-1] != 1:
            raise DegreeMismatch("ext_poly must be monic")
        top = base
    else:
        top = Field.extension(base, ext_poly, which="ext_poly")
        ext_poly = top.poly
    return FieldTower(base, ell, ext_poly, top)
