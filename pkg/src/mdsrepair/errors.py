"""Exception hierarchy shared by all modules.

Every error raised on purpose by this package derives from
:class:`RepairToolError`, so callers (and the CLI) can classify failures
without string matching.
"""


class RepairToolError(Exception):
    """Base class for all package errors."""


class InternalInconsistency(RepairToolError):
    """A property that is mathematically guaranteed failed to verify.

    This always indicates a bug in the implementation, never bad input.
    """


# ---------------------------------------------------------------------------
# field tower construction and element arithmetic


class NonPrime(RepairToolError):
    def __init__(self, p):
        self.p = p
        super().__init__(f"{p} is not prime")


class ReduciblePolynomial(RepairToolError):
    def __init__(self, which, coeffs):
        self.which = which
        self.coeffs = tuple(coeffs)
        super().__init__(f"{which} {list(coeffs)} is reducible")


class DegreeMismatch(RepairToolError):
    pass


class LevelMismatch(RepairToolError):
    """An element code is out of range for the field it was used in."""


class DivisionByZero(RepairToolError, ZeroDivisionError):
    pass


# ---------------------------------------------------------------------------
# matrices and subspaces


class BadShape(RepairToolError):
    pass


class AmbientMismatch(RepairToolError):
    pass


class BadRank(RepairToolError):
    pass


# ---------------------------------------------------------------------------
# code skeletons and realizations


class WrongAmbient(RepairToolError):
    pass


class WrongNodeDim(RepairToolError):
    pass


class TooFewNodes(RepairToolError):
    pass


class PointOutsideNode(RepairToolError):
    pass


class DuplicatePoint(RepairToolError):
    pass


class NotSpanning(RepairToolError):
    pass


class NotMds(RepairToolError):
    def __init__(self, witness=None):
        self.witness = witness
        msg = "code skeleton is not MDS"
        if witness is not None:
            msg += f" (nodes {sorted(witness)} do not span)"
        super().__init__(msg)


class BadParameters(RepairToolError):
    pass


# ---------------------------------------------------------------------------
# repair schemes and brute force


class NotARepairMatrix(RepairToolError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"matrix does not repair node {node}: M*H_i is singular")


class BudgetExceeded(RepairToolError):
    def __init__(self, count):
        self.count = count
        super().__init__(f"enumeration of {count} candidates exceeds the budget; "
                         "pass an explicit index range or raise the budget")


# ---------------------------------------------------------------------------
# curve construction parameter gate


class EllTooSmall(RepairToolError):
    pass


class Nondivisible(RepairToolError):
    pass


class QuotientTooSmall(RepairToolError):
    pass


class RExceedsQ(RepairToolError):
    pass


class LengthOutOfRange(RepairToolError):
    def __init__(self, n, minimum, maximum):
        self.n = n
        self.minimum = minimum
        self.maximum = maximum
        super().__init__(f"length n={n} outside the constructible range "
                         f"[{minimum}, {maximum}]")


class ZeroB(RepairToolError):
    pass


# ---------------------------------------------------------------------------
# simulation and persistence


class NotACodeword(RepairToolError):
    pass


class MalformedInput(RepairToolError):
    """A persisted file failed structural validation on load."""
