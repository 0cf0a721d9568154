"""Exception hierarchy.

Every failure raised by the library derives from :class:`DimDropError`, so
callers (the CLI in particular) can separate numerical/invariant failures from
programming errors.
"""


class DimDropError(Exception):
    """Base class for all library errors."""


class ConfigError(DimDropError, ValueError):
    pass


class NotUnitary(DimDropError):
    def __init__(self, defect, tol):
        super().__init__(f"unitarity defect {defect:.3e} exceeds tol {tol:.1e}")
        self.defect = defect
        self.tol = tol


class BranchFailure(DimDropError):
    """An eigen-phase sits within the branch margin of -1."""

    def __init__(self, distance, margin):
        super().__init__(f"eigen-phase within {distance:.3e} of pi (margin {margin:.1e})")
        self.distance = distance
        self.margin = margin


class DimensionMismatch(DimDropError, ValueError):
    pass


class SizeMismatch(DimensionMismatch):
    pass


class BoundaryViolation(DimDropError):
    def __init__(self, endpoint, defect):
        super().__init__(f"boundary condition violated at t={endpoint} (defect {defect:.3e})")
        self.endpoint = endpoint
        self.defect = defect


class GlueMismatch(DimDropError):
    def __init__(self, defect):
        super().__init__(f"glue fibers disagree (defect {defect:.3e})")
        self.defect = defect


class UnwrapFailure(DimDropError):
    """Eigen-phase tracking could not produce a continuous logarithm."""

    def __init__(self, message, index=None, jump=None):
        super().__init__(message)
        self.index = index
        self.jump = jump


class NotInHnj(DimDropError):
    pass


class NyquistViolation(DimDropError):
    def __init__(self, max_jump):
        super().__init__(f"adjacent determinant phase jump {max_jump:.3f} >= pi; refine the grid")
        self.max_jump = max_jump


class ClassMismatch(DimDropError):
    def __init__(self, left, right):
        super().__init__(f"K1 classes differ: {left} != {right}")
        self.left = left
        self.right = right


class RankJump(DimDropError):
    def __init__(self, ranks):
        super().__init__(f"fiber ranks disagree: {sorted(set(ranks))}")
        self.ranks = ranks


class NotCoprime(DimDropError, ValueError):
    def __init__(self, m, n):
        super().__init__(f"gcd({m}, {n}) != 1")
        self.m = m
        self.n = n


class NotCornerUnitary(DimDropError):
    pass


class NotFull(DimDropError):
    pass


class SubprojectionFailure(DimDropError):
    pass


class PreconditionViolation(DimDropError):
    def __init__(self, label, defect):
        super().__init__(f"precondition {label} fails (defect {defect:.3e})")
        self.label = label
        self.defect = defect


class StageError(DimDropError):
    """Wraps a failure inside a multi-stage pipeline with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
