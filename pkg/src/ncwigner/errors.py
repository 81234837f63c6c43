"""Exception hierarchy shared by every module.

Errors split into two families. ``PreconditionError`` subclasses signal bad
input (a violated inequality, a malformed matrix) and map to CLI exit code 2.
``InternalInconsistency`` signals that two verdicts computed by the library
disagree, which maps to exit code 3.
"""

from __future__ import annotations


class NcwError(Exception):
    """Base class for all library errors."""


class PreconditionError(NcwError):
    """Input violates a documented precondition or side condition."""


class DegenerateForm(PreconditionError):
    """The deformation parameters give a degenerate extended form."""


class OddDimension(PreconditionError):
    pass


class NotAntisymmetric(PreconditionError):
    pass


class NotSymplectic(PreconditionError):
    pass


class DarbouxMismatch(PreconditionError):
    pass


class SingularMatrix(PreconditionError):
    pass


class NotIntegrable(PreconditionError):
    """Real part of the quadratic form is not positive definite."""


class DegreeOverflow(PreconditionError):
    pass


class GridMismatch(PreconditionError):
    pass


class DegenerateKernel(PreconditionError):
    pass


class NotGaussian(PreconditionError):
    pass


class NotNormalized(PreconditionError):
    pass


class SideConditionViolated(PreconditionError):
    """A constructor side condition failed; the message names the inequality."""


class WeightError(PreconditionError):
    pass


class NotHermitian(PreconditionError):
    pass


class NotSPD(PreconditionError):
    pass


class InternalInconsistency(NcwError):
    """Two independently computed verdicts contradict each other."""
