"""Exception types shared across the package.

Each error maps to a distinct CLI exit code (see cli.EXIT_CODES).
"""


class CrrootsError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CrrootsError, ValueError):
    """Vector lengths disagree."""


class IsotropicVector(CrrootsError, ArithmeticError):
    """Nonzero vector with (numerically) zero bilinear norm; no eliminator exists."""


class GeometryError(CrrootsError, ValueError):
    """Degenerate boundary geometry (repeated vertices, bad shape tag)."""


class BasisBreakdown(CrrootsError, ArithmeticError):
    """Complex orthogonalization hit a (near-)zero complex norm.

    Attributes
    ----------
    index : int
        Index j of the vanishing recurrence coefficient beta_j.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"orthogonalization breakdown: |beta_{index}| ~ 0")


class DegenerateLeadingCoefficient(CrrootsError, ValueError):
    """All expansion coefficients vanish; no colleague matrix exists."""


class ConditioningError(CrrootsError, ArithmeticError):
    """Rank-deficient or numerically singular least-squares factorization."""


class QrBreakdown(CrrootsError, ArithmeticError):
    """Structured QR met an isotropic rotation direction.

    Attributes
    ----------
    index : int
        Window position (1-based, counted from the window head) where the
        eliminator was undefined.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"isotropic rotation inside QR at window position {index}")


class NonConvergence(CrrootsError, ArithmeticError):
    """Shifted QR exceeded the per-eigenvalue iteration cap.

    Attributes
    ----------
    index : int
        0-based index of the eigenvalue that failed to deflate.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"QR iteration cap exceeded for eigenvalue {index}")


class ExpansionNotConverged(CrrootsError, ArithmeticError):
    """Expansion error stayed above eps_exp up to the maximum order.

    Attributes
    ----------
    order : int
        Last order tried.
    error : float
        Last relative tail estimate |c_n|/||c||.
    """

    def __init__(self, order, error, message=None):
        self.order = order
        self.error = error
        super().__init__(
            message
            or f"expansion not converged at order {order} (|c_n|/||c|| = {error:.3e}); "
            "switch to adaptive mode"
        )


class MaxDepthExceeded(CrrootsError, ArithmeticError):
    """Adaptive subdivision hit the depth cap on some squares.

    Attributes
    ----------
    squares : list
        (square_id, center, half_side) of each offending square.
    """

    def __init__(self, squares, message=None):
        self.squares = squares
        centers = ", ".join(f"#{sid} at {c}" for sid, c, _ in squares[:5])
        more = "" if len(squares) <= 5 else f" (+{len(squares) - 5} more)"
        super().__init__(
            message or f"subdivision depth cap reached on {len(squares)} square(s): {centers}{more}"
        )


class EvaluationError(CrrootsError, ArithmeticError):
    """Function evaluation produced a non-finite value.

    Attributes
    ----------
    where : complex
        Point at which the evaluation failed.
    index : int or None
        Boundary-node index, when the failure occurred during sampling.
    """

    def __init__(self, where, index=None, message=None):
        self.where = where
        self.index = index
        at = f" (node {index})" if index is not None else ""
        super().__init__(message or f"non-finite function value at z = {where}{at}")


class ContourError(CrrootsError, ArithmeticError):
    """Argument-principle count failed to stabilize (root on or near the contour)."""


class ExprSyntaxError(CrrootsError, ValueError):
    """Expression text failed to parse.

    Attributes
    ----------
    offset : int
        Byte offset of the offending token.
    expected : tuple of str
        Token classes that would have been accepted.
    """

    def __init__(self, offset, expected, message=None):
        self.offset = offset
        self.expected = tuple(expected)
        super().__init__(
            message or f"syntax error at offset {offset}; expected one of: {', '.join(self.expected)}"
        )


class UnknownIdentifier(CrrootsError, ValueError):
    """Expression used a name that is not a variable, constant, or function."""

    def __init__(self, name, offset, message=None):
        self.name = name
        self.offset = offset
        super().__init__(message or f"unknown identifier {name!r} at offset {offset}")


class OracleError(CrrootsError, ArithmeticError):
    """A verification oracle could not produce a trustworthy answer."""
