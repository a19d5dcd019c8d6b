"""crroots: all roots of a complex analytic function inside a square.

Pipeline: a randomly-weighted complex-orthogonal polynomial basis with a
three-term recurrence is precomputed on the canonical square; a function is
expanded in it by boundary least squares; the expansion's generalized
colleague matrix is diagonalized by a structured complex-orthogonal shifted
QR in O(n^2); adaptive subdivision covers functions a single expansion
cannot resolve.
"""

from .basis import (
    BasisMatrix,
    BasisProvider,
    RecurrenceBasis,
    build_basis_matrix,
    condition_number,
    evaluate_basis,
    least_squares_coeffs,
    load_basis,
    orthogonalize,
    random_weights,
    save_basis,
)
from .colleague import ColleagueGenerators, colleague_from_coeffs, materialize_dense
from .complex_core import (
    Rotation,
    U,
    apply_rotation,
    complex_norm,
    inner_product,
    make_rotation,
)
from .errors import (
    BasisBreakdown,
    ContourError,
    CrrootsError,
    DegenerateLeadingCoefficient,
    DimensionMismatch,
    EvaluationError,
    ExpansionNotConverged,
    ExprSyntaxError,
    IsotropicVector,
    MaxDepthExceeded,
    NonConvergence,
    OracleError,
    QrBreakdown,
    UnknownIdentifier,
)
from .frontend import CATALOG, Dual, analytic_fn, eval_dual, parse_expression, pretty
from .oracle import argument_principle_count, dense_eigenvalues, evaluate_expansion, pair_values
from .quadrature import BoundaryDiscretization, boundary_nodes, gauss_legendre, square_boundary
from .rootfind import (
    AnalyticFn,
    RootfindOptions,
    RootReport,
    SquareDomain,
    dedup_roots,
    expand_on_square,
    newton_refine,
    roots_adaptive,
    roots_nonadaptive,
)
from .structured_qr import QrDiagnostics, eliminate_superdiagonal, qr_eigenvalues, rotate_back

__version__ = "0.1.0"
