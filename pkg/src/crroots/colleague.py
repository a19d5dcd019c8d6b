"""Generalized colleague matrices in generator form.

A polynomial sum_{j=0}^{n} c_j P_j in a three-term-recurrence basis has its
roots as the eigenvalues of C = A + e_n q^T, where A is the complex symmetric
tridiagonal matrix with diagonal alpha_1..alpha_n and off-diagonals
beta_1..beta_{n-1}, and q = -beta_n (c_0, ..., c_{n-1})^T / c_n.  Only the
four generator vectors are stored; ``materialize_dense`` exists for oracle
tests.
"""

from dataclasses import dataclass

import numpy as np

from .complex_core import U, stable_norm
from .errors import DegenerateLeadingCoefficient, DimensionMismatch


@dataclass(frozen=True)
class ColleagueGenerators:
    """d (diagonal), sup (super/subdiagonal), p, q of C = A + p q^T.

    A is complex symmetric tridiagonal; C is lower Hessenberg.  Fresh
    colleague matrices have p = e_n exactly; the structured QR evolves all
    four vectors.
    """

    d: np.ndarray
    sup: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def n(self):
        return self.d.shape[0]

    @property
    def q_norm(self):
        return float(np.linalg.norm(self.q))


def effective_order(c):
    """Largest index ne with |c_ne| > u * ||c||; 0 when only c_0 survives.

    Raises DegenerateLeadingCoefficient when every coefficient vanishes.
    """
    cc = np.asarray(c, dtype=np.complex128)
    nrm = stable_norm(cc)
    if nrm == 0.0:
        raise DegenerateLeadingCoefficient("all expansion coefficients are zero")
    ne = cc.shape[0] - 1
    while ne >= 1 and abs(cc[ne]) <= U * nrm:
        ne -= 1
    return ne


def colleague_from_coeffs(c, basis):
    """Generators of the colleague matrix for the expansion coefficients c.

    Trailing coefficients at or below u * ||c|| are dropped first (an exactly
    zero leading coefficient must never divide), so the matrix order is the
    effective order of the expansion.  Raises DegenerateLeadingCoefficient
    when the expansion is constant: a nonzero constant has no roots and no
    colleague matrix.
    """
    cc = np.asarray(c, dtype=np.complex128)
    ne = effective_order(cc)
    if ne == 0:
        raise DegenerateLeadingCoefficient("expansion has effective order 0 (constant)")
    if ne > basis.order:
        raise DimensionMismatch(f"expansion order {ne} exceeds basis order {basis.order}")
    d = basis.alpha[:ne].copy()
    sup = basis.beta[: ne - 1].copy()
    q = -basis.beta[ne - 1] * (cc[:ne] / cc[ne])
    p = np.zeros(ne, dtype=np.complex128)
    p[ne - 1] = 1.0
    return ColleagueGenerators(d=d, sup=sup, p=p, q=q)


def materialize_dense(g):
    """Dense C = A + p q^T from generators (oracle/test use only).

    A follows the five-case structure formula: -p_i q_j above the
    superdiagonal, the stored off-diagonals and diagonal in the tridiagonal
    band, and -q_i p_j below the subdiagonal (complex symmetry).
    """
    n = g.n
    A = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        A[i, i] = g.d[i]
        if i + 1 < n:
            A[i, i + 1] = g.sup[i]
            A[i + 1, i] = g.sup[i]
        for j in range(i + 2, n):
            A[i, j] = -g.p[i] * g.q[j]
            A[j, i] = -g.q[j] * g.p[i]
    return A + np.outer(g.p, g.q)
