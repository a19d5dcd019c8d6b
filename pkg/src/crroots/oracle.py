"""Independent verification machinery: dense eigenvalues, winding counts, expansion values.

Everything here deliberately avoids the structured code paths it checks.
The dense eigensolver goes through LAPACK's unsymmetric solver (Hessenberg
reduction plus shifted QR with unitary transforms), which shares nothing
with the complex-orthogonal generator QR; the argument-principle counter
integrates f'/f around the square with plain Gauss-Legendre panels.
"""

import numpy as np

from .basis import evaluate_basis
from .errors import ContourError, OracleError
from .quadrature import gauss_legendre

ORACLE_MAX_N = 64


def dense_eigenvalues(M):
    """All eigenvalues of a small dense complex matrix (oracle scale, n <= 64)."""
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise OracleError("matrix must be square")
    if A.shape[0] > ORACLE_MAX_N:
        raise OracleError(f"oracle is capped at n = {ORACLE_MAX_N}")
    if not np.isfinite(A).all():
        raise OracleError("matrix has non-finite entries")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"dense eigensolver did not converge: {exc}") from exc


def pair_values(found, expected):
    """Greedy nearest-neighbor pairing of two equal-length complex multisets.

    Returns (found_reordered, diffs) with found_reordered[j] matched to
    expected[j].  Greedy matching picks the globally closest unmatched pair
    repeatedly; adequate at oracle scale.
    """
    a = np.asarray(found, dtype=np.complex128)
    b = np.asarray(expected, dtype=np.complex128)
    if a.shape != b.shape:
        raise OracleError("multisets must have equal size")
    n = a.shape[0]
    dist = np.abs(a[:, None] - b[None, :])
    big = np.inf
    perm = np.empty(n, dtype=np.int64)
    for _ in range(n):
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        perm[j] = i
        dist[i, :] = big
        dist[:, j] = big
    reordered = a[perm]
    return reordered, np.abs(reordered - b)


def argument_principle_count(f, domain, points_per_edge=32, max_doublings=12):
    """Number of zeros (with multiplicity) of f inside the square.

    Integrates f'/f over the four edges with Gauss-Legendre panels, doubling
    points_per_edge until two successive counts agree and the pre-rounding
    value sits within 0.25 of an integer.  The caller must keep roots at
    least ~1e-8 * half_side away from the contour (nudge the square
    otherwise); a root on the boundary shows up as failure to stabilize.
    """
    z0 = domain.center
    l = domain.half_side
    corners = z0 + l * np.array([-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j])
    k = int(points_per_edge)
    prev = None
    for _ in range(max_doublings + 1):
        t, wt = gauss_legendre(k)
        total = 0.0 + 0.0j
        for e in range(4):
            a, b = corners[e], corners[(e + 1) % 4]
            half = (b - a) / 2.0
            pts = (a + b) / 2.0 + t * half
            v, dv = f.pair(pts)
            if not (np.isfinite(v).all() and np.isfinite(dv).all() and (v != 0).all()):
                raise ContourError("pole or zero of f on the contour")
            total += half * np.sum(wt * (dv / v))
        val = total / (2j * np.pi)
        count = int(np.round(val.real))
        settled = abs(val - count) <= 0.25
        if settled and prev == count:
            return count
        prev = count if settled else None
        k *= 2
    raise ContourError(
        f"winding count failed to stabilize after {max_doublings} doublings "
        "(a root may lie on or very near the boundary)"
    )


def evaluate_expansion(basis, c, z):
    """p(z) = sum_j c_j P_j(z) by the forward recurrence."""
    cc = np.asarray(c, dtype=np.complex128)
    vals = evaluate_basis(basis, z, up_to=cc.shape[0] - 1)
    return np.tensordot(cc, vals, axes=(0, 0))
