"""Structured complex-orthogonal shifted QR on generator form, O(n^2) per matrix.

The working matrix C = A + p q^T (A complex symmetric tridiagonal, C lower
Hessenberg) is never formed: one iteration eliminates the superdiagonal with
a descending sweep of 2x2 complex orthogonal transforms, then rotates the
triangular result back to Hessenberg form with the same transforms applied
from the right, updating only the four generator vectors.

Two non-obvious pieces:

* the sub-subdiagonal entry needed while eliminating plane (k-1, k) is not
  stored; it is inferred as -qt_k * p_{k-2} from a running copy qt of q that
  is rotated along with the sweep;
* when the rank-one part dominates (|p_{k-1} q_k|^2 + |p_k q_k|^2 >
  |beta_{k-1}|^2 + |d_k|^2, tested on post-rotation values), the rotated
  p_{k-1} is replaced by -beta_{k-1}/q_k, which the exact identity
  beta_{k-1} + p_{k-1} q_k = 0 makes valid and which keeps rounding errors
  componentwise small even when ||q|| ~ 1/u.

The complex orthogonal transforms are not unitary, and no norm bound for
them exists; the largest observed transform size is recorded per run for
diagnostics.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .complex_core import U, Rotation
from .errors import NonConvergence, QrBreakdown

DEFAULT_ITER_CAP = 80
# deflation floor: smallest normal double * 1e4
DEFLATION_FLOOR = np.finfo(np.float64).tiny * 1e4

# stats slots
_ROT = 0
_MAXSZ = 1
_CORR = 2
_SIZEFILL = 3
_SWEEPS = 4
_MAXIT = 5
_NSTATS = 6

@njit(cache=True, nogil=True)
def _mag2(x):
    return x.real * x.real + x.imag * x.imag


@njit(cache=True, nogil=True)
def _mkrot(x1, x2):
    """(c, s, ok) eliminating x1 against x2; ok=False on an isotropic direction."""
    if x1 == 0.0 and x2 == 0.0:
        return 1.0 + 0.0j, 0.0 + 0.0j, True
    t = x1 * x1 + x2 * x2
    sc = _mag2(x1) + _mag2(x2)
    if sc < 1e150:
        # squared comparison avoids a hypot in the hot path
        if _mag2(t) <= (U * U) ** 2 * sc * sc:
            return 0.0j, 0.0j, False
    elif abs(t) <= U * U * sc:
        return 0.0j, 0.0j, False
    inv = 1.0 / np.sqrt(t)
    return x2 * inv, x1 * inv, True


@njit(cache=True, nogil=True)
def _eliminate(d, beta, gamma, p, q, qt, cs, stats, sizes, apply_correction):
    """Single elimination of the superdiagonal (descending sweep).

    In/out: d (w,), p (w,).  In: beta (w-1,) superdiagonal (destroyed), q
    (w,) read-only.  Out: gamma (w-1,) subdiagonal, qt (w,) scratch copy of
    q, cs (w-1, 2) the transforms, row j acting on plane (j, j+1).
    Returns 0 on success, or the 1-based window position k whose eliminator
    was isotropic.
    """
    w = d.shape[0]
    for i in range(w - 1):
        gamma[i] = beta[i]
    for i in range(w):
        qt[i] = q[i]
    for k in range(w - 1, 0, -1):
        c, s, ok = _mkrot(beta[k - 1] + p[k - 1] * q[k], d[k] + p[k] * q[k])
        if not ok:
            return k
        cs[k - 1, 0] = c
        cs[k - 1, 1] = s
        size2 = _mag2(c) + _mag2(s)
        stats[_ROT] += 1.0
        if size2 > stats[_MAXSZ]:
            stats[_MAXSZ] = size2
        if sizes.shape[0] > 0:
            idx = int(stats[_SIZEFILL])
            if idx < sizes.shape[0]:
                sizes[idx] = np.sqrt(size2)
                stats[_SIZEFILL] += 1.0
        if k >= 2:
            # second component is the inferred sub-subdiagonal -qt_k p_{k-2}
            gamma[k - 2] = c * gamma[k - 2] + s * (qt[k] * p[k - 2])
        a = d[k - 1]
        b = gamma[k - 1]
        d[k - 1] = c * a - s * b
        gamma[k - 1] = s * a + c * b
        a = beta[k - 1]
        b = d[k]
        beta[k - 1] = c * a - s * b
        d[k] = s * a + c * b
        a = p[k - 1]
        b = p[k]
        p[k - 1] = c * a - s * b
        p[k] = s * a + c * b
        if apply_correction and q[k] != 0.0:
            lhs = _mag2(p[k - 1] * q[k]) + _mag2(p[k] * q[k])
            rhs = _mag2(beta[k - 1]) + _mag2(d[k])
            if lhs > rhs:
                p[k - 1] = -beta[k - 1] / q[k]
                stats[_CORR] += 1.0
        a = qt[k - 1]
        b = qt[k]
        qt[k - 1] = c * a - s * b
        qt[k] = s * a + c * b
    return 0


@njit(cache=True, nogil=True)
def _rotate_back(cs, d, gamma, beta, p, q):
    """Rotate the triangular matrix back to Hessenberg form.

    In/out: d (w,), q (w,).  In: gamma (w-1,) from the eliminate pass, p
    (w,) = rotated p.  Out: beta (w-1,) new superdiagonal.
    """
    w = d.shape[0]
    for k in range(w - 1, 0, -1):
        c = cs[k - 1, 0]
        s = cs[k - 1, 1]
        a = d[k - 1]
        b = -p[k - 1] * q[k]
        d[k - 1] = c * a - s * b
        beta[k - 1] = s * a + c * b
        d[k] = s * gamma[k - 1] + c * d[k]
        a = q[k - 1]
        b = q[k]
        q[k - 1] = c * a - s * b
        q[k] = s * a + c * b


@njit(cache=True, nogil=True)
def _qr_shifted(d, beta, p, q, eps, cap, gamma, qt, cs, stats, sizes, apply_correction):
    """Explicit Wilkinson-shifted QR; leaves eigenvalues as d_i + p_i q_i.

    Returns 0 on success, a positive global row index on isotropic
    breakdown, or -(i+1) when eigenvalue i missed the iteration cap.
    """
    n = d.shape[0]
    for i in range(n - 1):
        mu_sum = 0.0 + 0.0j
        iters = 0
        while True:
            c11 = d[i] + p[i] * q[i]
            c12 = beta[i] + p[i] * q[i + 1]
            c22 = d[i + 1] + p[i + 1] * q[i + 1]
            tol = eps * (abs(c11) + abs(c22) + DEFLATION_FLOOR)
            if abs(c12) < tol:
                break
            if iters >= cap:
                return -(i + 1)
            c21 = beta[i] + p[i + 1] * q[i]
            tr = c11 + c22
            disc = np.sqrt((c11 - c22) * (c11 - c22) + 4.0 * (c12 * c21))
            mu1 = (tr + disc) / 2.0
            mu2 = (tr - disc) / 2.0
            d1 = abs(mu1 - c11)
            d2 = abs(mu2 - c11)
            if d1 < d2:
                mu = mu1
            elif d2 < d1:
                mu = mu2
            elif abs(mu1.imag) <= abs(mu2.imag):
                mu = mu1
            else:
                mu = mu2
            mu_sum += mu
            for t in range(i, n):
                d[t] -= mu
            st = _eliminate(
                d[i:], beta[i : n - 1], gamma[i : n - 1], p[i:], q[i:], qt[i:],
                cs[i : n - 1], stats, sizes, apply_correction,
            )
            if st != 0:
                return i + st
            _rotate_back(cs[i : n - 1], d[i:], gamma[i : n - 1], beta[i : n - 1], p[i:], q[i:])
            stats[_SWEEPS] += 1.0
            iters += 1
        if iters > stats[_MAXIT]:
            stats[_MAXIT] = iters
        for t in range(i, n):
            d[t] += mu_sum
    return 0


@dataclass
class QrDiagnostics:
    """Per-run counters: rotation count/size, corrections, sweeps, iterations."""

    rotations: int = 0
    max_rotation_size: float = 0.0
    corrections: int = 0
    sweeps: int = 0
    max_iterations: int = 0
    sizes: np.ndarray = None

    @classmethod
    def from_stats(cls, stats, sizes=None):
        rec = None
        if sizes is not None and sizes.shape[0] > 0:
            rec = sizes[: int(stats[_SIZEFILL])].copy()
        return cls(
            rotations=int(stats[_ROT]),
            # the kernel tracks the squared size
            max_rotation_size=float(np.sqrt(stats[_MAXSZ])),
            corrections=int(stats[_CORR]),
            sweeps=int(stats[_SWEEPS]),
            max_iterations=int(stats[_MAXIT]),
            sizes=rec,
        )

    def merge(self, other):
        self.rotations += other.rotations
        self.max_rotation_size = max(self.max_rotation_size, other.max_rotation_size)
        self.corrections += other.corrections
        self.sweeps += other.sweeps
        self.max_iterations = max(self.max_iterations, other.max_iterations)
        return self


def _cvec(x):
    return np.array(x, dtype=np.complex128).copy()


def eliminate_superdiagonal(d, sup, p, q, apply_correction=True):
    """One full elimination pass over a window (standalone surface for tests).

    Returns (rotations, d_out, gamma_out, p_out, qtilde); rotations[j] acts
    on plane (j, j+1).  Raises QrBreakdown on an isotropic direction.
    """
    d = _cvec(d)
    sup = _cvec(sup)
    p = _cvec(p)
    q = _cvec(q)
    w = d.shape[0]
    if w < 2:
        raise ValueError("window size must be >= 2")
    gamma = np.empty(w - 1, dtype=np.complex128)
    qt = np.empty(w, dtype=np.complex128)
    cs = np.empty((w - 1, 2), dtype=np.complex128)
    stats = np.zeros(_NSTATS, dtype=np.float64)
    st = _eliminate(d, sup, gamma, p, q, qt, cs, stats, np.empty(0, dtype=np.float64),
                    apply_correction)
    if st:
        raise QrBreakdown(st)
    rotations = [Rotation(complex(cs[j, 0]), complex(cs[j, 1])) for j in range(w - 1)]
    return rotations, d, gamma, p, qt


def rotate_back(rotations, d, gamma, p_under, q):
    """Apply the transposed sweep from the right (standalone surface for tests).

    Returns (d_out, beta_out, q_out) given the rotations and the (d, gamma)
    generators produced by the matching eliminate pass.
    """
    d = _cvec(d)
    gamma = _cvec(gamma)
    p_under = _cvec(p_under)
    q = _cvec(q)
    w = d.shape[0]
    cs = np.empty((w - 1, 2), dtype=np.complex128)
    for j, rot in enumerate(rotations):
        cs[j, 0] = rot.c
        cs[j, 1] = rot.s
    beta = np.empty(w - 1, dtype=np.complex128)
    _rotate_back(cs, d, gamma, beta, p_under, q)
    return d, beta, q


def qr_eigenvalues(gens, eps=1e-15, iter_cap=DEFAULT_ITER_CAP, apply_correction=True,
                   record_sizes=0):
    """All eigenvalues of the generator-form matrix by shifted QR.

    gens : ColleagueGenerators (or anything with d, sup, p, q arrays)
    eps : relative deflation tolerance for the superdiagonal entries
    record_sizes : when positive, keep up to this many rotation sizes in the
        diagnostics (for histogramming; counting is always on)

    Returns (eigenvalues, QrDiagnostics).  Raises QrBreakdown on an isotropic
    rotation direction and NonConvergence past the per-eigenvalue cap.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = _cvec(gens.d)
    n = d.shape[0]
    if n < 1:
        raise ValueError("matrix order must be >= 1")
    p = _cvec(gens.p)
    q = _cvec(gens.q)
    if n == 1:
        return d + p * q, QrDiagnostics()
    beta = _cvec(gens.sup)
    gamma = np.empty(n - 1, dtype=np.complex128)
    qt = np.empty(n, dtype=np.complex128)
    cs = np.empty((n - 1, 2), dtype=np.complex128)
    stats = np.zeros(_NSTATS, dtype=np.float64)
    sizes = np.empty(int(record_sizes) if record_sizes else 0, dtype=np.float64)
    st = _qr_shifted(d, beta, p, q, float(eps), int(iter_cap), gamma, qt, cs, stats, sizes,
                     apply_correction)
    if st > 0:
        raise QrBreakdown(st)
    if st < 0:
        raise NonConvergence(-st - 1)
    return d + p * q, QrDiagnostics.from_stats(stats, sizes)


@njit(cache=True, nogil=True)
def _batch_colleague_roots(alpha, beta, coeffs, eps, cap, delta, roots_out, counts_out,
                           kind_out, index_out, stats, qnorm_max):
    """Truncate + colleague + QR + in-square filter for a batch of coefficient rows.

    coeffs: (B, n+1).  roots_out: (B, n) padded; counts_out: (B,).
    kind_out: 0 ok, 1 constant expansion (no roots), 2 zero expansion,
    3 breakdown (index_out = row), 4 non-convergence (index_out = eig index).
    """
    nb, n1 = coeffs.shape
    n = n1 - 1
    d = np.empty(n, dtype=np.complex128)
    bet = np.empty(n, dtype=np.complex128)
    p = np.empty(n, dtype=np.complex128)
    qv = np.empty(n, dtype=np.complex128)
    gamma = np.empty(n, dtype=np.complex128)
    qt = np.empty(n, dtype=np.complex128)
    cs = np.empty((n, 2), dtype=np.complex128)
    sizes = np.empty(0, dtype=np.float64)
    for s in range(nb):
        counts_out[s] = 0
        kind_out[s] = 0
        index_out[s] = 0
        # scaled norm: coefficient magnitudes can reach ~1e180 and must not
        # overflow when squared
        peak = 0.0
        for j in range(n1):
            a = abs(coeffs[s, j])
            if a > peak:
                peak = a
        if peak == 0.0:
            kind_out[s] = 2
            continue
        acc = 0.0
        for j in range(n1):
            t = abs(coeffs[s, j]) / peak
            acc += t * t
        unrm = np.sqrt(acc)  # ||c|| / peak
        ne = n
        while ne >= 1 and abs(coeffs[s, ne]) / peak <= U * unrm:
            ne -= 1
        if ne == 0:
            kind_out[s] = 1
            continue
        cn = coeffs[s, ne]
        qn2 = 0.0
        for j in range(ne):
            d[j] = alpha[j]
            p[j] = 0.0
            qv[j] = -beta[ne - 1] * (coeffs[s, j] / cn)
            qn2 += qv[j].real ** 2 + qv[j].imag ** 2
        p[ne - 1] = 1.0
        if np.sqrt(qn2) > qnorm_max[0]:
            qnorm_max[0] = np.sqrt(qn2)
        for j in range(ne - 1):
            bet[j] = beta[j]
        if ne == 1:
            lam = d[0] + p[0] * qv[0]
            if abs(lam.real) < 1.0 + delta and abs(lam.imag) < 1.0 + delta:
                roots_out[s, 0] = lam
                counts_out[s] = 1
            continue
        st = _qr_shifted(d[:ne], bet[: ne - 1], p[:ne], qv[:ne], eps, cap,
                         gamma[: ne - 1], qt[:ne], cs[: ne - 1], stats, sizes, True)
        if st > 0:
            kind_out[s] = 3
            index_out[s] = st
            continue
        if st < 0:
            kind_out[s] = 4
            index_out[s] = -st - 1
            continue
        cnt = 0
        for t in range(ne):
            lam = d[t] + p[t] * qv[t]
            if abs(lam.real) < 1.0 + delta and abs(lam.imag) < 1.0 + delta:
                roots_out[s, cnt] = lam
                cnt += 1
        counts_out[s] = cnt
    return 0


def batch_colleague_roots(basis, coeffs, eps, delta, iter_cap=DEFAULT_ITER_CAP, threads=1):
    """Stage-2 pipeline over many coefficient rows sharing one basis.

    Returns (roots padded (B, n), counts (B,), kinds (B,), indices (B,),
    diagnostics, max ||q||).  kinds: see _batch_colleague_roots.  Rows are
    independent; ``threads`` splits them over nogil kernel calls with
    disjoint outputs, so results do not depend on the thread count.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    nb, n1 = coeffs.shape
    n = n1 - 1
    roots = np.zeros((nb, max(n, 1)), dtype=np.complex128)
    counts = np.zeros(nb, dtype=np.int64)
    kinds = np.zeros(nb, dtype=np.int64)
    indices = np.zeros(nb, dtype=np.int64)
    alpha = np.ascontiguousarray(basis.alpha, dtype=np.complex128)
    beta = np.ascontiguousarray(basis.beta, dtype=np.complex128)
    nchunks = max(1, min(int(threads), nb // 64)) if threads else 1
    bounds = np.linspace(0, nb, nchunks + 1).astype(np.int64)
    stats_all = np.zeros((nchunks, _NSTATS), dtype=np.float64)
    qmax_all = np.zeros((nchunks, 1), dtype=np.float64)

    def run(ci):
        lo, hi = bounds[ci], bounds[ci + 1]
        _batch_colleague_roots(
            alpha, beta, coeffs[lo:hi], float(eps), int(iter_cap), float(delta),
            roots[lo:hi], counts[lo:hi], kinds[lo:hi], indices[lo:hi],
            stats_all[ci], qmax_all[ci],
        )

    if nchunks == 1:
        run(0)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=nchunks) as pool:
            list(pool.map(run, range(nchunks)))
    stats = np.zeros(_NSTATS, dtype=np.float64)
    stats[_ROT] = stats_all[:, _ROT].sum()
    stats[_MAXSZ] = stats_all[:, _MAXSZ].max()
    stats[_CORR] = stats_all[:, _CORR].sum()
    stats[_SWEEPS] = stats_all[:, _SWEEPS].sum()
    stats[_MAXIT] = stats_all[:, _MAXIT].max()
    return roots, counts, kinds, indices, QrDiagnostics.from_stats(stats), float(qmax_all.max())
