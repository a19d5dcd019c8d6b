"""Randomly-weighted complex-orthonormal polynomial bases with three-term recurrences.

Construction runs the five-step complex orthogonalization

    v = Z q_j
    alpha_{j+1} = [q_j, v]_w
    v <- v - beta_j q_{j-1} - alpha_{j+1} q_j
    beta_{j+1} = [v]_w
    q_{j+1} = v / beta_{j+1}

on the diagonal matrix Z of boundary nodes, with the bilinear inner product
weighted by i.i.d. uniform [0, 1) random numbers.  Quadrature (Gaussian)
weights in place of random ones make the iteration break down on symmetric
shapes; random weights empirically keep the basis well conditioned, with
cond(G) growing roughly linearly in the order.

A full reorthogonalization pass against all previous vectors follows the
subtraction step on every iteration; a second pass runs only when residual
projections exceed 1e-13.  Column j of ``node_values`` holds P_j at the
boundary nodes; the recurrence extends the polynomials to the whole plane.
"""

import io
import json
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

from .complex_core import U
from .errors import BasisBreakdown, ConditioningError, DimensionMismatch
from .quadrature import BoundaryDiscretization, boundary_nodes

SQRT_U = np.sqrt(U)
REORTHO_TOL = 1e-13


def random_weights(m, seed):
    """Bilinear weights: m i.i.d. uniform [0, 1) draws from PCG64 seeded with ``seed``.

    The stream is ``np.random.default_rng(seed).random(m)``; this exact
    generator and call order are part of the reproducibility contract.
    """
    return np.random.default_rng(int(seed)).random(int(m))


@dataclass(frozen=True)
class RecurrenceBasis:
    """Recurrence coefficients plus basis values at the construction nodes.

    alpha, beta : complex (n,) recurrence coefficients (alpha[j] = alpha_{j+1},
        beta[j] = beta_{j+1} in 1-based recurrence indexing)
    node_values : complex (m, n+1); column j holds P_j at the boundary nodes
    boundary : the construction (and evaluation) discretization
    w_rand : the bilinear weights used for construction
    """

    alpha: np.ndarray
    beta: np.ndarray
    node_values: np.ndarray
    boundary: BoundaryDiscretization
    w_rand: np.ndarray
    seed: int
    order: int


@njit(cache=True)
def _orthogonalize_kernel(z, w, n, q, alpha, beta):
    """Five-step iteration with reorthogonalization; left-to-right summations.

    Fills q (m, n+1), alpha (n,), beta (n,).  Returns 0 on success, the
    1-based index j of the vanishing coefficient beta_j on breakdown, or -1
    when the starting vector itself has (near-)zero complex norm.
    """
    m = z.shape[0]
    nrm2 = 0.0 + 0.0j
    for i in range(m):
        nrm2 += w[i]
    nrm = np.sqrt(nrm2)
    if abs(nrm) <= SQRT_U * np.sqrt(m):
        return -1  # [b]_w ~ 0: breakdown before the first vector
    q0 = 1.0 / nrm
    for i in range(m):
        q[i, 0] = q0

    v = np.empty(m, dtype=np.complex128)
    for j in range(n):
        a = 0.0 + 0.0j
        for i in range(m):
            v[i] = z[i] * q[i, j]
            a += w[i] * (q[i, j] * v[i])
        alpha[j] = a
        if j > 0:
            bj = beta[j - 1]
            for i in range(m):
                v[i] -= bj * q[i, j - 1] + a * q[i, j]
        else:
            for i in range(m):
                v[i] -= a * q[i, j]

        # mandatory reorthogonalization against all previous vectors
        for col in range(j, -1, -1):
            coef = 0.0 + 0.0j
            for i in range(m):
                coef += w[i] * (v[i] * q[i, col])
            for i in range(m):
                v[i] -= coef * q[i, col]
        # second pass only if residual projections remain above tolerance
        resid = 0.0
        for col in range(j + 1):
            coef = 0.0 + 0.0j
            for i in range(m):
                coef += w[i] * (v[i] * q[i, col])
            if abs(coef) > resid:
                resid = abs(coef)
        if resid > REORTHO_TOL:
            for col in range(j, -1, -1):
                coef = 0.0 + 0.0j
                for i in range(m):
                    coef += w[i] * (v[i] * q[i, col])
                for i in range(m):
                    v[i] -= coef * q[i, col]

        b2 = 0.0 + 0.0j
        vnorm2 = 0.0
        for i in range(m):
            b2 += w[i] * (v[i] * v[i])
            vnorm2 += v[i].real * v[i].real + v[i].imag * v[i].imag
        b = np.sqrt(b2)
        if abs(b) <= SQRT_U * np.sqrt(vnorm2):
            return j + 1
        beta[j] = b
        for i in range(m):
            q[i, j + 1] = v[i] / b
    return 0


def orthogonalize(boundary, n, seed, weights=None):
    """Build a RecurrenceBasis of order n on the given boundary.

    Requires n <= m - 1 (and k_per_edge >= n/2 is recommended for squares).
    ``weights`` overrides the random bilinear weights; passing smooth
    quadrature weights here reproduces the documented breakdown.

    Raises BasisBreakdown (carrying the failing index) when a complex norm
    vanishes; callers retry with a fresh seed.
    """
    m = boundary.m
    if n < 0:
        raise ValueError("order must be >= 0")
    if n > m - 1:
        raise DimensionMismatch(f"order {n} needs at least {n + 1} nodes, have {m}")
    w = random_weights(m, seed) if weights is None else np.asarray(weights, dtype=np.complex128)
    if w.shape[0] != m:
        raise DimensionMismatch("weights length must match node count")
    q = np.zeros((m, n + 1), dtype=np.complex128)
    alpha = np.zeros(n, dtype=np.complex128)
    beta = np.zeros(n, dtype=np.complex128)
    bad = _orthogonalize_kernel(
        np.ascontiguousarray(boundary.z, dtype=np.complex128),
        np.ascontiguousarray(w, dtype=np.complex128),
        n,
        q,
        alpha,
        beta,
    )
    if bad:
        raise BasisBreakdown(max(bad, 0))
    return RecurrenceBasis(
        alpha=alpha,
        beta=beta,
        node_values=q,
        boundary=boundary,
        w_rand=w,
        seed=int(seed),
        order=int(n),
    )


def evaluate_basis(basis, z, up_to=None):
    """Values P_0(z) ... P_{up_to}(z) by the forward recurrence.

    z may be a scalar or an ndarray; the result has the degree axis first.
    """
    if up_to is None:
        up_to = basis.order
    if up_to > basis.order:
        raise ValueError(f"up_to {up_to} exceeds basis order {basis.order}")
    zz = np.asarray(z, dtype=np.complex128)
    out = np.empty((up_to + 1,) + zz.shape, dtype=np.complex128)
    out[0] = basis.node_values[0, 0]
    if up_to >= 1:
        out[1] = (zz - basis.alpha[0]) * out[0] / basis.beta[0]
    for j in range(1, up_to):
        out[j + 1] = ((zz - basis.alpha[j]) * out[j] - basis.beta[j - 1] * out[j - 1]) / basis.beta[j]
    return out


@dataclass(frozen=True)
class BasisMatrix:
    """Quadrature-scaled basis matrix G with its reduced QR factorization.

    G[i, j] = sqrt(w_quad_i) * P_j(z_i), shape (m, order+1).  The same QR is
    used for every least-squares solve; the SVD alternative is equivalent and
    QR is fixed here for determinism.
    """

    G: np.ndarray
    qfac: np.ndarray
    rfac: np.ndarray
    order: int
    basis: RecurrenceBasis


def build_basis_matrix(basis, order=None):
    """Form G (optionally truncated to a lower expansion order) and factor it."""
    if order is None:
        order = basis.order
    if order > basis.order:
        raise ValueError(f"order {order} exceeds basis order {basis.order}")
    scale = np.sqrt(basis.boundary.w_quad)
    G = scale[:, None] * basis.node_values[:, : order + 1]
    qfac, rfac = np.linalg.qr(G, mode="reduced")
    return BasisMatrix(G=G, qfac=qfac, rfac=rfac, order=int(order), basis=basis)


def _check_rank(bm):
    rdiag = np.abs(np.diagonal(bm.rfac))
    if rdiag.size and rdiag.min() <= U * max(rdiag.max(), 1e-300) * bm.G.shape[0]:
        raise ConditioningError("basis matrix is numerically rank-deficient")


def least_squares_coeffs(bm, g):
    """Least-squares solution c of G c ~ g in the standard (conjugated) 2-norm."""
    gg = np.asarray(g, dtype=np.complex128)
    if gg.shape != (bm.G.shape[0],):
        raise DimensionMismatch(f"g must have length {bm.G.shape[0]}")
    _check_rank(bm)
    return solve_triangular(bm.rfac, bm.qfac.conj().T @ gg)


def least_squares_coeffs_many(bm, g_cols):
    """Batched least squares: g_cols is (m, nrhs); returns (order+1, nrhs)."""
    _check_rank(bm)
    return solve_triangular(bm.rfac, bm.qfac.conj().T @ g_cols)


def condition_number(bm):
    """cond_2(G) = sigma_max / sigma_min, by full SVD (independent of the QR)."""
    s = np.linalg.svd(bm.G, compute_uv=False)
    if s[-1] <= U * s[0]:
        return np.inf
    return float(s[0] / s[-1])


# ---------------------------------------------------------------------------
# basis cache file (CRBASIS v1)
#
# Layout: the ASCII line "CRBASIS v1\n", one JSON header line, then the raw
# array payload.  Complex numbers are (re, im) pairs of little-endian float64
# ("<c16"); real arrays are little-endian float64 ("<f8"); all buffers are
# C-ordered and concatenated in the order listed in the header.  The random
# bilinear weights are not stored: they are regenerated from the seed.
# ---------------------------------------------------------------------------

MAGIC = b"CRBASIS v1\n"


def _shape_descriptor(boundary):
    verts = [[float(v.real), float(v.imag)] for v in boundary.vertices]
    k = boundary.m // max(len(verts), 1) if verts else boundary.m
    return {"kind": boundary.shape, "spacing": boundary.spacing, "k_per_edge": k, "vertices": verts}


def save_basis(path, basis, bm=None):
    """Write a CRBASIS v1 cache file; byte-identical for identical inputs."""
    if bm is None:
        bm = build_basis_matrix(basis)
    m = basis.boundary.m
    n = basis.order
    arrays = [
        ("w_quad", "<f8", basis.boundary.w_quad),
        ("z", "<c16", basis.boundary.z),
        ("alpha", "<c16", basis.alpha),
        ("beta", "<c16", basis.beta),
        ("node_values", "<c16", basis.node_values),
        ("qfac", "<c16", bm.qfac),
        ("rfac", "<c16", bm.rfac),
    ]
    header = {
        "version": 1,
        "shape": _shape_descriptor(basis.boundary),
        "seed": basis.seed,
        "m": m,
        "n": n,
        "arrays": [[name, dtype, list(arr.shape)] for name, dtype, arr in arrays],
    }
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
    for _, dtype, arr in arrays:
        buf.write(np.ascontiguousarray(arr).astype(dtype).tobytes())
    data = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load_basis(path):
    """Read a CRBASIS v1 file; returns (RecurrenceBasis, BasisMatrix)."""
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != MAGIC:
            raise ValueError(f"not a CRBASIS v1 file: {path}")
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    if header.get("version") != 1:
        raise ValueError(f"unsupported CRBASIS version {header.get('version')}")
    arrays = {}
    offset = 0
    for name, dtype, shape in header["arrays"]:
        count = int(np.prod(shape))
        width = np.dtype(dtype).itemsize
        arrays[name] = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(shape)
        offset += count * width
    desc = header["shape"]
    verts = np.array([complex(re, im) for re, im in desc["vertices"]], dtype=np.complex128)
    boundary = BoundaryDiscretization(
        z=arrays["z"].astype(np.complex128),
        w_quad=arrays["w_quad"].astype(np.float64),
        shape=desc["kind"],
        spacing=desc["spacing"],
        vertices=verts,
    )
    m, n = header["m"], header["n"]
    basis = RecurrenceBasis(
        alpha=arrays["alpha"].astype(np.complex128),
        beta=arrays["beta"].astype(np.complex128),
        node_values=arrays["node_values"].astype(np.complex128),
        boundary=boundary,
        w_rand=random_weights(m, header["seed"]),
        seed=int(header["seed"]),
        order=int(n),
    )
    scale = np.sqrt(boundary.w_quad)
    G = scale[:, None] * basis.node_values
    bm = BasisMatrix(
        G=G,
        qfac=arrays["qfac"].astype(np.complex128),
        rfac=arrays["rfac"].astype(np.complex128),
        order=int(n),
        basis=basis,
    )
    return basis, bm


class BasisProvider:
    """Build-and-cache square bases; retries fresh seeds on breakdown.

    Bases live on the canonical square with k_per_edge = max(60, ceil(n/2))
    Gaussian nodes per side (60 matches the reference experimental setup for
    orders up to 100).  Requested expansion orders are served from the
    smallest cached basis bucket that covers them.
    """

    BUCKETS = (100, 200)
    RETRIES = 3

    def __init__(self, seed, max_order=200):
        self.seed = int(seed)
        self.max_order = int(max_order)
        self._bases = {}
        self._matrices = {}

    def _bucket(self, order):
        for b in self.BUCKETS:
            if order <= b:
                return b
        return order  # explicit orders beyond the ladder get exact-size bases

    def basis_for(self, order, variant=0):
        bucket = self._bucket(order)
        key = (bucket, variant)
        if key not in self._bases:
            k = max(60, -(-bucket // 2))
            boundary = boundary_nodes("square", k, "gauss")
            base_seed = self.seed + 7919 * variant
            last = None
            for attempt in range(self.RETRIES):
                try:
                    self._bases[key] = orthogonalize(boundary, bucket, base_seed + attempt)
                    break
                except BasisBreakdown as exc:  # pragma: no cover - random weights
                    last = exc
            else:
                raise last
        return self._bases[key]

    def get(self, order, variant=0):
        """(RecurrenceBasis, BasisMatrix) serving expansion order ``order``."""
        basis = self.basis_for(order, variant)
        key = (basis.order, variant, order)
        if key not in self._matrices:
            self._matrices[key] = build_basis_matrix(basis, order)
        return basis, self._matrices[key]
