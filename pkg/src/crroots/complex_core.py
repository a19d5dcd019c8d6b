"""Weighted complex bilinear inner products and 2x2 complex orthogonal eliminators.

The inner product used throughout is the *bilinear* one,

    [u, v]_w = sum_j w_j u_j v_j        (no conjugation anywhere),

with complex weights w.  It admits nonzero vectors of zero norm (isotropic
vectors, e.g. (1, i) with unit weights); callers must treat a vanishing norm
as a breakdown, not an error of this module.

Summation is strict left-to-right.  No pairwise or compensated summation is
used; vector lengths here are at most a few hundred, where the plain loop is
both accurate enough and bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DimensionMismatch, IsotropicVector

# Unit roundoff of IEEE double precision.
U = 2.0 ** -53


@njit(cache=True)
def _ip(u, v, w):
    acc = 0.0 + 0.0j
    for j in range(u.shape[0]):
        # w*(u*v) grouping keeps the result bit-identical under u<->v swap
        acc += w[j] * (u[j] * v[j])
    return acc


def _as_cvec(x, name):
    a = np.ascontiguousarray(x, dtype=np.complex128)
    if a.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional")
    return a


def inner_product(u, v, w):
    """Bilinear inner product [u, v]_w = sum_j w_j u_j v_j.

    Symmetric in u and v; bit-identical under swapping them.  Raises
    DimensionMismatch when the lengths disagree.
    """
    uu = _as_cvec(u, "u")
    vv = _as_cvec(v, "v")
    ww = _as_cvec(w, "w")
    if not (uu.shape[0] == vv.shape[0] == ww.shape[0]):
        raise DimensionMismatch(
            f"length mismatch: u has {uu.shape[0]}, v has {vv.shape[0]}, w has {ww.shape[0]}"
        )
    return complex(_ip(uu, vv, ww))


def complex_norm(u, w):
    """Complex norm [u]_w = sqrt([u, u]_w), principal branch.

    May legitimately return 0 (or a value tiny relative to ``u``) for a
    nonzero isotropic vector; callers test for breakdown.  Downstream results
    do not depend on the branch; the principal branch is fixed for
    determinism.
    """
    return complex(np.sqrt(complex(inner_product(u, u, w))))


@dataclass(frozen=True)
class Rotation:
    """2x2 complex orthogonal transform [[c, -s], [s, c]] with c^2 + s^2 = 1.

    Entries can be arbitrarily large; ``size`` = sqrt(|c|^2 + |s|^2) measures
    how far the transform is from a unitary rotation (size 1).
    """

    c: complex
    s: complex

    @property
    def size(self):
        return float(np.hypot(abs(self.c), abs(self.s)))


IDENTITY_ROTATION = Rotation(1.0 + 0.0j, 0.0 + 0.0j)


def make_rotation(x1, x2):
    """Eliminator for the first component of (x1, x2).

    Returns the Rotation with c = x2/r, s = x1/r, r = sqrt(x1^2 + x2^2)
    (principal branch), which maps (x1, x2) to (0, r).  The zero vector maps
    to the identity by convention.

    Raises IsotropicVector when x1^2 + x2^2 vanishes relative to
    |x1|^2 + |x2|^2 (a nonzero isotropic direction, e.g. (1, i)); QR callers
    surface this as a breakdown.
    """
    x1 = complex(x1)
    x2 = complex(x2)
    if x1 == 0.0 and x2 == 0.0:
        return IDENTITY_ROTATION
    t = x1 * x1 + x2 * x2
    scale = abs(x1) ** 2 + abs(x2) ** 2
    if abs(t) <= U * U * scale:
        raise IsotropicVector(f"direction ({x1}, {x2}) has zero bilinear norm")
    r = np.sqrt(complex(t))
    return Rotation(complex(x2 / r), complex(x1 / r))


def apply_rotation(rot, a, b):
    """Apply [[c, -s], [s, c]] to the pair (a, b)."""
    return (rot.c * a - rot.s * b, rot.s * a + rot.c * b)


def stable_norm(x, axis=None):
    """Euclidean norm that survives entries near the overflow threshold."""
    a = np.abs(np.asarray(x))
    peak = a.max(axis=axis, keepdims=axis is not None)
    safe = np.where(peak > 0.0, peak, 1.0)
    out = safe * np.sqrt(((a / safe) ** 2).sum(axis=axis, keepdims=axis is not None))
    if axis is None:
        return float(out)
    return np.squeeze(out, axis=axis)
