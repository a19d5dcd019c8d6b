"""Gauss-Legendre rules and boundary discretizations of polygons and the circle.

The canonical square has vertices (-1-i, 1-i, 1+i, -1+i), traversed
counterclockwise.  Node ordering is fixed: edges in vertex order, and within
each edge ascending parameter t in [-1, 1].  This ordering is part of the
basis-cache file contract.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

SQUARE_VERTICES = np.array([-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j])

# The conditioning experiment's triangle and snake shapes are only drawn in
# the source material, never tabulated; these presets are approximate
# reconstructions at unit scale and are used for conditioning studies only.
TRIANGLE_VERTICES = np.array([-1.0 - 0.8j, 1.2 - 0.6j, 0.0 + 1.1j])
SNAKE_VERTICES = np.array(
    [
        -1.5 - 0.6j, -0.5 - 0.6j, -0.5 + 0.2j, 0.5 + 0.2j,
        0.5 - 0.6j, 1.5 - 0.6j, 1.5 + 0.6j, 0.1 + 0.6j,
        0.1 - 0.2j, -0.9 - 0.2j, -0.9 + 0.6j, -1.5 + 0.6j,
    ]
)

SHAPE_PRESETS = {
    "square": SQUARE_VERTICES,
    "triangle": TRIANGLE_VERTICES,
    "snake": SNAKE_VERTICES,
}


@dataclass(frozen=True)
class BoundaryDiscretization:
    """Nodes and quadrature weights on the boundary of one shape.

    z : complex nodes, length m, edge-by-edge in vertex order
    w_quad : real quadrature weights (parameter measure times edge Jacobian)
    shape : "square" | "polygon" | "circle"
    spacing : "gauss" | "equispaced"
    vertices : polygon vertices when applicable (empty for circle)
    """

    z: np.ndarray
    w_quad: np.ndarray
    shape: str
    spacing: str
    vertices: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.complex128))

    @property
    def m(self):
        return self.z.shape[0]


def gauss_legendre(k):
    """Nodes and weights of the k-point Legendre rule on [-1, 1], nodes ascending.

    Exact for polynomials of degree <= 2k-1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(int(k))
    return nodes, weights


def _polygon_nodes(vertices, k_per_edge, spacing):
    verts = np.asarray(vertices, dtype=np.complex128)
    if verts.shape[0] < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    closed = np.append(verts, verts[0])
    edges = closed[1:] - closed[:-1]
    if np.any(np.abs(edges) == 0.0):
        raise GeometryError("degenerate polygon: repeated vertices")

    if spacing == "gauss":
        t, wt = gauss_legendre(k_per_edge)
    elif spacing == "equispaced":
        # cell midpoints keep corners out of the node set
        t = -1.0 + 2.0 * (np.arange(k_per_edge) + 0.5) / k_per_edge
        wt = np.full(k_per_edge, 2.0 / k_per_edge)
    else:
        raise GeometryError(f"unknown spacing {spacing!r}")

    z = []
    w = []
    for a, e in zip(closed[:-1], edges):
        mid = a + e / 2.0
        half = e / 2.0
        z.append(mid + t * half)
        w.append(wt * np.abs(half))
    return np.concatenate(z), np.concatenate(w)


def boundary_nodes(shape, k_per_edge, spacing="gauss", vertices=None):
    """Discretize the boundary of a named shape or an explicit polygon.

    shape : "square" (canonical, center 0, side 2), "triangle"/"snake"
        (approximate presets), "polygon" (requires ``vertices``), or
        "circle" (unit circle; requires equispaced spacing, m = k_per_edge).
    k_per_edge : nodes per edge (total node count for the circle).
    spacing : "gauss" or "equispaced".

    Nodes are ordered edge-by-edge in vertex order, ascending parameter
    within each edge.  Quadrature weights carry the affine edge Jacobian
    (half the edge length), so per-edge weights sum to the edge length.
    """
    if k_per_edge < 1:
        raise ValueError("k_per_edge must be >= 1")
    if shape == "circle":
        if spacing != "equispaced":
            raise GeometryError("circle boundary requires equispaced spacing")
        m = int(k_per_edge)
        z = np.exp(2j * np.pi * np.arange(m) / m)
        w = np.full(m, 2.0 * np.pi / m)
        return BoundaryDiscretization(z=z, w_quad=w, shape="circle", spacing="equispaced")
    if shape == "polygon":
        if vertices is None:
            raise GeometryError("shape 'polygon' requires vertices")
        verts = np.asarray(vertices, dtype=np.complex128)
    elif shape in SHAPE_PRESETS:
        verts = SHAPE_PRESETS[shape]
    else:
        raise GeometryError(f"unknown shape {shape!r}")
    z, w = _polygon_nodes(verts, int(k_per_edge), spacing)
    tag = "square" if shape == "square" else "polygon"
    return BoundaryDiscretization(z=z, w_quad=w, shape=tag, spacing=spacing, vertices=verts)


def square_boundary(k_per_edge, spacing="gauss"):
    """Canonical square boundary; m = 4 * k_per_edge nodes."""
    return boundary_nodes("square", k_per_edge, spacing)
