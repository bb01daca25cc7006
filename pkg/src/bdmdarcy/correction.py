"""Transfer of boundary data between the mesh boundary and the physical
boundary.

For a boundary edge e with owning triangle K, every quadrature node x on e
carries the projection distance delta, the unit direction nu toward the
physical boundary, the pulled-back outward normal n_gamma, and the straight
outward normal n_h of e.  A field defined on K is extended toward the
physical boundary by the truncated Taylor sum

    sum_{j=0}^m  delta^j / j!  (d/d nu)^j v(x),

which for a polynomial of degree <= m equals plain evaluation at the
projected point x + delta nu; that shortcut is taken whenever it is exact.
"""

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

__all__ = [
    "TaylorConfig",
    "EdgeTraceGeometry",
    "edge_trace_geometry",
    "taylor_trace",
    "taylor_trace_normal",
    "pullback_neumann",
]


@dataclass(frozen=True)
class TaylorConfig:
    """Order of the boundary Taylor extension for a degree-k field."""

    m: int
    k: int

    def __post_init__(self):
        if not 0 <= self.m <= self.k:
            raise ValueError("Taylor order must satisfy 0 <= m <= k")

    @property
    def fast_path(self):
        return self.m >= self.k


@dataclass
class EdgeTraceGeometry:
    """Per-quadrature-node projection data of one boundary edge."""

    edge_id: int
    owner: int  # the unique triangle containing the edge
    points: np.ndarray  # (n, 2) physical nodes on the edge
    weights: np.ndarray  # (n,) physical weights (arc measure included)
    delta: np.ndarray  # (n,)
    nu: np.ndarray  # (n, 2)
    n_gamma: np.ndarray  # (n, 2)
    n_h: np.ndarray  # (2,) straight outward normal, constant on the edge
    h_owner: float  # diameter of the owning triangle
    projected: np.ndarray  # (n, 2) = points + delta * nu


def edge_trace_geometry(mesh, curve, edge_id, rule, h_owner=None):
    """Build the trace geometry of one boundary edge.

    ``rule`` is an edge quadrature rule on [-1, 1]; nodes are mapped to the
    edge following the global (sorted-vertex) parametrization.
    """
    a, b = mesh.vertices[mesh.edges[edge_id]]
    points = 0.5 * (a + b) + 0.5 * np.outer(rule.points, b - a)
    weights = 0.5 * np.hypot(*(b - a)) * rule.weights
    projected, delta, nu, n_gamma = curve.project_many(points)
    owner = int(mesh.edge_tris[edge_id, 0])
    if h_owner is None:
        p = mesh.vertices[mesh.triangles[owner]]
        h_owner = float(
            max(
                np.linalg.norm(p[1] - p[0]),
                np.linalg.norm(p[2] - p[1]),
                np.linalg.norm(p[0] - p[2]),
            )
        )
    return EdgeTraceGeometry(
        edge_id=int(edge_id),
        owner=owner,
        points=points,
        weights=weights,
        delta=delta,
        nu=nu,
        n_gamma=n_gamma,
        n_h=mesh.edge_normal[edge_id].copy(),
        h_owner=h_owner,
        projected=projected,
    )


def taylor_trace(field, geom, config):
    """Taylor extension of a field at the nodes of a boundary edge.

    ``field`` exposes ``eval(points) -> (npts, ..., 2)`` and
    ``derivative(points, rx, ry)``; a ``degree`` attribute of None marks a
    non-polynomial field.  When the configured order makes the Taylor sum
    exact for the field's degree, the value is taken directly at the
    projected points; otherwise the truncated sum is assembled from mixed
    partials contracted with powers of nu.
    """
    degree = getattr(field, "degree", None)
    if config.fast_path and degree is not None and degree <= config.m:
        return field.eval(geom.projected)
    total = field.eval(geom.points).copy()
    if config.m == 0:
        return total
    shape_tail = total.shape[1:]
    nu_x, nu_y = geom.nu[:, 0], geom.nu[:, 1]
    for j in range(1, config.m + 1):
        dir_deriv = np.zeros_like(total)
        for i in range(j + 1):
            part = field.derivative(geom.points, i, j - i)
            factor = comb(j, i) * nu_x**i * nu_y ** (j - i)
            dir_deriv += factor.reshape((-1,) + (1,) * len(shape_tail)) * part
        total += (geom.delta**j / factorial(j)).reshape(
            (-1,) + (1,) * len(shape_tail)
        ) * dir_deriv
    return total


def taylor_trace_normal(field, geom, config):
    """Normal component of the Taylor extension against the pulled-back
    physical normal, shape (npts, ...)."""
    return np.einsum("q...a,qa->q...", taylor_trace(field, geom, config), geom.n_gamma)


def pullback_neumann(g, geom):
    """Neumann data pulled back from the physical boundary: evaluates the
    boundary functional at the projected points with the physical normal."""
    return np.asarray(g(geom.projected, geom.n_gamma), dtype=float)
