"""BDM_k velocity elements, discontinuous pressure elements, and the local
interpolation/projection operators.

The reference element is dualized once: its nodal basis is the inverse of
the DOF-functional matrix applied to a spanning set of vector polynomials.
Physical elements are reached through the contravariant Piola map, which
preserves edge normal moments; interior moments mix under the map, so local
interpolation solves a small per-element system against the physical DOF
functionals.
"""

from functools import lru_cache
from math import comb

import numpy as np

from bdmdarcy.femcore.basis import EdgeBasis, TriangleBasis, triangle_basis
from bdmdarcy.femcore.quadrature import edge_quadrature, triangle_quadrature

__all__ = [
    "REF_VERTICES",
    "REF_EDGES",
    "BDMElement",
    "PressureElement",
    "LocalField",
    "LocalScalarField",
    "affine_map",
    "piola_map",
    "piola_map_inverse",
    "bdm_reference_basis",
    "interpolate_bdm",
    "project_pressure",
    "eval_with_derivatives",
]

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# edge l is opposite vertex l, traversed counterclockwise
REF_EDGES = ((1, 2), (2, 0), (0, 1))
REF_EDGE_NORMALS = np.array(
    [[1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)], [-1.0, 0.0], [0.0, -1.0]]
)
REF_EDGE_LENGTHS = np.array([np.sqrt(2.0), 1.0, 1.0])

_ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])  # curl w = _ROT @ grad w


def affine_map(verts):
    """(v0, J, detJ, Jinv) of the affine map from the reference triangle."""
    verts = np.asarray(verts, dtype=float)
    j = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
    det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
    if det <= 0:
        raise ValueError("triangle is degenerate or clockwise")
    jinv = np.array([[j[1, 1], -j[0, 1]], [-j[1, 0], j[0, 0]]]) / det
    return verts[0], j, det, jinv


def _bubble_times(scalar, pts):
    """Gradients of b*psi for psi in a scalar basis; b = l1 l2 l3."""
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    b = (1.0 - x - y) * x * y
    bx = y - 2.0 * x * y - y**2
    by = x - x**2 - 2.0 * x * y
    vals = scalar.eval(pts)
    gx = scalar.eval_derivative(pts, 1, 0)
    gy = scalar.eval_derivative(pts, 0, 1)
    wx = b[:, None] * gx + bx[:, None] * vals
    wy = b[:, None] * gy + by[:, None] * vals
    return np.stack([wx, wy], axis=-1)  # (npts, dim, 2)


class BDMElement:
    """Reference BDM_k element: full vector polynomials of degree k with
    edge normal moments (k+1 per edge, against Legendre polynomials), moments
    against gradients of P_{k-1} modulo constants, and moments against
    curl(b psi) for psi in P_{k-2} (k >= 2)."""

    def __init__(self, k):
        if k < 1:
            raise ValueError("BDM elements need k >= 1")
        self.k = k
        self.scalar = triangle_basis(k)
        self.n_scalar = self.scalar.dim
        self.dim = 2 * self.n_scalar  # (k+1)(k+2)
        self.n_edge_moments = k + 1
        self.n_grad = triangle_basis(k - 1).dim - 1 if k >= 1 else 0
        self.n_curl = triangle_basis(k - 2).dim if k >= 2 else 0
        self.n_interior = self.n_grad + self.n_curl
        assert 3 * self.n_edge_moments + self.n_interior == self.dim

        dof_matrix = self._dof_matrix_span()
        self.dof_condition = float(np.linalg.cond(dof_matrix))
        if not np.isfinite(self.dof_condition) or self.dof_condition > 1e12:
            raise np.linalg.LinAlgError("BDM DOF functional matrix is singular")
        # columns of nodal_coeff express the dual (nodal) basis in the span
        self.nodal_coeff = np.linalg.solve(dof_matrix, np.eye(self.dim))

    # -- span basis: (phi_i, 0) for i < n_scalar, then (0, phi_i) ----------

    def _span_values(self, pts, rx=0, ry=0):
        s = self.scalar.eval_derivative(pts, rx, ry)
        npts = s.shape[0]
        out = np.zeros((npts, self.dim, 2))
        out[:, : self.n_scalar, 0] = s
        out[:, self.n_scalar :, 1] = s
        return out

    def _span_div(self, pts):
        sx = self.scalar.eval_derivative(pts, 1, 0)
        sy = self.scalar.eval_derivative(pts, 0, 1)
        return np.concatenate([sx, sy], axis=1)

    def _dof_matrix_span(self):
        """DOF functionals applied to the span basis."""
        k = self.k
        rows = []
        edge_rule = edge_quadrature(k + 2)
        legendre = EdgeBasis(k)
        leg_vals = legendre.eval(edge_rule.points)  # (g, k+1)
        for l, (a_idx, b_idx) in enumerate(REF_EDGES):
            a, b = REF_VERTICES[a_idx], REF_VERTICES[b_idx]
            pts = 0.5 * (a + b) + 0.5 * np.outer(edge_rule.points, b - a)
            vals = self._span_values(pts)  # (g, dim, 2)
            vn = vals @ REF_EDGE_NORMALS[l]  # (g, dim)
            w = 0.5 * REF_EDGE_LENGTHS[l] * edge_rule.weights
            rows.append(np.einsum("g,gm,gn->mn", w, leg_vals, vn))
        rule = triangle_quadrature(2 * k)
        vals = self._span_values(rule.points)
        if self.n_grad:
            grads = triangle_basis(k - 1).grad(rule.points)[:, 1:, :]  # skip constant
            rows.append(np.einsum("q,qra,qna->rn", rule.weights, grads, vals))
        if self.n_curl:
            gw = _bubble_times(triangle_basis(k - 2), rule.points)  # (q, r, 2)
            curls = gw @ _ROT.T
            rows.append(np.einsum("q,qra,qna->rn", rule.weights, curls, vals))
        return np.concatenate(rows, axis=0)

    # -- tabulation of the nodal basis ------------------------------------

    def tabulate(self, pts):
        """Nodal basis values at reference points, shape (npts, dim, 2)."""
        return np.einsum("qna,nj->qja", self._span_values(pts), self.nodal_coeff)

    def tabulate_div(self, pts):
        return self._span_div(pts) @ self.nodal_coeff

    def tabulate_derivative(self, pts, rx, ry):
        """Reference mixed partial of each nodal basis function."""
        return np.einsum(
            "qna,nj->qja", self._span_values(pts, rx, ry), self.nodal_coeff
        )


@lru_cache(maxsize=None)
def bdm_reference_basis(k):
    """Shared reference elements (dual basis built once per degree)."""
    return BDMElement(k)


class PressureElement:
    """Discontinuous P_{k-1} pressure element (orthonormal reference basis,
    mapped by plain composition)."""

    def __init__(self, degree):
        self.degree = degree
        self.basis = triangle_basis(degree)
        self.dim = self.basis.dim


def piola_map(verts, ref_field):
    """Contravariant map of a reference vector field to the physical
    triangle: v(x) = J vhat(xhat) / det J."""
    v0, j, det, jinv = affine_map(verts)

    def phys(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ref = (x - v0) @ jinv.T
        return np.asarray(ref_field(ref)) @ j.T / det

    return phys


def piola_map_inverse(verts, phys_field):
    """Inverse of piola_map: vhat(xhat) = det J Jinv v(F(xhat))."""
    v0, j, det, jinv = affine_map(verts)

    def ref(xhat):
        xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
        x = v0 + xhat @ j.T
        return det * (np.asarray(phys_field(x)) @ jinv.T)

    return ref


class LocalField:
    """Polynomial vector field on one triangle, coefficients taken in the
    Piola-mapped reference nodal basis.  Coefficients may carry leading axes
    (a stack of fields sharing the element)."""

    def __init__(self, verts, element, coeffs):
        self.verts = np.asarray(verts, dtype=float)
        self.element = element
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.degree = element.k
        self.v0, self.jac, self.det, self.jinv = affine_map(self.verts)

    def _ref_points(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts - self.v0) @ self.jinv.T

    def eval(self, pts):
        """Values at physical points, shape (npts, ..., 2)."""
        vals = self.element.tabulate(self._ref_points(pts))  # (q, nd, 2)
        return np.einsum("qja,...j->q...a", vals @ self.jac.T / self.det, self.coeffs)

    def divergence(self, pts):
        d = self.element.tabulate_div(self._ref_points(pts)) / self.det
        return np.einsum("qj,...j->q...", d, self.coeffs)

    def derivative(self, pts, rx, ry):
        """Physical mixed partial d^rx_x d^ry_y, shape (npts, ..., 2)."""
        ref = self._ref_points(pts)
        a, b = self.jinv[0, 0], self.jinv[1, 0]
        c, d = self.jinv[0, 1], self.jinv[1, 1]
        total = np.zeros((len(ref),) + self.coeffs.shape[:-1] + (2,))
        for i in range(rx + 1):
            for j in range(ry + 1):
                factor = (
                    comb(rx, i) * comb(ry, j)
                    * a**i * b ** (rx - i) * c**j * d ** (ry - j)
                )
                if factor == 0.0:
                    continue
                tab = self.element.tabulate_derivative(ref, i + j, rx + ry - i - j)
                total += factor * np.einsum(
                    "qja,...j->q...a", tab @ self.jac.T / self.det, self.coeffs
                )
        return total

    def derivatives(self, pts, order):
        """All mixed partials with rx + ry <= order, keyed by (rx, ry)."""
        return {
            (rx, ry): self.derivative(pts, rx, ry)
            for total in range(order + 1)
            for rx in range(total + 1)
            for ry in [total - rx]
        }


class LocalScalarField:
    """Scalar polynomial on one triangle in the composition-mapped basis."""

    def __init__(self, verts, basis, coeffs):
        self.verts = np.asarray(verts, dtype=float)
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.v0, self.jac, self.det, self.jinv = affine_map(self.verts)

    def eval(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ref = (pts - self.v0) @ self.jinv.T
        return self.basis.eval(ref) @ self.coeffs


def physical_dofs(verts, k, field, edge_rule_points=None, vol_degree=None):
    """Apply the physical DOF functionals of the element on ``verts`` to a
    vector field given as ``field(points) -> (npts, 2)``.

    Edge moments use the element's own counterclockwise edge traversal and
    outward normals; interior moments use composition-mapped test functions.
    Default quadrature is exact for fields of degree k+2; raise the rule
    orders for accurate moments of non-polynomial fields.
    """
    element = bdm_reference_basis(k)
    verts = np.asarray(verts, dtype=float)
    v0, j, det, jinv = affine_map(verts)
    rule = edge_quadrature(edge_rule_points or (k + 2))
    leg = EdgeBasis(k).eval(rule.points)
    values = []
    for l, (a_idx, b_idx) in enumerate(REF_EDGES):
        a, b = verts[a_idx], verts[b_idx]
        tangent = b - a
        length = np.hypot(*tangent)
        normal = np.array([tangent[1], -tangent[0]]) / length
        pts = 0.5 * (a + b) + 0.5 * np.outer(rule.points, tangent)
        vn = np.asarray(field(pts)) @ normal
        w = 0.5 * length * rule.weights
        values.append(np.einsum("g,gm,g->m", w, leg, vn))
    vol = triangle_quadrature(vol_degree or (2 * k + 2))
    phys_pts = v0 + vol.points @ j.T
    fvals = np.asarray(field(phys_pts))
    if element.n_grad:
        grads = triangle_basis(k - 1).grad(vol.points)[:, 1:, :] @ jinv  # J^-T ghat
        values.append(det * np.einsum("q,qra,qa->r", vol.weights, grads, fvals))
    if element.n_curl:
        gw = _bubble_times(triangle_basis(k - 2), vol.points) @ jinv  # J^-T grad w
        curls = gw @ _ROT.T
        values.append(det * np.einsum("q,qra,qa->r", vol.weights, curls, fvals))
    return np.concatenate(values)


def _physical_dof_matrix(verts, k):
    """Physical DOF functionals applied to the Piola-mapped nodal basis."""
    element = bdm_reference_basis(k)
    columns = []
    for jdof in range(element.dim):
        coeffs = np.zeros(element.dim)
        coeffs[jdof] = 1.0
        basis_fn = LocalField(verts, element, coeffs)
        columns.append(physical_dofs(verts, k, basis_fn.eval))
    return np.column_stack(columns)


def interpolate_bdm(verts, field, k, edge_rule_points=None, vol_degree=None):
    """Local BDM interpolation of a pointwise-evaluable vector field.

    Matches the field's edge normal moments against P_k on every edge, its
    interior moments against gradients of P_{k-1} modulo constants, and (for
    k >= 2) against curl(b psi) for psi in P_{k-2}.  Reproduces any field
    already in the local space.
    """
    verts = np.asarray(verts, dtype=float)
    moments = physical_dofs(
        verts, k, field, edge_rule_points=edge_rule_points, vol_degree=vol_degree
    )
    coeffs = np.linalg.solve(_physical_dof_matrix(verts, k), moments)
    return LocalField(verts, bdm_reference_basis(k), coeffs)


def project_pressure(verts, q, degree, quad_degree=None):
    """L2-orthogonal projection of a scalar field onto P_degree on one
    triangle, in the composition-mapped orthonormal basis."""
    verts = np.asarray(verts, dtype=float)
    basis = triangle_basis(degree)
    v0, j, det, _ = affine_map(verts)
    rule = triangle_quadrature(quad_degree or (2 * degree + 4))
    pts = v0 + rule.points @ j.T
    vals = np.asarray(q(pts))
    # mapped basis has mass matrix det J * I
    coeffs = np.einsum("q,ql,q->l", rule.weights, basis.eval(rule.points), vals)
    return LocalScalarField(verts, basis, coeffs)


def eval_with_derivatives(verts, coeffs, points, order, k=None):
    """Values and all mixed partials (up to ``order``) of a local BDM field."""
    coeffs = np.asarray(coeffs, dtype=float)
    if k is None:
        # recover the degree from the coefficient count (k+1)(k+2)
        k = int(round((np.sqrt(4 * coeffs.shape[-1] + 1) - 3) / 2))
    field = LocalField(np.asarray(verts, dtype=float), bdm_reference_basis(k), coeffs)
    return field.derivatives(points, order)
