"""Assembly of the mixed system on a body-fitted mesh.

Velocity unknowns are global BDM_k degrees of freedom: k+1 normal moments
per global edge (taken against Legendre polynomials in the sorted-vertex
parametrization, with the mesh's global edge normal) plus interior moments
per triangle.  Each element's local shape functions are the dual basis of
those functionals, obtained by inverting the per-element DOF matrix applied
to the Piola-mapped reference nodal basis; this keeps the normal-moment
coupling conforming across edges without sign bookkeeping.

Two modes are supported:

* ``corrected``: the penalized forms with the Taylor boundary extension and
  the practical second equation (mean-corrected load, boundary-mean term,
  one scalar multiplier pinning the pressure mean),
* ``uncorrected-strong``: plain mass + div-div forms with homogeneous
  normal moments imposed strongly on the mesh boundary (only valid for
  homogeneous Neumann data).

Accumulation order is fixed (elements ascending, then boundary edges
ascending), so repeated assemblies are bit-identical.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from bdmdarcy.correction import TaylorConfig, edge_trace_geometry, taylor_trace_normal
from bdmdarcy.femcore.basis import EdgeBasis, triangle_basis
from bdmdarcy.femcore.element import (
    LocalField,
    REF_EDGES,
    REF_VERTICES,
    _bubble_times,
    bdm_reference_basis,
)
from bdmdarcy.femcore.quadrature import edge_quadrature, triangle_quadrature
from bdmdarcy.mesh import mesh_stats

__all__ = [
    "DofMap",
    "AssembledBlocks",
    "SaddleSystem",
    "Assembler",
    "build_saddle_system",
]

_ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _edge_ref_points(l, direction, s):
    """Reference coordinates of edge nodes in the global parametrization."""
    p, q = REF_EDGES[l]
    a, b = (REF_VERTICES[p], REF_VERTICES[q]) if direction > 0 else (
        REF_VERTICES[q],
        REF_VERTICES[p],
    )
    return 0.5 * (a + b) + 0.5 * np.outer(s, b - a)


class ReferenceTables:
    """Per-degree reference tabulations shared by all assemblers.

    Default exactness: 2k+2 for stiffness/mass volume terms, k+3 Gauss
    points (degree 2k+5) for boundary integrals, 2k+4 for error integrals;
    both stiffness and boundary rules can be overridden upward.
    """

    def __init__(self, k, vol_degree=None, bnd_points=None):
        self.k = k
        self.element = bdm_reference_basis(k)
        self.pressure = triangle_basis(k - 1)

        self.vol = triangle_quadrature(vol_degree or (2 * k + 2))
        w = self.vol.weights
        self.v_vals = self.element.tabulate(self.vol.points)  # (q, nd, 2)
        self.v_div = self.element.tabulate_div(self.vol.points)  # (q, nd)
        self.p_vals = self.pressure.eval(self.vol.points)  # (q, npr)

        self.s_mass = np.einsum("q,qna,qmb->abnm", w, self.v_vals, self.v_vals)
        self.s_div = np.einsum("q,qn,qm->nm", w, self.v_div, self.v_div)
        self.b0_span = -np.einsum("q,ql,qn->ln", w, self.p_vals, self.v_div)

        pint = np.einsum("q,ql->l", w, self.p_vals)
        pint[np.abs(pint) < 1e-14] = 0.0  # orthogonality to constants is exact
        self.p_ref_integral = pint
        self.p_const_value = float(self.pressure.eval([[1.0 / 3.0, 1.0 / 3.0]])[0, 0])

        # interior DOF test functions
        if self.element.n_grad:
            grads = triangle_basis(k - 1).grad(self.vol.points)[:, 1:, :]
            self.s_grad = np.einsum("q,qna,qrb->abrn", w, self.v_vals, grads)
        else:
            self.s_grad = None
        if self.element.n_curl:
            gw = _bubble_times(triangle_basis(k - 2), self.vol.points)
            self.s_curl = np.einsum("q,qna,qrb->abrn", w, self.v_vals, gw)
        else:
            self.s_curl = None

        # over-integration rule for error norms and diagnostics
        self.err = triangle_quadrature(2 * k + 4)
        self.v_vals_err = self.element.tabulate(self.err.points)
        self.v_div_err = self.element.tabulate_div(self.err.points)
        self.p_vals_err = self.pressure.eval(self.err.points)

        # edge rules: DOF moments (exact for the spanning fields used in
        # interpolation) and boundary integrals (curved compositions)
        self.dof_rule = edge_quadrature(k + 2)
        self.bnd_rule = edge_quadrature(bnd_points or (k + 3))
        self.leg_dof = EdgeBasis(k).eval(self.dof_rule.points)  # (g, k+1)
        self.v_edge = {}
        self.p_edge = {}
        for l in range(3):
            for direction in (1, -1):
                pts = _edge_ref_points(l, direction, self.dof_rule.points)
                self.v_edge[(l, direction)] = self.element.tabulate(pts)
                self.p_edge[(l, direction)] = self.pressure.eval(pts)


@lru_cache(maxsize=None)
def reference_tables(k, vol_degree=None, bnd_points=None):
    return ReferenceTables(k, vol_degree=vol_degree, bnd_points=bnd_points)


@dataclass(frozen=True)
class DofMap:
    """Global numbering: edge moments first (k+1 per edge), then interior
    velocity blocks per triangle; pressure is blocked per triangle."""

    k: int
    n_edges: int
    n_triangles: int
    n_interior: int
    n_pressure_local: int

    @property
    def n_edge_dofs(self):
        return (self.k + 1) * self.n_edges

    @property
    def n_u(self):
        return self.n_edge_dofs + self.n_interior * self.n_triangles

    @property
    def n_p(self):
        return self.n_pressure_local * self.n_triangles

    def edge_dofs(self, edge_id):
        base = (self.k + 1) * edge_id
        return np.arange(base, base + self.k + 1)


@dataclass
class AssembledBlocks:
    """Sparse blocks and load vectors of the practical system."""

    A: sp.csr_matrix
    B0: sp.csr_matrix
    B1: sp.csr_matrix
    rhs_u: np.ndarray
    rhs_p: np.ndarray
    c: np.ndarray  # integrals of the pressure basis functions
    flux: np.ndarray  # total-boundary-flux functional on velocity dofs
    area: float
    mode: str
    dofmap: DofMap
    constrained: np.ndarray  # strongly constrained velocity dofs (may be empty)
    pressure_mass_diag: np.ndarray = None  # diagonal pressure mass (orthonormal basis)


class SaddleSystem:
    """The constrained saddle-point operator  M0 + u v^T  (the rank-one part
    carries the boundary-mean coupling of the second equation; it is kept in
    factored form so the sparse factorization never sees it)."""

    def __init__(self, matrix, rhs, n_u, n_p, rank1=None, free_u=None, full_n_u=None,
                 c=None, area=1.0, mode="corrected", gauge=0.0, pressure_mass_diag=None):
        self.matrix = matrix.tocsr()
        self.rhs = rhs
        self.n_u = n_u
        self.n_p = n_p
        self.rank1 = rank1
        self.free_u = free_u
        self.full_n_u = full_n_u if full_n_u is not None else n_u
        self.c = c
        self.area = area
        self.mode = mode
        self.gauge = gauge
        self.pressure_mass_diag = pressure_mass_diag

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def matvec(self, x):
        y = self.matrix @ x
        if self.rank1 is not None:
            u, v = self.rank1
            y = y + u * (v @ x)
        return y

    def split(self, x):
        """(velocity in full numbering, pressure, multiplier)."""
        u = x[: self.n_u]
        if self.free_u is not None:
            full = np.zeros(self.full_n_u)
            full[self.free_u] = u
            u = full
        return u, x[self.n_u : self.n_u + self.n_p], float(x[-1])

    def operator_coo(self, max_entries=20_000_000):
        """Dense-free coordinate form of the full operator, for dumping."""
        base = self.matrix.tocoo()
        rows, cols, vals = [base.row], [base.col], [base.data]
        if self.rank1 is not None:
            u, v = self.rank1
            iu, iv = np.flatnonzero(u), np.flatnonzero(v)
            if base.nnz + len(iu) * len(iv) > max_entries:
                raise ValueError("system too large to expand for dumping")
            rr, cc = np.meshgrid(iu, iv, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(np.outer(u[iu], v[iv]).ravel())
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=self.matrix.shape,
        )
        mat.sum_duplicates()
        return mat


class Assembler:
    """Assembles the forms of one (mesh, degree, Taylor order, mode) setup.

    Heavy per-element data (affine maps, the inverse DOF matrices, boundary
    trace geometry) is computed once and shared by the matrix, load, and
    error-measurement routines.
    """

    def __init__(self, mesh, curves, k, m=None, mode="corrected",
                 quad_volume=None, quad_boundary=None):
        if mode not in ("corrected", "uncorrected-strong"):
            raise ValueError(f"unknown mode {mode!r}")
        if k < 1:
            raise ValueError("BDM discretizations need k >= 1")
        self.mesh = mesh
        self.curves = list(curves)
        self.k = k
        self.taylor = TaylorConfig(k if m is None else m, k)
        self.mode = mode
        self.tables = reference_tables(k, vol_degree=quad_volume, bnd_points=quad_boundary)
        self.stats = mesh_stats(mesh)

        t = self.tables
        verts = mesh.vertices[mesh.triangles]  # (nel, 3, 2)
        self.verts = verts
        self.v0 = verts[:, 0, :]
        jac = np.stack([verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 0]], axis=-1)
        self.jac = jac
        self.det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(self.det <= 0):
            raise ValueError("mesh contains degenerate or clockwise triangles")
        jinv = np.empty_like(jac)
        jinv[:, 0, 0] = jac[:, 1, 1]
        jinv[:, 0, 1] = -jac[:, 0, 1]
        jinv[:, 1, 0] = -jac[:, 1, 0]
        jinv[:, 1, 1] = jac[:, 0, 0]
        self.jinv = jinv / self.det[:, None, None]
        self.area = float(self.det.sum() / 2.0)

        self.dofmap = DofMap(
            k=k,
            n_edges=mesh.n_edges,
            n_triangles=mesh.n_triangles,
            n_interior=t.element.n_interior,
            n_pressure_local=t.pressure.dim,
        )
        self._build_indices()
        self._build_local_duals()
        self._build_trace_geometry()

    # -- structural setup ---------------------------------------------------

    def _build_indices(self):
        k, mesh = self.k, self.mesh
        nel = mesh.n_triangles
        nd = self.tables.element.dim
        gidx = np.empty((nel, nd), dtype=np.int64)
        for l in range(3):
            base = (k + 1) * mesh.tri_edges[:, l]
            gidx[:, l * (k + 1) : (l + 1) * (k + 1)] = base[:, None] + np.arange(k + 1)
        n_int = self.tables.element.n_interior
        start = self.dofmap.n_edge_dofs
        gidx[:, 3 * (k + 1) :] = (
            start + n_int * np.arange(nel)[:, None] + np.arange(n_int)
        )
        self.gidx = gidx
        self.pidx = (
            self.dofmap.n_pressure_local * np.arange(nel)[:, None]
            + np.arange(self.dofmap.n_pressure_local)
        )

        # direction of the global (sorted-vertex) parametrization per local edge
        direction = np.empty((nel, 3), dtype=np.int64)
        for l, (p, q) in enumerate(REF_EDGES):
            start_vertex = self.mesh.edges[self.mesh.tri_edges[:, l], 0]
            direction[:, l] = np.where(self.mesh.triangles[:, p] == start_vertex, 1, -1)
        self.edge_direction = direction

        constrained = []
        if self.mode == "uncorrected-strong":
            for e in self.mesh.boundary_edges:
                constrained.append(self.dofmap.edge_dofs(e))
        self.constrained = (
            np.sort(np.concatenate(constrained)) if constrained else np.empty(0, np.int64)
        )

    def _build_local_duals(self):
        """Per-element DOF matrices against the mapped reference nodal basis,
        and their inverses."""
        t, mesh, k = self.tables, self.mesh, self.k
        nel, nd = mesh.n_triangles, t.element.dim
        dof = np.zeros((nel, nd, nd))

        wleg = t.dof_rule.weights[:, None] * t.leg_dof  # (g, k+1)
        lengths = mesh.edge_lengths()
        for l in range(3):
            e_ids = mesh.tri_edges[:, l]
            scale = lengths[e_ids] / (2.0 * self.det)
            u = np.einsum("eba,eb->ea", self.jac, mesh.edge_normal[e_ids])  # J^T n
            for direction in (1, -1):
                sel = np.flatnonzero(self.edge_direction[:, l] == direction)
                if not len(sel):
                    continue
                tab = t.v_edge[(l, direction)]  # (g, nd, 2)
                rows = np.einsum(
                    "gm,ea,gna->emn", wleg, u[sel], tab, optimize=True
                ) * scale[sel, None, None]
                dof[sel, l * (k + 1) : (l + 1) * (k + 1), :] = rows

        row0 = 3 * (k + 1)
        if t.s_grad is not None:
            h = np.einsum("eca,ebc->eab", self.jac, self.jinv)  # J^T J^-T
            dof[:, row0 : row0 + t.element.n_grad, :] = np.einsum(
                "eab,abrn->ern", h, t.s_grad, optimize=True
            )
            row0 += t.element.n_grad
        if t.s_curl is not None:
            m = np.einsum("eca,cd,ebd->eab", self.jac, _ROT, self.jinv)
            dof[:, row0:, :] = np.einsum("eab,abrn->ern", m, t.s_curl, optimize=True)
        self.local_dual = np.linalg.inv(dof)  # columns: dual basis in span coords

    def _build_trace_geometry(self):
        by_id = {c.component_id: c for c in self.curves}
        self.trace = {}
        h_K = self.stats.h_K
        for e in self.mesh.boundary_edges:
            curve = by_id[self.mesh.edge_component[e]]
            owner = int(self.mesh.edge_tris[e, 0])
            self.trace[int(e)] = edge_trace_geometry(
                self.mesh, curve, e, self.tables.bnd_rule, h_owner=float(h_K[owner])
            )

    # -- local helpers -------------------------------------------------------

    def local_field(self, t, coeffs_span):
        return LocalField(self.verts[t], self.tables.element, coeffs_span)

    def basis_field(self, t):
        """All local shape functions of element t as one stacked field."""
        return self.local_field(t, self.local_dual[t].T)

    def local_coeffs(self, u_global):
        """Mapped-reference-nodal coefficients of a global velocity vector,
        shape (nel, nd)."""
        return np.einsum("eni,ei->en", self.local_dual, u_global[self.gidx])

    def _boundary_local_edge(self, e):
        owner = int(self.mesh.edge_tris[e, 0])
        (l,) = np.flatnonzero(self.mesh.tri_edges[owner] == e)
        return owner, int(l)

    # -- matrix blocks --------------------------------------------------------

    def matrix_a(self):
        """Velocity block: mass + div-div (+ boundary penalty in corrected
        mode), symmetric by construction."""
        t = self.tables
        g = np.einsum("eba,ebc->eac", self.jac, self.jac) / self.det[:, None, None]
        span = np.einsum("eac,acnm->enm", g, t.s_mass, optimize=True)
        span += t.s_div[None, :, :] / self.det[:, None, None]
        local = np.matmul(
            np.transpose(self.local_dual, (0, 2, 1)), np.matmul(span, self.local_dual)
        )
        rows = [np.broadcast_to(self.gidx[:, :, None], local.shape).ravel()]
        cols = [np.broadcast_to(self.gidx[:, None, :], local.shape).ravel()]
        vals = [local.ravel()]
        if self.mode == "corrected":
            for e in self.mesh.boundary_edges:
                geom = self.trace[int(e)]
                owner = geom.owner
                tv = taylor_trace_normal(self.basis_field(owner), geom, self.taylor)
                pen = np.einsum("q,qi,qj->ij", geom.weights, tv, tv) / geom.h_owner
                rows.append(np.repeat(self.gidx[owner], len(self.gidx[owner])))
                cols.append(np.tile(self.gidx[owner], len(self.gidx[owner])))
                vals.append(pen.ravel())
        n_u = self.dofmap.n_u
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_u, n_u),
        )
        return mat.tocsr()

    def matrix_b(self):
        """(B1, B0): divergence coupling, B1 with the straight-normal
        boundary term added."""
        t = self.tables
        local0 = np.einsum("ln,eni->eli", t.b0_span, self.local_dual)
        rows = np.broadcast_to(self.pidx[:, :, None], local0.shape).ravel()
        cols = np.broadcast_to(self.gidx[:, None, :], local0.shape).ravel()
        shape = (self.dofmap.n_p, self.dofmap.n_u)
        b0 = sp.coo_matrix((local0.ravel(), (rows, cols)), shape=shape).tocsr()
        if self.mode == "uncorrected-strong":
            return b0.copy(), b0

        erows, ecols, evals = [], [], []
        lengths = self.mesh.edge_lengths()
        for e in self.mesh.boundary_edges:
            owner, l = self._boundary_local_edge(e)
            direction = int(self.edge_direction[owner, l])
            tab = t.v_edge[(l, direction)]  # (g, nd, 2)
            pvals = t.p_edge[(l, direction)]  # (g, npr)
            u = self.jac[owner].T @ self.mesh.edge_normal[e]
            vn = np.einsum("a,gna,eni->gi", u, tab, self.local_dual[None, owner],
                           optimize=True) / self.det[owner]
            w = 0.5 * lengths[e] * t.dof_rule.weights
            loc = np.einsum("g,gl,gi->li", w, pvals, vn)
            erows.append(np.repeat(self.pidx[owner], loc.shape[1]))
            ecols.append(np.tile(self.gidx[owner], loc.shape[0]))
            evals.append(loc.ravel())
        edge_term = sp.coo_matrix(
            (np.concatenate(evals), (np.concatenate(erows), np.concatenate(ecols))),
            shape=shape,
        ).tocsr()
        return (b0 + edge_term).tocsr(), b0

    def rhs(self, case):
        """Velocity and pressure load vectors for a manufactured case."""
        t = self.tables
        pts = self.v0[:, None, :] + np.einsum(
            "eab,qb->eqa", self.jac, t.vol.points
        )  # (nel, q, 2)
        fvals = case.source(pts.reshape(-1, 2)).reshape(pts.shape[:2])
        rhs_u = np.zeros(self.dofmap.n_u)
        r_span = np.einsum("q,eq,qn->en", t.vol.weights, fvals, t.v_div)
        np.add.at(rhs_u, self.gidx, np.einsum("en,eni->ei", r_span, self.local_dual))

        f_mean = float(
            np.einsum("e,q,eq->", self.det, t.vol.weights, fvals) / self.area
        )
        rhs_p = -np.einsum(
            "e,q,eq,ql->el", self.det, t.vol.weights, fvals - f_mean, t.p_vals
        ).ravel()

        if self.mode == "corrected":
            for e in self.mesh.boundary_edges:
                geom = self.trace[int(e)]
                gn = case.neumann(geom.projected, geom.n_gamma)
                tv = taylor_trace_normal(self.basis_field(geom.owner), geom, self.taylor)
                contrib = np.einsum("q,q,qi->i", geom.weights, gn, tv) / geom.h_owner
                np.add.at(rhs_u, self.gidx[geom.owner], contrib)
        elif not case.homogeneous_neumann:
            raise ValueError(
                "strong imposition on the mesh boundary requires homogeneous "
                "Neumann data"
            )
        return rhs_u, rhs_p

    def constant_pressure(self):
        """Coefficients of the pressure function identically one."""
        vec = np.zeros(self.dofmap.n_p)
        vec[self.pidx[:, 0]] = 1.0 / self.tables.p_const_value
        return vec

    def pressure_integrals(self):
        """c_l = integral of the l-th pressure basis function."""
        c = np.einsum("e,l->el", self.det, self.tables.p_ref_integral)
        return c.ravel()

    def flux_functional(self):
        """Row vector with  flux @ u = total normal flux through the mesh
        boundary (exactly the zeroth normal moments of boundary edges)."""
        flux = np.zeros(self.dofmap.n_u)
        flux[(self.k + 1) * self.mesh.boundary_edges] = 1.0
        return flux

    def blocks(self, case):
        b1, b0 = self.matrix_b()
        rhs_u, rhs_p = self.rhs(case)
        return AssembledBlocks(
            A=self.matrix_a(),
            B0=b0,
            B1=b1,
            rhs_u=rhs_u,
            rhs_p=rhs_p,
            c=self.pressure_integrals(),
            flux=self.flux_functional(),
            area=self.area,
            mode=self.mode,
            dofmap=self.dofmap,
            constrained=self.constrained,
            pressure_mass_diag=np.repeat(self.det, self.dofmap.n_pressure_local),
        )

    def system(self, case, gauge=0.0):
        return build_saddle_system(self.blocks(case), self.mode, gauge=gauge)

    # -- global interpolation (used by diagnostics and error studies) --------

    def interpolate_velocity(self, func):
        """Global BDM interpolation of a smooth vector field: every global
        DOF functional applied to the field."""
        t, mesh, k = self.tables, self.mesh, self.k
        coeffs = np.zeros(self.dofmap.n_u)
        a = mesh.vertices[mesh.edges[:, 0]]
        b = mesh.vertices[mesh.edges[:, 1]]
        s = t.dof_rule.points
        pts = a[:, None, :] + 0.5 * (s[None, :, None] + 1.0) * (b - a)[:, None, :]
        vals = np.asarray(func(pts.reshape(-1, 2))).reshape(len(a), len(s), 2)
        vn = np.einsum("ega,ea->eg", vals, mesh.edge_normal)
        lengths = mesh.edge_lengths()
        moments = 0.5 * lengths[:, None] * np.einsum(
            "g,gm,eg->em", t.dof_rule.weights, t.leg_dof, vn
        )
        coeffs[: self.dofmap.n_edge_dofs] = moments.ravel()

        if t.element.n_interior:
            pts = self.v0[:, None, :] + np.einsum("eab,qb->eqa", self.jac, t.vol.points)
            fvals = np.asarray(func(pts.reshape(-1, 2))).reshape(pts.shape)
            rows = []
            if t.s_grad is not None:
                grads = triangle_basis(k - 1).grad(t.vol.points)[:, 1:, :]
                gphys = np.einsum("qrb,eba->eqra", grads, self.jinv)
                rows.append(
                    np.einsum("e,q,eqra,eqa->er", self.det, t.vol.weights, gphys, fvals,
                              optimize=True)
                )
            if t.s_curl is not None:
                gw = _bubble_times(triangle_basis(k - 2), t.vol.points)
                cphys = np.einsum("qrb,eba,ca->eqrc", gw, self.jinv, _ROT)
                rows.append(
                    np.einsum("e,q,eqra,eqa->er", self.det, t.vol.weights, cphys, fvals,
                              optimize=True)
                )
            interior = np.concatenate(rows, axis=1)
            coeffs[self.dofmap.n_edge_dofs :] = interior.ravel()
        return coeffs

    def project_pressure_global(self, func):
        """Elementwise L2 projection onto the pressure space."""
        t = self.tables
        pts = self.v0[:, None, :] + np.einsum("eab,qb->eqa", self.jac, t.err.points)
        vals = np.asarray(func(pts.reshape(-1, 2))).reshape(pts.shape[:2])
        return np.einsum("q,eq,ql->el", t.err.weights, vals, t.p_vals_err).ravel()


def build_saddle_system(blocks, mode, gauge=0.0):
    """Assemble the constrained linear system from the sparse blocks.

    The corrected system is
        [ A    B1^T  0 ] [u]       [rhs_u]
        [ B0   0     c ] [p]   =   [rhs_p]      + boundary-mean rank-one term,
        [ 0    c^T   0 ] [lam]     [gauge]
    where the rank-one term (c / area) flux^T couples the second equation to
    the total boundary flux; it is stored factored.  In strong mode the
    constrained velocity rows/columns are eliminated (data is homogeneous).
    """
    n_u, n_p = blocks.dofmap.n_u, blocks.dofmap.n_p
    c_col = sp.csr_matrix(blocks.c.reshape(-1, 1))
    if mode == "corrected":
        m0 = sp.bmat(
            [
                [blocks.A, blocks.B1.T, None],
                [blocks.B0, None, c_col],
                [None, c_col.T, None],
            ],
            format="csr",
        )
        u_vec = np.zeros(m0.shape[0])
        u_vec[n_u : n_u + n_p] = blocks.c / blocks.area
        v_vec = np.zeros(m0.shape[0])
        v_vec[:n_u] = blocks.flux
        rhs = np.concatenate([blocks.rhs_u, blocks.rhs_p, [gauge]])
        return SaddleSystem(
            m0, rhs, n_u, n_p, rank1=(u_vec, v_vec), c=blocks.c,
            area=blocks.area, mode=mode, gauge=gauge,
            pressure_mass_diag=blocks.pressure_mass_diag,
        )
    if mode == "uncorrected-strong":
        free = np.setdiff1d(np.arange(n_u), blocks.constrained)
        a_ff = blocks.A[free][:, free]
        b0_f = blocks.B0[:, free]
        m0 = sp.bmat(
            [[a_ff, b0_f.T, None], [b0_f, None, c_col], [None, c_col.T, None]],
            format="csr",
        )
        rhs = np.concatenate([blocks.rhs_u[free], blocks.rhs_p, [gauge]])
        return SaddleSystem(
            m0, rhs, len(free), n_p, free_u=free, full_n_u=n_u, c=blocks.c,
            area=blocks.area, mode=mode, gauge=gauge,
            pressure_mass_diag=blocks.pressure_mass_diag,
        )
    raise ValueError(f"unknown mode {mode!r}")
