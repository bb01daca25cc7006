"""Taylor boundary extension and per-edge trace geometry."""

import numpy as np
import pytest

from bdmdarcy.analysis import case_circle, case_ring
from bdmdarcy.assembly import Assembler
from bdmdarcy.correction import (
    TaylorConfig,
    edge_trace_geometry,
    pullback_neumann,
    taylor_trace,
    taylor_trace_normal,
)
from bdmdarcy.femcore import LocalField, bdm_reference_basis, edge_quadrature
from bdmdarcy.mesh import (
    coarse_mesh,
    disk_domain,
    mesh_stats,
    refine_project,
    square_domain,
    unit_square_mesh,
)


class _NoDegree:
    """Hide the polynomial degree to force the Taylor-sum path."""

    degree = None

    def __init__(self, field):
        self._field = field

    def eval(self, pts):
        return self._field.eval(pts)

    def derivative(self, pts, rx, ry):
        return self._field.derivative(pts, rx, ry)


def first_boundary_geom(mesh, curves, n_pts=4):
    by_id = {c.component_id: c for c in curves}
    e = int(mesh.boundary_edges[0])
    return edge_trace_geometry(mesh, by_id[mesh.edge_component[e]], e, edge_quadrature(n_pts))


def test_taylor_config_bounds():
    TaylorConfig(0, 3)
    TaylorConfig(3, 3)
    with pytest.raises(ValueError):
        TaylorConfig(4, 3)
    with pytest.raises(ValueError):
        TaylorConfig(-1, 2)


def test_flat_edge_has_zero_shift():
    mesh = unit_square_mesh(2)
    geom = first_boundary_geom(mesh, square_domain())
    assert np.all(geom.delta == 0.0)
    assert np.abs(geom.n_gamma - geom.n_h).max() == 0.0
    # with zero shift the extension reduces to the plain trace for every order
    el = bdm_reference_basis(2)
    rng = np.random.default_rng(0)
    verts = mesh.vertices[mesh.triangles[geom.owner]]
    field = LocalField(verts, el, rng.standard_normal(el.dim))
    plain = field.eval(geom.points)
    for m in range(3):
        vals = taylor_trace(field, geom, TaylorConfig(m, 2))
        assert np.abs(vals - plain).max() < 1e-14


def test_chord_midpoint_distance():
    # chord of the unit circle subtending half-angle alpha: the midpoint sits
    # at distance 1 - cos(alpha) from the circle
    curves = disk_domain()
    mesh = coarse_mesh(curves)  # rim chords subtend half-angle pi/6
    e = int(mesh.boundary_edges[0])
    geom = edge_trace_geometry(mesh, curves[0], e, edge_quadrature(1))
    assert geom.delta[0] == pytest.approx(1.0 - np.cos(np.pi / 6.0), abs=1e-14)


def test_delta_vanishes_toward_endpoints():
    curves = disk_domain()
    mesh = coarse_mesh(curves)
    e = int(mesh.boundary_edges[0])
    geom = edge_trace_geometry(mesh, curves[0], e, edge_quadrature(12))
    # Gauss nodes are ordered from one endpoint to the other
    assert geom.delta[0] < geom.delta[5]
    assert geom.delta[-1] < geom.delta[6]
    assert geom.delta.min() >= 0.0


@pytest.mark.parametrize("m", [0, 1, 2])
def test_taylor_exact_for_low_degree_polynomials(m):
    # fields of degree <= m are extended exactly to the projected points
    curves = disk_domain()
    mesh = refine_project(coarse_mesh(curves), curves)
    geom = first_boundary_geom(mesh, curves)
    k = 3
    el = bdm_reference_basis(k)
    verts = mesh.vertices[mesh.triangles[geom.owner]]

    def poly(pts):
        pts = np.atleast_2d(pts)
        out = np.column_stack([0.4 + 0.0 * pts[:, 0], -0.2 + 0.0 * pts[:, 0]])
        if m >= 1:
            out += np.column_stack([0.3 * pts[:, 0] - pts[:, 1], 0.7 * pts[:, 1]])
        if m >= 2:
            out += np.column_stack([pts[:, 0] * pts[:, 1], pts[:, 0] ** 2])
        return out

    from bdmdarcy.femcore import interpolate_bdm

    field = _NoDegree(interpolate_bdm(verts, poly, k))
    vals = taylor_trace(field, geom, TaylorConfig(m, k))
    exact = poly(geom.projected)
    assert np.abs(vals - exact).max() < 1e-12 * (1.0 + np.abs(exact).max())


def test_order_zero_is_plain_trace():
    curves = disk_domain()
    mesh = coarse_mesh(curves)
    geom = first_boundary_geom(mesh, curves)
    el = bdm_reference_basis(2)
    rng = np.random.default_rng(4)
    verts = mesh.vertices[mesh.triangles[geom.owner]]
    field = LocalField(verts, el, rng.standard_normal(el.dim))
    vals = taylor_trace(field, geom, TaylorConfig(0, 2))
    assert np.abs(vals - field.eval(geom.points)).max() == 0.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_fast_path_matches_taylor_sum(k):
    # order-k extension of a degree-k field: sum path == point evaluation
    curves = disk_domain()
    mesh = refine_project(coarse_mesh(curves), curves)
    el = bdm_reference_basis(k)
    rng = np.random.default_rng(k * 13)
    cfg = TaylorConfig(k, k)
    by_id = {c.component_id: c for c in curves}
    for e in mesh.boundary_edges:
        geom = edge_trace_geometry(mesh, by_id[mesh.edge_component[e]], e, edge_quadrature(4))
        verts = mesh.vertices[mesh.triangles[geom.owner]]
        field = LocalField(verts, el, rng.standard_normal(el.dim))
        fast = taylor_trace(field, geom, cfg)
        slow = taylor_trace(_NoDegree(field), geom, cfg)
        scale = np.abs(fast).max()
        assert np.abs(fast - slow).max() < 1e-12 * max(scale, 1.0)


def test_pullback_homogeneous_case_vanishes():
    curves = disk_domain()
    mesh = refine_project(coarse_mesh(curves), curves)
    case = case_circle()
    geom = first_boundary_geom(mesh, curves)
    vals = pullback_neumann(case.neumann, geom)
    assert np.abs(vals).max() == 0.0
    # and the underlying field is genuinely tangential on the circle
    direct = np.einsum("na,na->n", case.velocity(geom.projected), geom.n_gamma)
    assert np.abs(direct).max() < 1e-12


def test_pullback_constant_functional():
    curves = disk_domain()
    mesh = coarse_mesh(curves)
    geom = first_boundary_geom(mesh, curves)
    vals = pullback_neumann(lambda x, n: np.full(len(x), 4.25), geom)
    assert np.all(vals == 4.25)


def test_pullback_ring_node_hitting_axis():
    # a symmetric chord of the outer circle projects its midpoint to (1, 0),
    # where the ring solution's normal flux vanishes
    from bdmdarcy.geometry import BoundaryCurve
    from bdmdarcy.mesh import _build_mesh

    theta = 0.15
    a = np.array([np.cos(theta), -np.sin(theta)])
    b = np.array([np.cos(theta), np.sin(theta)])
    apex = np.array([0.3, 0.0])
    mesh = _build_mesh(np.array([apex, a, b]), np.array([[0, 1, 2]]),
                       [BoundaryCurve((0.0, 0.0), 1.0, component_id=0)], level=0)
    curve = BoundaryCurve((0.0, 0.0), 1.0, component_id=0)
    by_mid = {tuple(np.sort(mesh.edges[e])): e for e in mesh.boundary_edges}
    e = by_mid[(1, 2)]
    geom = edge_trace_geometry(mesh, curve, int(e), edge_quadrature(1))
    assert geom.projected[0] == pytest.approx([1.0, 0.0], abs=1e-14)
    vals = pullback_neumann(case_ring().neumann, geom)
    assert abs(vals[0]) < 1e-13


def test_correction_term_shrinks_linearly_with_h():
    # the h_K^{-1/2}-weighted Taylor tail of interpolated smooth fields
    # shrinks like h relative to the element norm
    curves = disk_domain()
    case = case_ring()  # smooth non-polynomial field on the disk as well
    mesh = coarse_mesh(curves)
    k, m = 2, 2
    cfg = TaylorConfig(m, k)
    hs, ratios = [], []
    for _ in range(4):
        mesh = refine_project(mesh, curves)
        asm = Assembler(mesh, curves, k=k, m=m)
        u = asm.interpolate_velocity(case.velocity)
        w = asm.local_coeffs(u)
        worst = 0.0
        for e in mesh.boundary_edges:
            geom = asm.trace[int(e)]
            field = asm.local_field(geom.owner, w[geom.owner])
            tail = taylor_trace(field, geom, cfg) - field.eval(geom.points)
            tail_norm = np.sqrt(
                (geom.weights @ np.sum(tail**2, axis=1)) / geom.h_owner
            )
            t = asm.tables
            vol = np.einsum("qna,n->qa", t.v_vals, w[geom.owner])
            vol = vol @ asm.jac[geom.owner].T / asm.det[geom.owner]
            k_norm = np.sqrt(
                asm.det[geom.owner] * np.sum(t.vol.weights * np.sum(vol**2, axis=1))
            )
            worst = max(worst, tail_norm / k_norm)
        hs.append(mesh_stats(mesh).h)
        ratios.append(worst)
    slope = np.polyfit(np.log(hs), np.log(ratios), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.3)
