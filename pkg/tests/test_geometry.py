"""Core geometry: radial splitting, chart meshing, measure, level curves."""
import json

import numpy as np
import pytest
from scipy import integrate

from mingauge.errors import DegenerateChartError, InvalidFrameError, MeshTopologyError
from mingauge.geometry import (
    ImmersionChart,
    SimplicialSurface,
    ball_region,
    decompose_radial,
    icosphere,
    level_polyline,
    mesh_from_chart,
    orthonormal_frame,
    polar_disk_mesh,
    submesh,
    surface_measure,
)


def catenoid_chart(c=1.0, u_max=2.0):
    def ev(u, v):
        return np.stack(
            [c * np.cosh(u / c) * np.cos(v), c * np.cosh(u / c) * np.sin(v), u],
            axis=-1,
        )

    def de(u, v):
        xu = np.stack(
            [np.sinh(u / c) * np.cos(v), np.sinh(u / c) * np.sin(v), np.ones_like(u)],
            axis=-1,
        )
        xv = np.stack(
            [-c * np.cosh(u / c) * np.sin(v), c * np.cosh(u / c) * np.cos(v),
             np.zeros_like(u)],
            axis=-1,
        )
        return xu, xv

    return ImmersionChart(
        name="catenoid-test",
        domain=(-u_max, u_max, 0.0, 2.0 * np.pi),
        evaluate=ev,
        derivatives=de,
        periodic_v=True,
    )


def flat_square_chart(half=1.0, z=0.0):
    def ev(u, v):
        return np.stack([u, v, np.full_like(u, z)], axis=-1)

    def de(u, v):
        one, zero = np.ones_like(u), np.zeros_like(u)
        return (np.stack([one, zero, zero], axis=-1),
                np.stack([zero, one, zero], axis=-1))

    return ImmersionChart("square", (-half, half, -half, half), ev, de)


def flat_disk(radius=1.5, rings=64, sectors=96, z=0.0):
    def pt(rho, phi):
        return np.stack([rho * np.cos(phi), rho * np.sin(phi),
                         np.full_like(rho, z)], axis=-1)

    radii = np.linspace(radius / rings, radius, rings)
    return polar_disk_mesh(pt, radii, sectors, truncation_radius=None, name="disk")


# ---------------------------------------------------------------- frames


def test_decompose_radial_pythagoras_randomized():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = rng.choice([3, 4])
        raw = rng.normal(size=(2, n))
        frame = orthonormal_frame(raw[0], raw[1])
        x = rng.normal(size=n) * rng.uniform(0.1, 50)
        a = rng.normal(size=n)
        tang, norm = decompose_radial(x, a, frame)
        assert np.allclose(tang + norm, x - a, atol=1e-12)
        assert abs(np.dot(tang, norm)) < 1e-10 * (np.linalg.norm(x - a) ** 2 + 1)
        lhs = np.linalg.norm(x - a) ** 2
        rhs = np.linalg.norm(tang) ** 2 + np.linalg.norm(norm) ** 2
        assert abs(lhs - rhs) <= 1e-12 * max(lhs, 1.0)


def test_decompose_radial_rejects_bad_frame():
    frame = np.array([[1.0, 0.0, 0.0], [1.0, 1e-3, 0.0]])
    with pytest.raises(InvalidFrameError):
        decompose_radial(np.ones(3), np.zeros(3), frame)


def test_decompose_radial_matches_finite_difference_frame():
    # tangent plane from exact chart derivatives vs central differences
    ch = catenoid_chart()
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(25):
        u = rng.uniform(-1.5, 1.5)
        v = rng.uniform(0, 2 * np.pi)
        xu, xv = ch.derivatives(np.asarray(u), np.asarray(v))
        frame = orthonormal_frame(xu, xv)
        fd_xu = (ch.points(u + h, v) - ch.points(u - h, v)) / (2 * h)
        fd_xv = (ch.points(u, v + h) - ch.points(u, v - h)) / (2 * h)
        fd_frame = orthonormal_frame(fd_xu, fd_xv)
        x = ch.points(u, v)
        a = np.array([0.3, -0.2, 0.1])
        t1, n1 = decompose_radial(x, a, frame)
        t2, n2 = decompose_radial(x, a, fd_frame)
        assert np.linalg.norm(t1 - t2) < 1e-8
        assert np.linalg.norm(n1 - n2) < 1e-8


# ---------------------------------------------------------------- meshing


def test_mesh_from_chart_catenoid_area_converges_second_order():
    c, u_max = 1.0, 1.5
    exact, _ = integrate.quad(lambda u: 2 * np.pi * c * np.cosh(u / c) ** 2,
                              -u_max, u_max)
    errs = []
    for k in (16, 32, 64):
        mesh = mesh_from_chart(catenoid_chart(c, u_max), (k, k))
        errs.append(abs(mesh.total_area() - exact))
    assert errs[1] / errs[0] < 0.35
    assert errs[2] / errs[1] < 0.35
    order = np.log2(errs[0] / errs[1])
    assert order > 1.9


def test_mesh_from_chart_periodic_has_only_rim_boundary():
    nv = 24
    mesh = mesh_from_chart(catenoid_chart(), (10, nv))
    assert len(mesh.boundary_edges) == 2 * nv
    rims = np.abs(mesh.vertices[mesh.boundary_edges.ravel()][:, 2])
    assert np.allclose(rims, 2.0)


def test_mesh_from_chart_degenerate_chart_raises():
    def ev(u, v):
        return np.stack([u, u, np.zeros_like(u)], axis=-1)  # collapses to a line

    def de(u, v):
        one, zero = np.ones_like(u), np.zeros_like(u)
        return (np.stack([one, one, zero], axis=-1),
                np.stack([zero, zero, zero], axis=-1))

    bad = ImmersionChart("bad", (0, 1, 0, 1), ev, de)
    with pytest.raises(DegenerateChartError):
        mesh_from_chart(bad, (4, 4))


def test_mesh_validation_catches_bad_topology():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    tris = np.array([[0, 1, 2], [1, 3, 2]])
    with pytest.raises(MeshTopologyError):
        # wrong boundary declaration: interior edge listed as boundary
        SimplicialSurface(verts, tris, np.array([[1, 2]]))
    with pytest.raises(MeshTopologyError):
        # degenerate triangle
        SimplicialSurface(
            np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float),
            np.array([[0, 1, 2]]),
            np.zeros((0, 2), dtype=int),
        )


def test_icosphere_area_and_closedness():
    mesh = icosphere(subdivisions=4, radius=2.0, center=(1.0, -1.0, 0.5))
    assert len(mesh.boundary_edges) == 0
    assert mesh.total_area() == pytest.approx(4 * np.pi * 4.0, rel=2e-3)
    d = np.linalg.norm(mesh.vertices - np.array([1.0, -1.0, 0.5]), axis=1)
    assert np.allclose(d, 2.0, atol=1e-12)


# ---------------------------------------------------------------- measure


def test_surface_measure_disk_region():
    mesh = flat_disk(radius=1.5, rings=72, sectors=128)
    t = 1.0
    area = surface_measure(mesh, ball_region(np.zeros(3), t))
    assert area == pytest.approx(np.pi * t * t, rel=1e-3)


def test_surface_measure_half_plane_region():
    mesh = mesh_from_chart(flat_square_chart(1.0), (24, 24))

    def right_half(points):
        return points[:, 0] > 0.1234

    # exact: (1 - 0.1234) * 2
    assert surface_measure(mesh, right_half) == pytest.approx(
        (1 - 0.1234) * 2.0, rel=1e-3
    )


def test_surface_measure_without_region_is_total_area():
    mesh = flat_disk(radius=1.0, rings=24, sectors=48)
    assert surface_measure(mesh) == pytest.approx(mesh.total_area(), rel=1e-12)


# ---------------------------------------------------------------- levels


def test_level_polyline_plane_circle_length():
    mesh = flat_disk(radius=2.0, rings=96, sectors=192)
    curve = level_polyline(mesh, np.zeros(3), 1.0)
    assert len(curve.polylines) == 1
    assert curve.closed == [True]
    assert curve.total_length() == pytest.approx(2 * np.pi, rel=1e-3)
    # every point radially projected onto the sphere
    for pts in curve.polylines:
        r = np.linalg.norm(pts - curve.center, axis=1)
        assert np.max(np.abs(r - curve.level)) <= 1e-9 * curve.level


def test_level_polyline_empty_below_neck():
    mesh = mesh_from_chart(catenoid_chart(c=1.0, u_max=2.0), (48, 64))
    curve = level_polyline(mesh, np.zeros(3), 0.5)
    assert curve.empty


def test_level_polyline_catenoid_two_loops():
    mesh = mesh_from_chart(catenoid_chart(c=1.0, u_max=2.0), (48, 64))
    curve = level_polyline(mesh, np.zeros(3), 2.5)
    assert len(curve.polylines) == 2
    assert all(curve.closed)
    # loops sit on opposite sides of the neck plane
    z_signs = sorted(np.sign(pts[:, 2].mean()) for pts in curve.polylines)
    assert z_signs == [-1.0, 1.0]


def test_level_polyline_snaps_off_vertices():
    mesh = flat_disk(radius=2.0, rings=40, sectors=64)
    # ring radii include exactly 1.0 -> vertices at distance 1.0 from center
    r_hit = float(np.linalg.norm(mesh.vertices, axis=1)[33])
    curve = level_polyline(mesh, np.zeros(3), r_hit)
    assert curve.snap_shift > 0
    assert len(curve.polylines) == 1
    assert curve.total_length() == pytest.approx(2 * np.pi * r_hit, rel=1e-3)


def test_level_polyline_open_path_on_boundary_crossing_sphere():
    mesh = mesh_from_chart(flat_square_chart(1.0), (30, 30))
    curve = level_polyline(mesh, np.zeros(3), 1.2)  # sphere exits the square
    assert len(curve.polylines) == 4
    assert not any(curve.closed)
    # arc total: 4 corner arcs of a circle radius 1.2 inside the square
    ang = 2 * (np.pi / 4 - np.arccos(1.0 / 1.2))
    assert curve.total_length() == pytest.approx(4 * ang * 1.2, rel=2e-3)


def test_level_polyline_segment_owners_are_crossing_triangles():
    mesh = flat_disk(radius=1.5, rings=32, sectors=48)
    curve = level_polyline(mesh, np.zeros(3), 0.8)
    (tris,) = curve.segment_triangles
    mids = mesh.centroids()[tris]
    r = np.linalg.norm(mids, axis=1)
    assert np.all(np.abs(r - 0.8) < 0.25)


# ---------------------------------------------------------------- invariance


def random_rigid_motion(rng, n=3):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q, rng.normal(size=n) * 3.0


def test_rigid_motion_invariance_of_measure_and_levels():
    rng = np.random.default_rng(11)
    mesh = mesh_from_chart(catenoid_chart(c=1.0, u_max=1.5), (32, 48))
    a = np.array([0.2, -0.1, 0.3])
    t = 2.0
    area0 = surface_measure(mesh, ball_region(a, t))
    len0 = level_polyline(mesh, a, t).total_length()
    for _ in range(3):
        q, shift = random_rigid_motion(rng)
        moved = SimplicialSurface(
            mesh.vertices @ q.T + shift,
            mesh.triangles,
            mesh.boundary_edges,
            mesh.truncation_radius,
        )
        a2 = q @ a + shift
        area1 = surface_measure(moved, ball_region(a2, t))
        len1 = level_polyline(moved, a2, t).total_length()
        assert abs(area1 - area0) <= 1e-10 * max(1.0, area0)
        assert abs(len1 - len0) <= 1e-10 * max(1.0, len0)


# ---------------------------------------------------------------- exchange


def test_mesh_json_round_trip_and_field_order():
    mesh = flat_disk(radius=1.0, rings=6, sectors=12)
    text = mesh.to_json()
    keys = list(json.loads(text).keys())
    assert keys == ["ambient_dim", "vertices", "triangles",
                    "boundary_edges", "truncation_radius"]
    back = SimplicialSurface.from_json(text)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary_edges, mesh.boundary_edges)
    assert back.truncation_radius == mesh.truncation_radius
    assert back.to_json() == text


def test_submesh_keeps_geometry_and_recomputes_boundary():
    mesh = flat_disk(radius=1.0, rings=12, sectors=24)
    c = mesh.centroids()
    sub = submesh(mesh, c[:, 0] > 0)
    assert sub.total_area() < mesh.total_area()
    assert len(sub.boundary_edges) > 0
    # all sub vertices present in original
    for v in sub.vertices[:10]:
        assert np.min(np.linalg.norm(mesh.vertices - v, axis=1)) < 1e-12
