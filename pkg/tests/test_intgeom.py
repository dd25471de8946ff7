"""Section counting, sphere identities, and the radial-projection Jacobian.

Deterministic oracles:
* any line through a sphere's center meets it twice
* the catenoid axis misses the surface, a horizontal line through the
  origin crosses the neck twice
* a w-directed 2-plane section of {w = z^2} pins z, so it counts once; a
  z-directed section at w = c != 0 sees both square roots
* random lines from the origin hit the plane {z = h} inside |x| < R with
  probability 1 - h/R
"""
import numpy as np
import pytest

from mingauge import intgeom as ig
from mingauge import invariants as inv
from mingauge.catalog import build_surface, spherical_region
from mingauge.errors import InvalidFrameError
from mingauge.geometry import ball_region, integrate_with_error, orthonormal_frame


def _rotz(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# --------------------------------------------------------------------------
# constants and sampling


def test_counting_bound_constant_two_routes():
    expected = {1: np.pi, 2: 8.0, 3: 6 * np.pi}
    for p, val in expected.items():
        a = ig.counting_bound_constant(p)
        b = ig.counting_bound_constant(p, route="sphere")
        assert a == pytest.approx(val, rel=1e-12)
        assert abs(a - b) <= 1e-12 * abs(a)
    with pytest.raises(ValueError):
        ig.counting_bound_constant(2, route="volume")


@pytest.mark.parametrize("n,p", [(3, 2), (4, 2)])
def test_grassmann_frames_orthonormal(n, p, rng):
    sec, comp = ig.sample_grassmann(n, p, 200, rng)
    assert sec.shape == (200, n - p, n) and comp.shape == (200, p, n)
    gram_s = np.einsum("mkn,mjn->mkj", sec, sec)
    gram_c = np.einsum("mkn,mjn->mkj", comp, comp)
    cross = np.einsum("mkn,mjn->mkj", sec, comp)
    assert np.abs(gram_s - np.eye(n - p)).max() < 1e-12
    assert np.abs(gram_c - np.eye(p)).max() < 1e-12
    assert np.abs(cross).max() < 1e-12


def test_grassmann_moments(rng):
    # lines in R^3: E<e, d>^2 = 1/3, sd of the mean = sqrt(4/45/m)
    sec, _ = ig.sample_grassmann(3, 2, 100000, rng)
    d = sec[:, 0, :]
    m2 = (d[:, 2] ** 2).mean()
    assert abs(m2 - 1 / 3) < 4 * np.sqrt(4 / 45 / 100000)
    # planes in R^4: |proj e|^2 is Beta(1,1) = U(0,1), so mean 1/2, var 1/12
    sec4, _ = ig.sample_grassmann(4, 2, 100000, rng)
    e = np.zeros(4)
    e[3] = 1.0
    proj = np.einsum("mkn,n->mk", sec4, e)
    m2 = (proj**2).sum(axis=1).mean()
    assert abs(m2 - 0.5) < 4 * np.sqrt(1 / 12 / 100000)


def test_plane_through_builder():
    pl = ig.PlaneThrough.through([1.0, 0, 0], [[3.0, 4.0, 0.0]])
    assert pl.directions.shape == (1, 3) and pl.complement.shape == (2, 3)
    assert pl.contains([1.0, 0, 0])
    assert pl.contains([1 + 0.6, 0.8, 0.0])
    assert not pl.contains([1.0, 0, 1.0])
    with pytest.raises(InvalidFrameError):
        ig.PlaneThrough.through([0, 0, 0], [[1.0, 0, 0], [2.0, 0, 0]])


# --------------------------------------------------------------------------
# deterministic section counts


def test_line_through_sphere_center_counts_two(sphere_coarse):
    center = np.array([0.0, 0.0, 2.0])
    for d in [(0, 0, 1.0), (0.3, 0.4, 0.5), (1.0, 0, 0)]:
        pl = ig.PlaneThrough.through(center, np.array([d]))
        assert ig.section_count(sphere_coarse.mesh, pl, 1.5) == 2


def test_catenoid_axis_and_neck_lines(catenoid_coarse):
    m = catenoid_coarse.mesh
    axis = ig.PlaneThrough.through(np.zeros(3), [[0.0, 0, 1.0]])
    assert ig.section_count(m, axis, 50.0) == 0
    horiz = ig.PlaneThrough.through(np.zeros(3), [[np.cos(0.23), np.sin(0.23), 0]])
    assert ig.section_count(m, horiz, 50.0) == 2


def test_generic_line_hits_plane_once(plane_coarse):
    pl = ig.PlaneThrough.through(np.zeros(3), [[0.1, -0.2, 1.0]])
    assert ig.section_count(plane_coarse.mesh, pl, 10.0) == 1


def test_vertex_hit_resolved_by_jitter(catenoid_coarse):
    # aim exactly at the neck vertex at angle 0; the hit lands on a corner,
    # gets jittered, and must still resolve to the two neck crossings
    counts, jittered = ig.plane_mesh_intersections(
        catenoid_coarse.mesh, np.zeros(3), np.array([[[1.0, 0.0, 0.0]]]),
        radius=50.0,
    )
    assert jittered >= 1
    assert counts[0] == 2


def test_parabola_plane_sections_exact(parabola_coarse):
    m = parabola_coarse.mesh
    w_dirs = np.array([[0.0, 0, 1.0, 0], [0.0, 0, 0, 1.0]])
    pl1 = ig.PlaneThrough.through([0.3, 0.17, 0.0, 0.0], w_dirs)
    assert ig.section_count(m, pl1, 10.0) == 1
    c = 0.25 * np.exp(0.6j)
    z_dirs = np.array([[1.0, 0, 0, 0], [0.0, 1.0, 0, 0]])
    pl2 = ig.PlaneThrough.through([0.0, 0.0, c.real, c.imag], z_dirs)
    assert ig.section_count(m, pl2, 5.0) == 2


def test_on_surface_base_rejected(parabola_coarse):
    pl = ig.PlaneThrough.through(np.zeros(4),
                                 np.array([[0.0, 0, 1.0, 0], [0.0, 0, 0, 1.0]]))
    with pytest.raises(ValueError, match="ill-posed"):
        ig.section_count(parabola_coarse.mesh, pl, 10.0)


def test_counting_guards(catenoid_coarse):
    m, a = catenoid_coarse.mesh, catenoid_coarse.base_point
    with pytest.raises(ValueError, match="exceeds"):
        ig.counting_sweep(m, a, [500.0], samples=200, seed=1)
    with pytest.raises(ValueError, match="increasing"):
        ig.counting_sweep(m, a, [10.0, 5.0], samples=200, seed=1)
    with pytest.raises(ValueError, match="seed"):
        ig.counting_sweep(m, a, [10.0], samples=200)
    with pytest.raises(ValueError, match="samples"):
        ig.counting_sweep(m, a, [10.0], samples=50, seed=1)


# --------------------------------------------------------------------------
# Monte-Carlo counting averages


def test_plane_counting_mean_oracle(plane_coarse):
    radii = np.array([2.0, 5.0, 10.0, 20.0])
    out = ig.counting_sweep(plane_coarse.mesh, plane_coarse.base_point,
                            radii, samples=20000, seed=7)
    expected = 1.0 - 1.0 / radii
    # 5 sigma of the worst level plus a small slack for the meshed-out
    # puncture around the axis
    for k, r in enumerate(radii):
        se = out["ci95"][k] / 1.96
        assert abs(out["means"][k] - expected[k]) <= 5 * se + 2e-3


def test_counting_nondecreasing_shared_samples(catenoid_coarse, parabola_coarse):
    for spec, radii in [
        (catenoid_coarse, [2.0, 5.0, 10.0, 30.0, 60.0]),
        (parabola_coarse, [2.0, 10.0, 30.0]),
    ]:
        out = ig.counting_sweep(spec.mesh, spec.base_point, radii,
                                samples=4000, seed=3)
        assert np.all(np.diff(out["means"]) >= 0), spec.name
        assert out["max_observed"] >= int(np.ceil(out["means"][-1]))


def test_counting_deterministic(catenoid_coarse):
    m, a = catenoid_coarse.mesh, catenoid_coarse.base_point
    s1 = ig.counting_sweep(m, a, [5.0, 20.0], samples=3000, seed=9)
    s2 = ig.counting_sweep(m, a, [5.0, 20.0], samples=3000, seed=9)
    assert np.array_equal(s1["means"], s2["means"])
    assert s1["max_observed"] == s2["max_observed"]
    s3 = ig.counting_sweep(m, a, [5.0, 20.0], samples=3000, seed=10)
    assert not np.array_equal(s1["means"], s3["means"])


def test_counting_rotation_invariance(catenoid_coarse, rng):
    # Haar sections are rotation invariant, so rotated copies of one sample
    # estimate the same mean within joint confidence bands
    m, a = catenoid_coarse.mesh, catenoid_coarse.base_point
    sec, comp = ig.sample_grassmann(3, 2, 12000, rng)
    rot = _rotz(0.37) @ np.array([[1, 0, 0], [0, np.cos(0.9), -np.sin(0.9)],
                                  [0, np.sin(0.9), np.cos(0.9)]])
    counts, _ = ig.plane_mesh_intersections(m, a, sec, comp, radius=20.0)
    counts_r, _ = ig.plane_mesh_intersections(
        m, a, sec @ rot.T, comp @ rot.T, radius=20.0)
    se = np.hypot(counts.std(ddof=1), counts_r.std(ddof=1)) / np.sqrt(len(sec))
    assert abs(counts.mean() - counts_r.mean()) <= 5 * se


# --------------------------------------------------------------------------
# radial-projection jacobian


def test_radial_jacobian_matches_decomposition(catenoid_coarse, rng):
    m = catenoid_coarse.mesh
    idx = rng.integers(0, len(m.triangles), 64)
    pts = m.centroids()[idx]
    frames = m.frames()[idx]
    jac = ig.radial_jacobian(pts, frames, np.zeros(3))
    from mingauge.geometry import decompose_radial

    _, nor = decompose_radial(pts, np.zeros(3), frames)
    r = np.linalg.norm(pts, axis=1)
    alt = np.linalg.norm(nor, axis=1) / r**3
    # the two routes differ by cancellation noise where the normal part is
    # tiny relative to |x|
    np.testing.assert_allclose(jac, alt, rtol=1e-10)


@pytest.mark.parametrize("name", ["catenoid", "enneper"])
def test_radial_jacobian_fd_oracle(coarse, name, rng):
    spec = coarse(name)
    ch = spec.chart
    u = rng.uniform(ch.domain[0] + 0.05, ch.domain[1] - 0.05, 1000)
    v = rng.uniform(ch.domain[2], ch.domain[3], 1000)
    pts = ch.points(u, v)
    xu, xv = ch.derivatives(u, v)
    jac = ig.radial_jacobian(pts, orthonormal_frame(xu, xv), np.zeros(3))

    h = 1e-5

    def ray(uu, vv):
        p = ch.points(uu, vv)
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    fu = (ray(u + h, v) - ray(u - h, v)) / (2 * h)
    fv = (ray(u, v + h) - ray(u, v - h)) / (2 * h)
    fd = np.linalg.norm(np.cross(fu, fv), axis=-1)
    fd /= np.linalg.norm(np.cross(xu, xv), axis=-1)
    np.testing.assert_allclose(fd, jac, rtol=1e-6)


def test_defect_integrand_dominated_by_jacobian(catenoid_coarse):
    # |x_n|^2/|x|^4 <= |x_n|/|x|^3 pointwise since |x_n| <= |x|
    m, a = catenoid_coarse.mesh, catenoid_coarse.base_point
    pts = np.concatenate([m.centroids(), m.corners().reshape(-1, 3)])
    owners = np.concatenate([
        np.arange(len(m.triangles)),
        np.repeat(np.arange(len(m.triangles)), 3),
    ])
    d = inv.defect_integrand(m, a)(pts, owners)
    j = ig.jacobian_integrand(m, a)(pts, owners)
    assert np.all(d <= j * (1 + 1e-12))


def test_jacobian_counting_chain(catenoid_coarse):
    # integrating the projection jacobian over the ball equals
    # (omega_3 / 2) x the mean line count at the same radius
    m, a = catenoid_coarse.mesh, catenoid_coarse.base_point
    R = 20.0
    lhs, qerr = integrate_with_error(
        m, ig.jacobian_integrand(m, a), ball_region(a, R))
    avg = ig.counting_average(m, a, R, samples=30000, seed=4)
    rhs = 2 * np.pi * avg["mean"]
    ci = 2 * np.pi * avg["ci95"]
    assert abs(lhs - rhs) <= ci + qerr + 0.02 * lhs


# --------------------------------------------------------------------------
# spherical regions


def test_geodesic_area_exact_cases():
    full = spherical_region("full", refinement=3)
    hemi = spherical_region("hemisphere", refinement=2, sectors=64)
    assert abs(ig.geodesic_area(full) - 4 * np.pi) < 1e-10
    assert abs(ig.geodesic_area(hemi) - 2 * np.pi) < 1e-10
    cap = spherical_region("cap", np.pi / 3, refinement=2, sectors=64)
    area = ig.geodesic_area(cap)
    exact = 2 * np.pi * (1 - np.cos(np.pi / 3))
    assert area < exact  # inscribed geodesic polygon
    assert area == pytest.approx(exact, rel=2e-3)


def test_spherical_membership(rng):
    hemi = spherical_region("hemisphere", refinement=2, sectors=64)
    u = rng.standard_normal((500, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    counts, gray = ig.spherical_counts(hemi, u)
    clear = ~gray & (np.abs(u[:, 2]) > 1e-3)
    assert np.array_equal(counts[clear], (u[clear, 2] > 0).astype(int))


def test_crofton_full_and_hemisphere_exact():
    for kind, kw, expect in [
        ("full", {"refinement": 3}, 4 * np.pi),
        ("hemisphere", {"refinement": 2, "sectors": 64}, 2 * np.pi),
    ]:
        reg = spherical_region(kind, **kw)
        out = ig.crofton_verify(reg, samples=20000, seed=5)
        assert out["passed"]
        assert out["ci95"] == 0.0  # antipodal pairing kills the variance
        assert out["lhs"] == pytest.approx(expect, abs=1e-10)
        assert out["gap"] <= 1e-9 * expect


def test_crofton_cap(rng):
    reg = spherical_region("cap", np.pi / 3, refinement=2, sectors=64)
    out = ig.crofton_verify(reg, samples=40000, seed=0)
    assert out["passed"], out
    assert out["ci95"] <= 0.01 * out["lhs"]


def test_crofton_weighted():
    # f = z^2 on the full sphere integrates to 4*pi/3
    reg = spherical_region("full", refinement=3)
    out = ig.crofton_verify(reg, samples=30000, seed=12,
                            f=lambda pts: pts[:, 2] ** 2)
    assert out["passed"], out
    assert out["rhs"] == pytest.approx(4 * np.pi / 3, rel=0.02)


def test_crofton_requires_seed():
    reg = spherical_region("full", refinement=2)
    with pytest.raises(ValueError, match="seed"):
        ig.crofton_verify(reg, samples=1000)


def test_crofton_deterministic():
    reg = spherical_region("cap", 0.8, refinement=2, sectors=64)
    a = ig.crofton_verify(reg, samples=5000, seed=21)
    b = ig.crofton_verify(reg, samples=5000, seed=21)
    assert a["rhs"] == b["rhs"] and a["ci95"] == b["ci95"]


# --------------------------------------------------------------------------
# counting-based bounds


def test_defect_counting_bound_catenoid(catenoid_coarse):
    chk = ig.check_defect_counting_bound(
        catenoid_coarse.mesh, catenoid_coarse.base_point,
        radius=20.0, samples=20000, seed=11)
    assert chk["passed"]
    assert chk["margin"] > 1.0  # comfortably positive, not a borderline pass
    assert chk["counting"]["mean"] >= 1.0


def test_defect_counting_bound_plane_margin(plane_coarse):
    # mean count -> 1 - 1/R and defect -> pi, so the margin approaches
    # 2*pi*(1 - 1/R) - pi = pi*(1 - 2/R)
    chk = ig.check_defect_counting_bound(
        plane_coarse.mesh, plane_coarse.base_point, samples=20000, seed=6)
    assert chk["passed"]
    R = chk["radius"]
    assert chk["margin"] == pytest.approx(np.pi * (1 - 2 / R), abs=0.03)


def test_defect_counting_bound_parabola(parabola_coarse):
    chk = ig.check_defect_counting_bound(
        parabola_coarse.mesh, parabola_coarse.base_point,
        radius=30.0, samples=5000, seed=2)
    assert chk["passed"]
    assert chk["counting"]["mean"] == pytest.approx(2.0, abs=0.1)


def test_ends_counting_bound():
    out = ig.check_ends_counting_bound(2, 2)
    assert out["passed"] and out["constant"] == pytest.approx(8.0)
    assert out["bound"] == pytest.approx(16.0)
    loose = ig.check_ends_counting_bound(2, 2, starlike=False)
    assert loose["bound"] == pytest.approx(32.0)
    assert not ig.check_ends_counting_bound(100, 2)["passed"]
