"""Radial integral invariants of a truncated minimal-surface mesh.

Everything here revolves around the vector from a base point ``a`` to a
surface point, split into its components tangent and normal to the surface:

* projective volume  -- growth rate of the integral of |x - a|^(-p), also the
  limit of the normalized sphere flux;
* radial defect      -- integral of |normal part|^2 / |x - a|^(p + 2), a
  convergent measure of how far the surface is from a cone through ``a``;
* sphere flux        -- line integral of |tangent part| over the curve where
  the mesh meets a sphere, normalized by the sphere radius;
* boundary constant  -- conormal flux of the same field through a genuine
  (non-truncation) boundary.

The divergence theorem ties these together; the check_* functions verify the
resulting identities and inequalities on a concrete mesh, each by two
independent discretization routes (curve integrals vs region quadrature), so
agreement is evidence of correctness rather than of a shared bug.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi

import numpy as np

from .errors import IdentityNotApplicableError
from .geometry import (
    SimplicialSurface,
    ball_region,
    integrate_mesh,
    integrate_with_error,
    level_polyline,
    shell_region,
    submesh,
    surface_measure,
)
from .geometry.types import _rows_lookup
from .ends import triangle_components

RIM_FRACTION = 0.999
GAUSS_OFFSET = 0.5 / np.sqrt(3.0)  # 2-point Gauss nodes on a segment


def sphere_area(p: int) -> float:
    """Measure of the unit sphere S^(p-1) in R^p (2, 2*pi, 4*pi, ...)."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    return 2.0 * pi ** (p / 2.0) / gamma(p / 2.0)


def _split_radial(mesh: SimplicialSurface, points, owners, center):
    """(x, tangential, normal) parts of x = point - center, per owner facet."""
    frames = mesh.frames()[owners]  # (k, 2, n)
    x = points - center
    coef = np.einsum("kn,kjn->kj", x, frames)
    tang = np.einsum("kj,kjn->kn", coef, frames)
    return x, tang, x - tang


def defect_integrand(mesh: SimplicialSurface, center, p: int = 2):
    """|normal part|^2 / |x - center|^(p + 2), vectorized over points."""
    c = np.asarray(center, dtype=float)

    def f(points, owners):
        x, _, nor = _split_radial(mesh, points, owners, c)
        r2 = np.sum(x * x, axis=1)
        return np.sum(nor * nor, axis=1) / r2 ** ((p + 2) / 2.0)

    return f


def inverse_power_integrand(center, p: int = 2):
    """|x - center|^(-p), vectorized over points."""
    c = np.asarray(center, dtype=float)

    def f(points, owners):
        r2 = np.sum((points - c) ** 2, axis=1)
        return r2 ** (-p / 2.0)

    return f


# --------------------------------------------------------------------------
# sphere flux


@dataclass
class FluxProfile:
    """Sphere flux across a sweep of radii.

    raw[k] is the line integral of |tangent part of x - center| over the
    level curve |x - center| = levels[k]; errors[k] the quadrature error
    estimate for it (midpoint vs 2-point Gauss on each segment).
    """

    levels: np.ndarray
    raw: np.ndarray
    errors: np.ndarray
    curve_lengths: np.ndarray
    p: int
    center: np.ndarray

    @property
    def flux(self) -> np.ndarray:
        """raw / t^(p-1): the flux J(t)."""
        return self.raw / self.levels ** (self.p - 1)

    @property
    def normalized(self) -> np.ndarray:
        """raw / t^p: the monotone quantity converging to projective volume."""
        return self.raw / self.levels**self.p

    @property
    def empty_levels(self) -> np.ndarray:
        """Levels where the sphere missed the mesh (flux recorded as 0)."""
        return self.curve_lengths == 0.0


def _curve_flux(mesh, curve, center):
    """(midpoint value, gauss value, length) of the |tangent| line integral."""
    c = np.asarray(center, dtype=float)
    mid_total = 0.0
    gauss_total = 0.0
    length = 0.0

    def tang_norm(points, owners):
        _, tang, _ = _split_radial(mesh, points, owners, c)
        return np.linalg.norm(tang, axis=1)

    for pts, closed, owners in zip(curve.polylines, curve.closed,
                                   curve.segment_triangles):
        if closed:
            A, B = pts, np.roll(pts, -1, axis=0)
        else:
            A, B = pts[:-1], pts[1:]
        owners = np.asarray(owners)
        d = B - A
        L = np.linalg.norm(d, axis=1)
        mid = 0.5 * (A + B)
        mid_total += float(np.sum(L * tang_norm(mid, owners)))
        g1 = tang_norm(mid - GAUSS_OFFSET * d, owners)
        g2 = tang_norm(mid + GAUSS_OFFSET * d, owners)
        gauss_total += float(np.sum(L * 0.5 * (g1 + g2)))
        length += float(L.sum())
    return mid_total, gauss_total, length


def flux_profile(mesh: SimplicialSurface, center, levels, p: int = 2) -> FluxProfile:
    """Sweep the sphere flux over the given radii."""
    center = np.asarray(center, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if len(levels) > 1 and np.any(np.diff(levels) <= 0):
        raise ValueError("flux levels must be strictly increasing")
    raw = np.zeros(len(levels))
    errors = np.zeros(len(levels))
    lengths = np.zeros(len(levels))
    for k, t in enumerate(levels):
        curve = level_polyline(mesh, center, t)
        if curve.empty:
            continue
        mid, gauss, length = _curve_flux(mesh, curve, center)
        raw[k] = gauss
        errors[k] = abs(gauss - mid) + 1e-14 * abs(gauss)
        lengths[k] = length
    return FluxProfile(levels, raw, errors, lengths, p, center)


def max_safe_radius(mesh: SimplicialSurface, center, margin: float = 0.98) -> float:
    """Largest |x - center| radius guaranteed covered by the truncated mesh."""
    center = np.asarray(center, dtype=float)
    if mesh.truncation_radius is None:
        return margin * float(np.linalg.norm(mesh.vertices - center, axis=1).max())
    return margin * (mesh.truncation_radius - float(np.linalg.norm(center)))


def level_grid(mesh: SimplicialSurface, center, count: int = 24,
               lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Geometric radius sweep from just outside the surface to the rim."""
    center = np.asarray(center, dtype=float)
    if hi is None:
        hi = max_safe_radius(mesh, center)
    if lo is None:
        dmin = float(np.linalg.norm(mesh.vertices - center, axis=1).min())
        lo = 1.3 * dmin if dmin > 1e-9 else 0.02 * hi
        lo = min(lo, 0.5 * hi)
    return np.geomspace(lo, hi, count)


# --------------------------------------------------------------------------
# headline invariants


def projective_volume(mesh: SimplicialSurface, center, p: int = 2,
                      levels=None, num_levels: int = 24,
                      cut_depth: int = 5, num_fit: int = 6) -> dict:
    """Projective volume via two routes: flux limit and log-growth slope.

    Route one extrapolates the normalized flux to infinite radius with the
    tail model V - b/t - c/t^2 fitted over the outer half of the sweep
    (plane-like ends decay as 1/t^2, curved graphs as 1/t).  Route two fits
    integral(|x - a|^(-p)) against log(radius) and reads off the slope.
    Disagreement between the routes, or a bad tail fit, folds into the error;
    past 10% the estimate is flagged as truncation-limited (the surface may
    have unbounded density, or the mesh may simply be cut too soon).
    """
    center = np.asarray(center, dtype=float)
    if levels is None:
        levels = level_grid(mesh, center, num_levels)
    levels = np.asarray(levels, dtype=float)
    profile = flux_profile(mesh, center, levels, p)
    flux_at_rim = float(profile.normalized[-1])
    quad_err = float(profile.errors[-1] / levels[-1] ** p)

    tail = levels >= np.sqrt(levels[0] * levels[-1])
    ts, ys = levels[tail], profile.normalized[tail]
    basis = np.stack([np.ones_like(ts), 1.0 / ts, 1.0 / ts**2], axis=1)
    coef, *_ = np.linalg.lstsq(basis, ys, rcond=None)
    value = float(coef[0])
    fit_rms = float(np.sqrt(np.mean((basis @ coef - ys) ** 2)))

    fit_levels = ts[np.unique(np.linspace(0, len(ts) - 1, num_fit).astype(int))]
    integrand = inverse_power_integrand(center, p)
    log_integrals = np.array([
        integrate_mesh(mesh, integrand, ball_region(center, R), cut_depth)
        for R in fit_levels
    ])
    slope = float(np.polyfit(np.log(fit_levels), log_integrals, 1)[0])

    disagreement = abs(value - slope)
    flags = []
    scale = max(abs(value), 1e-12)
    if disagreement > 0.10 * scale or fit_rms > 0.05 * scale:
        flags.append("unreliable_truncation")
    return {
        "value": value,
        "method": "flux_limit",
        "flux_estimate": flux_at_rim,
        "slope_estimate": slope,
        "error": quad_err + max(disagreement, fit_rms),
        "flags": flags,
        "profile": profile,
        "fit_levels": fit_levels,
        "log_integrals": log_integrals,
    }


def radial_defect(mesh: SimplicialSurface, center, radius: float | None = None,
                  p: int = 2, cut_depth: int = 6) -> dict:
    """Defect integral over the ball |x - center| < radius, with error bar.

    The error combines a mesh-refinement estimate with a tail proxy: the
    measured drop of the normalized flux over the outer half of the range,
    which scales like the part of the integral lost to truncation.
    """
    center = np.asarray(center, dtype=float)
    if radius is None:
        radius = max_safe_radius(mesh, center)
    value, err = integrate_with_error(
        mesh, defect_integrand(mesh, center, p), ball_region(center, radius),
        cut_depth,
    )
    prof = flux_profile(mesh, center, [radius / 2.0, radius], p)
    tail = abs(prof.normalized[1] - prof.normalized[0]) / p
    return {
        "value": float(value),
        "method": "direct_quadrature",
        "error": float(err + tail),
        "quadrature_error": float(err),
        "tail_estimate": float(tail),
        "radius": float(radius),
    }


def boundary_constant(mesh: SimplicialSurface, center, p: int = 2,
                      exclude_rim: bool = True,
                      within_radius: float | None = None) -> dict:
    """Conormal flux of (x - a)/|x - a|^p through the genuine boundary.

    Truncation-rim edges (on the cutting sphere) are excluded by default;
    what remains is the boundary the surface actually has.  The conormal is
    the in-facet outward unit vector perpendicular to each boundary edge.
    """
    center = np.asarray(center, dtype=float)
    edges = mesh.boundary_edges
    if len(edges) == 0:
        return {"value": 0.0, "error": 0.0, "num_edges": 0}
    keep = np.ones(len(edges), dtype=bool)
    if exclude_rim and mesh.truncation_radius is not None:
        r = np.linalg.norm(mesh.vertices[edges], axis=2)
        keep &= ~np.all(r >= RIM_FRACTION * mesh.truncation_radius, axis=1)
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    if within_radius is not None:
        keep &= np.linalg.norm(mids - center, axis=1) <= within_radius
    edges = edges[keep]
    if len(edges) == 0:
        return {"value": 0.0, "error": 0.0, "num_edges": 0}

    # owner triangle of each boundary edge (edges are used exactly once)
    keys, starts, counts, owner = mesh.edge_table()
    idx = _rows_lookup(keys, np.sort(edges, axis=1))
    owners = owner[starts[idx]]

    va = mesh.vertices[edges[:, 0]]
    vb = mesh.vertices[edges[:, 1]]
    d = vb - va
    L = np.linalg.norm(d, axis=1)
    ehat = d / L[:, None]
    mid = 0.5 * (va + vb)
    w = mid - mesh.centroids()[owners]
    w -= np.sum(w * ehat, axis=1)[:, None] * ehat
    nu = w / np.linalg.norm(w, axis=1)[:, None]

    def field_dot_nu(points):
        x = points - center
        r = np.linalg.norm(x, axis=1)
        return np.sum(x * nu, axis=1) / r**p

    v_mid = float(np.sum(L * field_dot_nu(mid)))
    g1 = field_dot_nu(mid - GAUSS_OFFSET * d)
    g2 = field_dot_nu(mid + GAUSS_OFFSET * d)
    v_gauss = float(np.sum(L * 0.5 * (g1 + g2)))
    return {
        "value": v_gauss,
        "error": abs(v_gauss - v_mid) + 1e-14 * abs(v_gauss),
        "num_edges": int(len(edges)),
    }


# --------------------------------------------------------------------------
# identity and inequality checks


def _gap(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)


def check_monotonicity(profile: FluxProfile, tol: float = 1e-3) -> dict:
    """Normalized flux must not decrease as the radius grows."""
    norm = profile.normalized
    running = np.maximum.accumulate(norm)
    drop = running - norm
    k = int(np.argmax(drop))
    scale = max(float(norm.max()), 1e-12)
    rel = float(drop[k]) / scale
    return {
        "passed": bool(rel <= tol),
        "max_violation": float(drop[k]),
        "rel_violation": rel,
        "at_level": float(profile.levels[k]),
        "tol": tol,
    }


def check_flux_shell_identity(mesh: SimplicialSurface, center, t_lo: float,
                              t_hi: float, p: int = 2, tol: float = 2e-2,
                              cut_depth: int = 6) -> dict:
    """Flux increment across a shell equals p times the defect inside it.

    Left side: curve integrals on the two spheres.  Right side: region
    quadrature of the defect integrand over the shell.  These share no
    discretization machinery beyond the mesh itself.
    """
    center = np.asarray(center, dtype=float)
    prof = flux_profile(mesh, center, [t_lo, t_hi], p)
    lhs = float(prof.normalized[1] - prof.normalized[0])
    rhs = p * integrate_mesh(
        mesh, defect_integrand(mesh, center, p),
        shell_region(center, t_lo, t_hi), cut_depth,
    )
    gap = _gap(lhs, rhs)
    return {"passed": bool(gap <= tol), "lhs": lhs, "rhs": float(rhs),
            "rel_gap": gap, "tol": tol, "t_lo": float(t_lo),
            "t_hi": float(t_hi)}


def check_defect_volume_identity(mesh: SimplicialSurface, center,
                                 radius: float | None = None, p: int = 2,
                                 tol: float = 2e-2, cut_depth: int = 6) -> dict:
    """p * defect = normalized flux + boundary constant, at the cut radius.

    With the radius sent to infinity the flux term becomes the projective
    volume; at finite truncation the identity is exact, so any gap measures
    pure discretization error.

    A center that coincides with mesh vertices counts as lying on the
    surface; each sheet through it contributes one unit-sphere area to the
    normalized flux at vanishing radius, and the identity subtracts that.
    The multiplicity is the number of coincident vertices (one per sheet in
    the catalog meshes).  Meshes that excise a small hole around the center
    instead carry the same term through the boundary constant, so the two
    routes never double-count.
    """
    center = np.asarray(center, dtype=float)
    if radius is None:
        radius = max_safe_radius(mesh, center)
    dist = np.linalg.norm(mesh.vertices - center, axis=1)
    sheets = int(np.count_nonzero(
        dist <= 1e-9 * (1.0 + float(np.linalg.norm(center)))))
    q = radial_defect(mesh, center, radius, p, cut_depth)
    prof = flux_profile(mesh, center, [radius], p)
    c = boundary_constant(mesh, center, p, exclude_rim=True,
                          within_radius=radius)
    lhs = p * q["value"]
    rhs = float(prof.normalized[0]) + c["value"] - sheets * sphere_area(p)
    gap = _gap(lhs, rhs)
    return {
        "passed": bool(gap <= tol),
        "lhs": lhs,
        "rhs": rhs,
        "rel_gap": gap,
        "tol": tol,
        "radius": float(radius),
        "defect": q,
        "flux_normalized": float(prof.normalized[0]),
        "boundary_constant": c,
        "on_surface_multiplicity": sheets,
    }


def check_preimage_count_identity(mesh: SimplicialSurface, center,
                                  preimages: int = 1,
                                  radius: float | None = None, p: int = 2,
                                  tol: float = 2e-2,
                                  cut_depth: int = 6) -> dict:
    """For a base point on the surface: flux = p * defect + k * sphere area.

    ``preimages`` is the number k of surface points mapping to the base
    point (1 for an embedded point).  Each preimage contributes one full
    unit-sphere measure to the flux as the inner radius shrinks.
    """
    center = np.asarray(center, dtype=float)
    dmin = float(np.linalg.norm(mesh.vertices - center, axis=1).min())
    scale = max(1.0, float(np.abs(mesh.vertices).max()))
    if dmin > 1e-6 * scale:
        raise IdentityNotApplicableError(
            f"base point is {dmin:.3g} away from the surface; this identity "
            "needs an on-surface base point"
        )
    if radius is None:
        radius = max_safe_radius(mesh, center)
    prof = flux_profile(mesh, center, [radius], p)
    q = radial_defect(mesh, center, radius, p, cut_depth)
    lhs = float(prof.normalized[0])
    rhs = p * q["value"] + preimages * sphere_area(p)
    gap = _gap(lhs, rhs)
    return {
        "passed": bool(gap <= tol),
        "lhs": lhs,
        "rhs": rhs,
        "rel_gap": gap,
        "tol": tol,
        "preimages": int(preimages),
        "radius": float(radius),
    }


def preimage_count_residual(volume: float, defect: float, preimages: int,
                            p: int = 2) -> float:
    """Residual of volume = p * defect + preimages * sphere_area(p).

    Pure arithmetic on already-known values; use with closed-form inputs
    (e.g. a flat plane through the base point: volume 2*pi, defect 0, one
    preimage) or with independently estimated ones.
    """
    return abs(volume - p * defect - preimages * sphere_area(p))


def check_band_area_bound(mesh: SimplicialSurface, center, r_lo: float,
                          r_hi: float, p: int = 2, slack: float = 5e-3,
                          cut_depth: int = 6) -> dict:
    """Any component crossing the whole shell has area >= the width bound.

    The bound is sphere_area(p)/p * ((r_hi - r_lo)/2)^p.  Components are
    taken over triangles meeting the shell; one qualifies when it has
    vertices on or inside the inner sphere and on or outside the outer one.
    Vacuous (no qualifying component) is reported as not applicable.
    """
    center = np.asarray(center, dtype=float)
    dist = np.linalg.norm(mesh.vertices - center, axis=1)
    tri_d = dist[mesh.triangles]
    tri_mask = (tri_d.min(axis=1) < r_hi) & (tri_d.max(axis=1) > r_lo)
    labels, count = triangle_components(mesh, tri_mask)
    bound = sphere_area(p) / p * ((r_hi - r_lo) / 2.0) ** p
    areas = []
    region = shell_region(center, r_lo, r_hi)
    for comp in range(count):
        comp_tris = labels == comp
        if not (tri_d[comp_tris].min() <= r_lo and tri_d[comp_tris].max() >= r_hi):
            continue
        sub = submesh(mesh, comp_tris)
        areas.append(float(surface_measure(sub, region, cut_depth)))
    if not areas:
        return {"applicable": False, "passed": True, "bound": float(bound),
                "areas": [], "num_crossing": 0}
    areas = sorted(areas)
    return {
        "applicable": True,
        "passed": bool(areas[0] >= bound * (1.0 - slack)),
        "bound": float(bound),
        "areas": areas,
        "num_crossing": len(areas),
        "min_ratio": float(areas[0] / bound),
    }


def check_density_identity(mesh: SimplicialSurface, center, levels,
                           p: int = 2, tol: float = 1e-2,
                           cut_depth: int = 6) -> dict:
    """p * area inside each sphere equals the raw flux through it.

    Holds for any base point provided the surface has no genuine boundary
    inside the largest ball; if it does, the check refuses to run.  Reports
    the worst relative residual over the level sweep.
    """
    center = np.asarray(center, dtype=float)
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    c = boundary_constant(mesh, center, p, exclude_rim=True,
                          within_radius=float(levels.max()))
    if c["num_edges"] > 0:
        raise IdentityNotApplicableError(
            "surface has genuine boundary inside the ball; the area-flux "
            "identity does not apply"
        )
    prof = flux_profile(mesh, center, levels, p)
    residuals = np.empty(len(levels))
    areas = np.empty(len(levels))
    for k, t in enumerate(levels):
        areas[k] = surface_measure(mesh, ball_region(center, t), cut_depth)
        residuals[k] = _gap(p * areas[k], float(prof.raw[k]))
    worst = int(np.argmax(residuals))
    return {
        "passed": bool(residuals[worst] <= tol),
        "max_residual": float(residuals[worst]),
        "at_level": float(levels[worst]),
        "tol": tol,
        "levels": levels,
        "areas": areas,
        "residuals": residuals,
    }
