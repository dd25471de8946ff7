"""Core geometric types: triangulated surfaces, charts, level curves, frames.

All ambient points are plain float64 numpy arrays of shape (n,) with n the
ambient dimension (3 or 4 in practice).  Tangent frames are arrays of shape
(2, n) whose rows are orthonormal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidFrameError, MeshTopologyError

FRAME_TOL = 1e-9
MIN_TRIANGLE_AREA = 1e-14


def orthonormal_frame(xu: np.ndarray, xv: np.ndarray) -> np.ndarray:
    """Gram-Schmidt a pair of tangent vectors into a (2, n) orthonormal frame.

    Broadcasts over leading axes: inputs (..., n) give frames (..., 2, n).
    """
    xu = np.asarray(xu, dtype=float)
    xv = np.asarray(xv, dtype=float)
    e1 = xu / np.linalg.norm(xu, axis=-1, keepdims=True)
    w = xv - np.sum(xv * e1, axis=-1, keepdims=True) * e1
    e2 = w / np.linalg.norm(w, axis=-1, keepdims=True)
    return np.stack([e1, e2], axis=-2)


def check_frame(frame: np.ndarray, tol: float = FRAME_TOL) -> None:
    """Raise InvalidFrameError unless the rows of ``frame`` are orthonormal."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2:
        raise InvalidFrameError(f"frame must be 2-d, got shape {frame.shape}")
    gram = frame @ frame.T
    dev = np.max(np.abs(gram - np.eye(frame.shape[0])))
    if not np.isfinite(dev) or dev > tol:
        raise InvalidFrameError(f"frame rows not orthonormal (deviation {dev:.3e})")


def decompose_radial(point, a, frame, check: bool = True):
    """Split ``point - a`` into its tangential and normal parts.

    ``frame`` rows span the tangent plane at ``point``.  Supports batched
    input: ``point`` (..., n), ``frame`` (..., 2, n), ``a`` (n,).
    Returns (tangential, normal), both shaped like ``point``.
    """
    point = np.asarray(point, dtype=float)
    frame = np.asarray(frame, dtype=float)
    a = np.asarray(a, dtype=float)
    if check:
        f2 = frame.reshape(-1, frame.shape[-2], frame.shape[-1])
        gram = np.einsum("kin,kjn->kij", f2, f2)
        dev = np.max(np.abs(gram - np.eye(frame.shape[-2])))
        if not np.isfinite(dev) or dev > FRAME_TOL:
            raise InvalidFrameError(f"frame rows not orthonormal (deviation {dev:.3e})")
    x = point - a
    coef = np.einsum("...n,...kn->...k", x, frame)
    tangential = np.einsum("...k,...kn->...n", coef, frame)
    return tangential, x - tangential


@dataclass
class SimplicialSurface:
    """Triangulated 2-surface immersed in R^n.

    vertices         (V, n) float64 coordinates
    triangles        (T, 3) int vertex indices
    boundary_edges   (B, 2) int vertex index pairs lying on the mesh boundary
    truncation_radius  |x| at which an unbounded surface was cut off, or None
    name             free-form label used in reports
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    truncation_radius: float | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        be = np.asarray(self.boundary_edges, dtype=np.int64)
        self.boundary_edges = be.reshape(-1, 2)
        if self.vertices.ndim != 2:
            raise MeshTopologyError("vertices must be (V, n)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshTopologyError("triangles must be (T, 3)")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshTopologyError("non-finite vertex coordinates")
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise MeshTopologyError("triangle vertex index out of range")
        areas = self.areas()
        if areas.size and areas.min() <= MIN_TRIANGLE_AREA:
            k = int(np.argmin(areas))
            raise MeshTopologyError(
                f"triangle {k} is degenerate (area {areas.min():.3e})"
            )
        self._check_edges()

    # -- derived quantities, computed once ---------------------------------
    def corners(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (T, 3, n)."""
        if "corners" not in self._cache:
            self._cache["corners"] = self.vertices[self.triangles]
        return self._cache["corners"]

    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            c = self.corners()
            self._cache["areas"] = triangle_areas(c)
        return self._cache["areas"]

    def centroids(self) -> np.ndarray:
        if "centroids" not in self._cache:
            self._cache["centroids"] = self.corners().mean(axis=1)
        return self._cache["centroids"]

    def frames(self) -> np.ndarray:
        """Per-triangle orthonormal tangent frames, shape (T, 2, n)."""
        if "frames" not in self._cache:
            c = self.corners()
            self._cache["frames"] = orthonormal_frame(
                c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
            )
        return self._cache["frames"]

    def edge_table(self):
        """Map undirected edge -> array of adjacent triangle indices."""
        if "edge_table" not in self._cache:
            tri = self.triangles
            e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
            e.sort(axis=1)
            owner = np.tile(np.arange(len(tri)), 3)
            order = np.lexsort((e[:, 1], e[:, 0]))
            e, owner = e[order], owner[order]
            keys, starts = np.unique(e, axis=0, return_index=True)
            counts = np.diff(np.append(starts, len(e)))
            self._cache["edge_table"] = (keys, starts, counts, owner)
        return self._cache["edge_table"]

    def interior_edge_pairs(self):
        """(E, 2) triangle index pairs sharing an interior edge, plus the edges."""
        keys, starts, counts, owner = self.edge_table()
        two = counts == 2
        i0 = starts[two]
        pairs = np.stack([owner[i0], owner[i0 + 1]], axis=1)
        return keys[two], pairs

    def _check_edges(self):
        keys, starts, counts, owner = self.edge_table()
        if counts.size and counts.max() > 2:
            raise MeshTopologyError("an edge is shared by more than two triangles")
        if len(self.boundary_edges):
            be = np.sort(self.boundary_edges, axis=1)
            # every declared boundary edge must be a mesh edge used exactly once
            idx = _rows_lookup(keys, be)
            if np.any(idx < 0):
                raise MeshTopologyError("boundary edge not present in triangulation")
            if np.any(counts[idx] != 1):
                raise MeshTopologyError("declared boundary edge is interior")
        # and conversely: every once-used edge should be declared
        n_single = int(np.sum(counts == 1))
        if n_single != len(self.boundary_edges):
            raise MeshTopologyError(
                f"mesh has {n_single} boundary edges but {len(self.boundary_edges)} declared"
            )

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def total_area(self) -> float:
        return float(self.areas().sum())

    # -- JSON exchange ------------------------------------------------------
    def to_json(self) -> str:
        payload = {
            "ambient_dim": self.ambient_dim,
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": self.boundary_edges.tolist(),
            "truncation_radius": self.truncation_radius,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "SimplicialSurface":
        d = json.loads(text)
        verts = np.asarray(d["vertices"], dtype=float)
        if verts.shape[1] != d["ambient_dim"]:
            raise MeshTopologyError("ambient_dim does not match vertex width")
        return cls(
            vertices=verts,
            triangles=np.asarray(d["triangles"], dtype=np.int64),
            boundary_edges=np.asarray(d["boundary_edges"], dtype=np.int64).reshape(-1, 2),
            truncation_radius=d["truncation_radius"],
            name=name,
        )


def triangle_areas(corners: np.ndarray) -> np.ndarray:
    """Areas of triangles given as (..., 3, n) corner arrays (any n via Gram)."""
    u = corners[..., 1, :] - corners[..., 0, :]
    v = corners[..., 2, :] - corners[..., 0, :]
    uu = np.sum(u * u, axis=-1)
    vv = np.sum(v * v, axis=-1)
    uv = np.sum(u * v, axis=-1)
    g = uu * vv - uv * uv
    return 0.5 * np.sqrt(np.maximum(g, 0.0))


@dataclass
class ImmersionChart:
    """Smooth parametrization of a surface patch over a rectangle.

    ``evaluate``/``derivatives`` must accept numpy arrays u, v of equal shape
    and return (..., n) resp. a pair of (..., n) arrays.  ``periodic_v`` marks
    charts whose v-extremes describe the same curve (tubes).
    """

    name: str
    domain: tuple[float, float, float, float]  # (u0, u1, v0, v1)
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    derivatives: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    ambient_dim: int = 3
    periodic_v: bool = False

    def points(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.asarray(self.evaluate(u, v), dtype=float)

    def first_form(self, u, v):
        """E, F, G of the first fundamental form at (u, v)."""
        xu, xv = self.derivatives(np.asarray(u, float), np.asarray(v, float))
        E = np.sum(xu * xu, axis=-1)
        F = np.sum(xu * xv, axis=-1)
        G = np.sum(xv * xv, axis=-1)
        return E, F, G


@dataclass
class LevelCurve:
    """Polyline approximation of {x on mesh : |x - center| = level}.

    polylines        list of (k_i, n) point arrays, consecutive points joined
    closed           per-polyline flag; True when the curve is a loop
    segment_triangles list of (k_i - 1,) or (k_i,) triangle indices: the mesh
                     triangle each segment lies in (k_i for closed loops)
    level, center    define the sphere that was traced
    snap_shift       relative amount the level was nudged to avoid vertices
    """

    polylines: list
    closed: list
    segment_triangles: list
    level: float
    center: np.ndarray
    snap_shift: float = 0.0

    @property
    def empty(self) -> bool:
        return len(self.polylines) == 0

    def total_length(self) -> float:
        out = 0.0
        for pts, cl in zip(self.polylines, self.closed):
            seg = np.diff(pts, axis=0)
            out += float(np.linalg.norm(seg, axis=1).sum())
            if cl:
                out += float(np.linalg.norm(pts[0] - pts[-1]))
        return out


def _rows_lookup(sorted_rows: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Indices of ``queries`` rows inside lexsorted ``sorted_rows`` (-1 if absent)."""
    if len(sorted_rows) == 0:
        return -np.ones(len(queries), dtype=np.int64)
    # encode pairs as single integers for searchsorted
    m = max(int(sorted_rows.max()), int(queries.max()) if queries.size else 0) + 1
    code_rows = sorted_rows[:, 0] * m + sorted_rows[:, 1]
    code_q = queries[:, 0] * m + queries[:, 1]
    pos = np.searchsorted(code_rows, code_q)
    pos = np.clip(pos, 0, len(code_rows) - 1)
    ok = code_rows[pos] == code_q
    return np.where(ok, pos, -1)


def submesh(surface: SimplicialSurface, tri_mask: np.ndarray,
            name: str = "") -> SimplicialSurface:
    """Extract the sub-surface made of the masked triangles.

    New boundary edges are computed from scratch; the truncation radius is
    inherited.
    """
    tri_idx = np.flatnonzero(tri_mask)
    tris = surface.triangles[tri_idx]
    used = np.unique(tris)
    remap = -np.ones(len(surface.vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    new_tris = remap[tris]
    verts = surface.vertices[used]
    edges = np.concatenate([new_tris[:, [0, 1]], new_tris[:, [1, 2]], new_tris[:, [2, 0]]])
    edges.sort(axis=1)
    keys, counts = np.unique(edges, axis=0, return_counts=True)
    boundary = keys[counts == 1]
    return SimplicialSurface(
        vertices=verts,
        triangles=new_tris,
        boundary_edges=boundary,
        truncation_radius=surface.truncation_radius,
        name=name or (surface.name + ":sub"),
    )
