from .types import (
    ImmersionChart,
    LevelCurve,
    SimplicialSurface,
    check_frame,
    decompose_radial,
    orthonormal_frame,
    submesh,
    triangle_areas,
)
from .meshing import (
    geometric_radii,
    icosphere,
    mesh_from_chart,
    polar_disk_mesh,
    spherical_cap_mesh,
)
from .quadrature import (
    ball_region,
    integrate_mesh,
    integrate_with_error,
    shell_region,
    surface_measure,
)
from .levels import level_polyline

__all__ = [
    "ImmersionChart",
    "LevelCurve",
    "SimplicialSurface",
    "ball_region",
    "check_frame",
    "decompose_radial",
    "geometric_radii",
    "icosphere",
    "integrate_mesh",
    "integrate_with_error",
    "level_polyline",
    "mesh_from_chart",
    "orthonormal_frame",
    "polar_disk_mesh",
    "shell_region",
    "spherical_cap_mesh",
    "submesh",
    "surface_measure",
    "triangle_areas",
]
