"""Geometry services: meshes, occupancy oracle, marching cubes, metrics."""

from .field import ScalarField
from .hashgrid import PointGrid, TriangleGrid, point_triangle_dist2
from .inside import occupancy_grid, point_in_mesh
from .marching_cubes import marching_cubes
from .mesh import MeshError, TriangleMesh
from .metrics import (
    chamfer_distance,
    hausdorff_points,
    nearest_distances,
    normal_consistency,
    point_to_surface,
)
from .obj_io import load_obj, save_obj
from .shapes import box_mesh, icosphere
from .surface import SurfaceSampleSet, sample_surface

__all__ = [
    "TriangleMesh", "MeshError", "ScalarField", "SurfaceSampleSet",
    "point_in_mesh", "occupancy_grid", "sample_surface", "marching_cubes",
    "chamfer_distance", "point_to_surface", "normal_consistency",
    "nearest_distances", "hausdorff_points",
    "PointGrid", "TriangleGrid", "point_triangle_dist2",
    "box_mesh", "icosphere", "save_obj", "load_obj",
]
