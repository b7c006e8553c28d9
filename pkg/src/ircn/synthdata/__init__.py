"""Procedural scenes and their orthographic renders."""

from .dataset import (
    DatasetError,
    DatasetManifest,
    SampleRecord,
    TENSOR_KEYS,
    build_dataset,
    load_manifest,
    load_sample,
    sample_seed,
)
from .primitives import Box, Capsule, Sphere, random_rotation, union_bounds, union_sdf
from .render import (
    CAMERA_CONVENTION,
    RenderedSample,
    downsample2,
    pixel_centers,
    render_orthographic,
)
from .scenes import (
    FIT_EXTENT,
    GRID_RESOLUTION,
    SceneError,
    SceneSpec,
    generate_scene,
    scene_field,
)

__all__ = [
    "Box",
    "CAMERA_CONVENTION",
    "Capsule",
    "DatasetError",
    "DatasetManifest",
    "FIT_EXTENT",
    "GRID_RESOLUTION",
    "RenderedSample",
    "SampleRecord",
    "SceneError",
    "SceneSpec",
    "Sphere",
    "TENSOR_KEYS",
    "build_dataset",
    "downsample2",
    "generate_scene",
    "load_manifest",
    "load_sample",
    "pixel_centers",
    "random_rotation",
    "render_orthographic",
    "sample_seed",
    "scene_field",
    "union_bounds",
    "union_sdf",
]
