"""On-disk datasets: one tensor container plus one OBJ mesh per sample.

Layout under the dataset root:

    manifest.txt
    sample_0000.ircn   sample_0000.obj
    sample_0001.ircn   sample_0001.obj
    ...

The manifest is line-oriented text: key=value header lines, then one
"sample ..." record per line.  Every sample is a pure function of its
seed and the image resolution, so rebuilding with the same top-level seed
reproduces the files byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import List

from ..geometry import TriangleMesh, load_obj, save_obj
from ..nn import load_tensors, save_tensors
from .render import RenderedSample, downsample2, render_orthographic
from .scenes import GRID_RESOLUTION, generate_scene

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.txt"
TENSOR_KEYS = ("img_hi", "img_lo", "fnml_hi", "fnml_lo", "bnml_hi", "bnml_lo", "mask")
# Spreads sample seeds apart so unrelated top-level seeds rarely collide.
_SEED_STRIDE = 1_000_003


class DatasetError(RuntimeError):
    pass


@dataclass
class SampleRecord:
    index: int
    split: str
    seed: int
    tensors: str
    mesh: str


@dataclass
class DatasetManifest:
    version: int
    count: int
    resolution: int
    grid_resolution: int
    seed: int
    root: str
    records: List[SampleRecord]

    def split(self, tag: str) -> List[SampleRecord]:
        return [r for r in self.records if r.split == tag]


def sample_seed(dataset_seed: int, index: int) -> int:
    return dataset_seed * _SEED_STRIDE + index


def build_dataset(
    out_dir,
    n_train: int,
    n_test: int,
    resolution: int = 128,
    seed: int = 0,
    grid_resolution: int = GRID_RESOLUTION,
) -> DatasetManifest:
    if n_train < 0 or n_test < 0 or n_train + n_test == 0:
        raise ValueError("dataset needs a nonnegative split with at least one sample")
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    lines = [
        f"version={MANIFEST_VERSION}",
        f"count={n_train + n_test}",
        f"resolution={resolution}",
        f"grid_resolution={grid_resolution}",
        f"seed={seed}",
    ]
    seeds = set()
    for index in range(n_train + n_test):
        split = "train" if index < n_train else "test"
        s = sample_seed(seed, index)
        if s in seeds:
            raise DatasetError(f"duplicate sample seed {s}")
        seeds.add(s)
        _, mesh = generate_scene(s, grid_resolution)
        rendered = render_orthographic(mesh, resolution)
        tensor_name = f"sample_{index:04d}.ircn"
        mesh_name = f"sample_{index:04d}.obj"
        save_tensors(
            os.path.join(out_dir, tensor_name),
            {key: getattr(rendered, key) for key in TENSOR_KEYS},
        )
        save_obj(os.path.join(out_dir, mesh_name), mesh)
        lines.append(
            f"sample index={index} split={split} seed={s} "
            f"tensors={tensor_name} mesh={mesh_name}"
        )

    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return load_manifest(manifest_path)


def _parse_kv(tokens, line: str) -> dict:
    out = {}
    for token in tokens:
        if "=" not in token:
            raise DatasetError(f"malformed manifest line: {line!r}")
        key, value = token.split("=", 1)
        out[key] = value
    return out


def load_manifest(path) -> DatasetManifest:
    path = os.fspath(path)
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    if not os.path.exists(path):
        raise DatasetError(f"manifest not found: {path}")
    root = os.path.dirname(os.path.abspath(path))

    header = {}
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            if tokens[0] == "sample":
                kv = _parse_kv(tokens[1:], line)
                records.append(
                    SampleRecord(
                        index=int(kv["index"]),
                        split=kv["split"],
                        seed=int(kv["seed"]),
                        tensors=kv["tensors"],
                        mesh=kv["mesh"],
                    )
                )
            else:
                header.update(_parse_kv(tokens, line))

    for key in ("version", "count", "resolution", "grid_resolution", "seed"):
        if key not in header:
            raise DatasetError(f"manifest missing header key {key!r}: {path}")
    manifest = DatasetManifest(
        version=int(header["version"]),
        count=int(header["count"]),
        resolution=int(header["resolution"]),
        grid_resolution=int(header["grid_resolution"]),
        seed=int(header["seed"]),
        root=root,
        records=records,
    )
    if manifest.count != len(records):
        raise DatasetError(f"manifest count {manifest.count} != {len(records)} records: {path}")
    if len({r.seed for r in records}) != len(records):
        raise DatasetError(f"duplicate sample seeds in manifest: {path}")
    for record in records:
        for name in (record.tensors, record.mesh):
            full = os.path.join(root, name)
            if not os.path.exists(full):
                raise DatasetError(f"missing sample file: {full}")
    return manifest


def load_sample(manifest: DatasetManifest, index: int) -> RenderedSample:
    record = manifest.records[index]
    tensors = load_tensors(os.path.join(manifest.root, record.tensors))
    missing = [key for key in TENSOR_KEYS if key not in tensors]
    if missing:
        raise DatasetError(f"sample {record.tensors} missing entries {missing}")
    mesh: TriangleMesh = load_obj(os.path.join(manifest.root, record.mesh))
    return RenderedSample(
        img_hi=tensors["img_hi"],
        img_lo=tensors["img_lo"],
        fnml_hi=tensors["fnml_hi"],
        fnml_lo=tensors["fnml_lo"],
        bnml_hi=tensors["bnml_hi"],
        bnml_lo=tensors["bnml_lo"],
        mask=tensors["mask"],
        mask_lo=downsample2(tensors["mask"]),
        resolution=manifest.resolution,
        mesh=mesh,
    )
