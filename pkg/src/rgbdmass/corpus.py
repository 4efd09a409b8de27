"""Procedural desk-scale model corpus.

Generates closed primitive meshes spanning a wide range of physical scales,
with family-banded densities and colors. Because the camera rig normalizes
apparent size, the RGB image carries shape and material cues but no scale;
the metric point cloud is the only route to absolute volume, which is what
makes this corpus a useful testbed for image-vs-depth comparisons.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import meshes
from .meshes import mesh_volume, rotate_z, write_obj

# family -> (mesh factory, density band kg/m^3, base color)
FAMILIES = {
    "box": (None, (520.0, 760.0), (0.75, 0.55, 0.35)),
    "cylinder": (None, (1050.0, 1500.0), (0.35, 0.55, 0.80)),
    "pyramid": (None, (240.0, 360.0), (0.45, 0.75, 0.40)),
    "wedge": (None, (1900.0, 2700.0), (0.70, 0.70, 0.72)),
    "sphere": (None, (820.0, 1150.0), (0.80, 0.40, 0.40)),
}

DIAGONAL_RANGE_M = (0.15, 1.2)


def _make_family(family: str, rng: np.random.Generator):
    if family == "box":
        extents = rng.uniform(0.5, 1.0, size=3)
        return meshes.box_mesh(extents)
    if family == "cylinder":
        return meshes.cylinder_mesh(
            radius=rng.uniform(0.25, 0.5), height=rng.uniform(0.6, 1.2), segments=20
        )
    if family == "pyramid":
        return meshes.pyramid_mesh(
            base_x=rng.uniform(0.6, 1.0), base_y=rng.uniform(0.6, 1.0),
            height=rng.uniform(0.5, 1.1),
        )
    if family == "wedge":
        return meshes.wedge_mesh(rng.uniform(0.5, 1.0, size=3))
    if family == "sphere":
        return meshes.icosphere_mesh(radius=0.5, subdivisions=1)
    raise ValueError(f"unknown family '{family}'")


def make_corpus(
    out_dir: str | Path,
    count: int,
    seed: int = 0,
    families: tuple[str, ...] = tuple(FAMILIES),
) -> list[str]:
    """Write `count` OBJ models with JSON metadata sidecars; returns ids."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    ids = []
    for i in range(count):
        family = families[int(rng.integers(len(families)))]
        vertices, faces = _make_family(family, rng)
        vertices = rotate_z(vertices, rng.uniform(0, 2 * np.pi))

        # rescale so the bounding-box diagonal hits a log-uniform target
        bbox = vertices.max(axis=0) - vertices.min(axis=0)
        lo, hi = np.log(DIAGONAL_RANGE_M[0]), np.log(DIAGONAL_RANGE_M[1])
        target = float(np.exp(rng.uniform(lo, hi)))
        vertices = vertices * (target / float(np.linalg.norm(bbox)))

        d_lo, d_hi = FAMILIES[family][1]
        density = float(np.exp(rng.uniform(np.log(d_lo), np.log(d_hi))))
        mass = density * mesh_volume(vertices, faces)

        base = np.array(FAMILIES[family][2])
        color = np.clip(base + rng.uniform(-0.06, 0.06, size=3), 0.05, 0.95)

        model_id = f"{family}_{i:05d}"
        write_obj(out_dir / f"{model_id}.obj", vertices, faces)
        metadata = {
            "id": model_id,
            "mass": mass,
            "bbox_min": vertices.min(axis=0).tolist(),
            "bbox_max": vertices.max(axis=0).tolist(),
            "color": color.round(4).tolist(),
        }
        (out_dir / f"{model_id}.json").write_text(json.dumps(metadata, indent=1) + "\n")
        ids.append(model_id)
    return ids
