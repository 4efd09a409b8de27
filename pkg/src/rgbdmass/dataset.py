"""Manifest-driven dataset generation: render, normalize, split, persist."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cameras import NUM_VIEWS, Intrinsics, camera_rig
from .depthmaps import normalize_depth, save_depth_png
from .errors import EmptyCorpusError, MetadataError, ParseError, RgbdMassError
from .meshes import TriangleMesh, load_mesh_with_sidecar
from .pngio import write_png
from .rendering import DEFAULT_ALBEDO, render_depth

SPLIT_TRAIN = "train"
SPLIT_TEST = "test"

_RECORD_FIELDS = (
    "id", "view_index", "rgb_path", "depth_path",
    "mass_kg", "bbox_diagonal_m", "split",
)


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    view_index: int
    rgb_path: str
    depth_path: str
    mass_kg: float
    bbox_diagonal_m: float
    split: str

    def to_json(self) -> str:
        return json.dumps({k: getattr(self, k) for k in _RECORD_FIELDS})


@dataclass
class DatasetManifest:
    records: list[ManifestRecord]

    def validate(self, root: str | Path | None = None) -> None:
        seen = set()
        split_by_id: dict[str, str] = {}
        for rec in self.records:
            key = (rec.id, rec.view_index)
            if key in seen:
                raise RgbdMassError(f"duplicate manifest record {key}")
            seen.add(key)
            if split_by_id.setdefault(rec.id, rec.split) != rec.split:
                raise RgbdMassError(f"object '{rec.id}' appears in both splits")
            if root is not None:
                for rel in (rec.rgb_path, rec.depth_path):
                    if not (Path(root) / rel).exists():
                        raise RgbdMassError(f"manifest references missing file {rel}")

    def split_records(self, split: str) -> list[ManifestRecord]:
        return [r for r in self.records if r.split == split]


def write_manifest(path: str | Path, manifest: DatasetManifest) -> None:
    Path(path).write_text("".join(rec.to_json() + "\n" for rec in manifest.records))


def read_manifest(path: str | Path) -> DatasetManifest:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        records.append(ManifestRecord(**{k: raw[k] for k in _RECORD_FIELDS}))
    return DatasetManifest(records=records)


def split_ids(ids: list[str], split_fraction: float, seed: int) -> tuple[set, set]:
    """Deterministic by-object split; floor(n * fraction) ids go to train."""
    if not (0 < split_fraction < 1):
        raise RgbdMassError(f"split fraction must be in (0, 1), got {split_fraction}")
    ordered = sorted(ids)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_train = int(math.floor(len(ordered) * split_fraction + 1e-9))
    train = {ordered[i] for i in perm[:n_train]}
    test = {ordered[i] for i in perm[n_train:]}
    return train, test


def discover_models(model_dir: str | Path) -> list[Path]:
    return sorted(Path(model_dir).glob("*.obj"))


def build_dataset(
    model_dir: str | Path,
    out_dir: str | Path,
    split_fraction: float = 0.9,
    seed: int = 0,
    views: int = NUM_VIEWS,
    intrinsics: Intrinsics | None = None,
    ring_elevation_deg: float = 45.0,
) -> DatasetManifest:
    """Render every accepted model from `views` rig poses and emit a manifest.

    Models missing valid mass/dimension metadata are filtered out, matching
    the corpus acceptance rule. Output is deterministic for a fixed seed:
    objects are processed in sorted-id order and files are written with a
    fixed encoder, so regeneration is byte-identical.
    """
    intrinsics = intrinsics or Intrinsics.kinect()
    out_dir = Path(out_dir)
    (out_dir / "rgb").mkdir(parents=True, exist_ok=True)
    (out_dir / "depth").mkdir(parents=True, exist_ok=True)

    meshes: list[TriangleMesh] = []
    rejected = 0
    for obj_path in discover_models(model_dir):
        try:
            meshes.append(load_mesh_with_sidecar(obj_path))
        except (ParseError, MetadataError):
            rejected += 1
    if not meshes:
        raise EmptyCorpusError(f"no usable models under {model_dir}")
    meshes.sort(key=lambda m: m.id)

    train_ids, _ = split_ids([m.id for m in meshes], split_fraction, seed)

    records: list[ManifestRecord] = []
    for mesh in meshes:
        records.extend(
            _render_object(mesh, out_dir, views, intrinsics, ring_elevation_deg,
                           SPLIT_TRAIN if mesh.id in train_ids else SPLIT_TEST)
        )

    manifest = DatasetManifest(records=records)
    manifest.validate(root=out_dir)
    write_manifest(out_dir / "manifest.jsonl", manifest)
    meta = {
        "depth_scale": 10000,
        "intrinsics": intrinsics.to_dict(),
        "models_accepted": len(meshes),
        "models_rejected": rejected,
        "ring_elevation_deg": ring_elevation_deg,
        "seed": seed,
        "split_fraction": split_fraction,
        "views": views,
    }
    (out_dir / "dataset_info.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return manifest


def _render_object(mesh, out_dir, views, intrinsics, ring_elevation_deg, split):
    """Pure per-object render job; safe to run in parallel workers."""
    albedo = getattr(mesh, "albedo", None) or DEFAULT_ALBEDO
    poses = camera_rig(mesh.diagonal, mesh.center, ring_elevation_deg)[:views]
    records = []
    for pose in poses:
        depth, rgb = render_depth(mesh, pose, intrinsics, albedo=albedo)
        rgb_rel = f"rgb/{mesh.id}_{pose.view_index:02d}.png"
        depth_rel = f"depth/{mesh.id}_{pose.view_index:02d}.png"
        write_png(out_dir / rgb_rel, rgb)
        save_depth_png(out_dir / depth_rel, normalize_depth(depth, mesh.diagonal))
        records.append(
            ManifestRecord(
                id=mesh.id,
                view_index=pose.view_index,
                rgb_path=rgb_rel,
                depth_path=depth_rel,
                mass_kg=mesh.mass,
                bbox_diagonal_m=mesh.diagonal,
                split=split,
            )
        )
    return records


def load_dataset_info(manifest_path: str | Path) -> dict:
    info_path = Path(manifest_path).parent / "dataset_info.json"
    return json.loads(info_path.read_text())
