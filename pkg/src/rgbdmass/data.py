"""Training-time data plumbing: manifest-backed sample preparation and
dual-source batch scheduling."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .cameras import Intrinsics
from .dataset import ManifestRecord, load_dataset_info, read_manifest
from .depthmaps import denormalize_depth, load_depth_png
from .errors import EmptyDatasetError
from .pngio import read_png
from .pointcloud import PointCloud, flip_augment, preprocess, unproject

SOURCE_SYNTHETIC = "synthetic"
SOURCE_RGB_MASS = "rgb_mass"


def nearest_resize(image: np.ndarray, size: int) -> np.ndarray:
    """Deterministic nearest-neighbor resize to size x size."""
    h, w = image.shape[:2]
    if (h, w) == (size, size):
        return image
    rows = np.floor((np.arange(size) + 0.5) * h / size).astype(int)
    cols = np.floor((np.arange(size) + 0.5) * w / size).astype(int)
    return image[rows][:, cols]


def record_rng(seed: int, record: ManifestRecord) -> np.random.Generator:
    """Reproducible per-record generator (stable across processes)."""
    return np.random.default_rng((seed, zlib.crc32(record.id.encode()), record.view_index))


@dataclass
class Batch:
    images: torch.Tensor  # (B, 3, H, W)
    points: torch.Tensor  # (B, N, 3)
    masses: torch.Tensor  # (B,)
    source: str
    recon_targets: list[torch.Tensor] | None  # per-sample (n_real, 3), synthetic only
    ids: list[tuple[str, int]]


class ManifestData:
    """Decodes manifest records into (RGB, metric point cloud, mass) samples.

    Decoded images and unprojected clouds are cached in memory; all
    randomness (resampling, flips) is injected per call.
    """

    def __init__(self, manifest_path: str | Path, source: str = SOURCE_SYNTHETIC,
                 split: str | None = None, image_size: int = 64,
                 num_points: int = 1024, depth_root: str | Path | None = None,
                 cache: bool = True):
        manifest_path = Path(manifest_path)
        self.root = manifest_path.parent
        self.source = source
        self.image_size = image_size
        self.num_points = num_points
        self.depth_root = Path(depth_root) if depth_root else None
        info = load_dataset_info(manifest_path)
        self.intrinsics = Intrinsics.from_dict(info["intrinsics"])
        records = read_manifest(manifest_path).records
        self.records = [r for r in records if split is None or r.split == split]
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] | None = {} if cache else None

    def __len__(self) -> int:
        return len(self.records)

    def load_raw(self, i: int) -> tuple[np.ndarray, PointCloud, ManifestRecord]:
        record = self.records[i]
        if self._cache is not None and i in self._cache:
            rgb, pts = self._cache[i]
        else:
            rgb = read_png(self.root / record.rgb_path)
            depth_path = (
                self.depth_root / record.depth_path
                if self.depth_root
                else self.root / record.depth_path
            )
            normalized = load_depth_png(depth_path, self.intrinsics)
            metric = denormalize_depth(normalized, record.bbox_diagonal_m)
            pts = unproject(metric).points.astype(np.float32)
            if self._cache is not None:
                self._cache[i] = (rgb, pts)
        return rgb, PointCloud(pts.astype(np.float64)), record

    def prepare(self, i: int, rng: np.random.Generator, augment: bool = False) -> dict:
        rgb, cloud, record = self.load_raw(i)
        cloud = preprocess(cloud, self.num_points, rng)
        if augment:
            rgb, cloud = flip_augment(rgb, cloud, None, rng)
        rgb = nearest_resize(rgb, self.image_size)
        return {
            "image": torch.from_numpy(
                np.ascontiguousarray(rgb.transpose(2, 0, 1), dtype=np.float32) / 255.0
            ),
            "points": torch.from_numpy(cloud.points.astype(np.float32)),
            "n_real": cloud.n_real,
            "mass": record.mass_kg,
            "id": (record.id, record.view_index),
        }

    def collate(self, indices, rng: np.random.Generator, augment: bool = False) -> Batch:
        samples = [self.prepare(int(i), rng, augment) for i in indices]
        points = torch.stack([s["points"] for s in samples])
        recon = None
        if self.source == SOURCE_SYNTHETIC:
            recon = [s["points"][: s["n_real"]] for s in samples]
        return Batch(
            images=torch.stack([s["image"] for s in samples]),
            points=points,
            masses=torch.tensor([s["mass"] for s in samples], dtype=torch.float32),
            source=self.source,
            recon_targets=recon,
            ids=[s["id"] for s in samples],
        )


def make_batches(
    n_synthetic: int,
    n_rgb_mass: int,
    batch_size: int,
    rng: np.random.Generator,
) -> list[tuple[str, np.ndarray]]:
    """One epoch's schedule: single-source batches from both datasets,
    interleaved in seeded random order. Every sample index appears exactly
    once per epoch."""
    if batch_size <= 0:
        raise EmptyDatasetError("batch_size must be positive")
    if n_synthetic <= 0 and n_rgb_mass <= 0:
        raise EmptyDatasetError("no samples available for batching")
    schedule: list[tuple[str, np.ndarray]] = []
    for source, count in ((SOURCE_SYNTHETIC, n_synthetic), (SOURCE_RGB_MASS, n_rgb_mass)):
        if count <= 0:
            continue
        order = rng.permutation(count)
        schedule.extend(
            (source, order[start : start + batch_size])
            for start in range(0, count, batch_size)
        )
    rng.shuffle(schedule)
    return schedule
