"""Deterministic, augmentation-free evaluation over a manifest split."""

from __future__ import annotations

from pathlib import Path

import torch

from .data import ManifestData, record_rng
from .errors import EmptyDatasetError
from .nets.model import MassModel
from .objectives import MassMetricsReport, mass_metrics_report


def evaluate(
    model: MassModel,
    manifest_path: str | Path,
    split: str | None = "test",
    image_size: int = 64,
    num_points: int = 1024,
    eval_seed: int = 0,
    fps_seed: int = 0,
    batch_size: int = 32,
    depth_root: str | None = None,
    data: ManifestData | None = None,
) -> tuple[MassMetricsReport, list[dict]]:
    """Single deterministic pass; per-record RNGs make the point resampling
    reproducible run to run. Returns the aggregate report plus per-sample
    predictions."""
    if data is None:
        data = ManifestData(
            manifest_path, split=split, image_size=image_size,
            num_points=num_points, depth_root=depth_root or None,
        )
    if len(data) == 0:
        raise EmptyDatasetError(f"no records to evaluate in {manifest_path}")

    model.eval()
    predictions: list[dict] = []
    truths, preds = [], []
    with torch.no_grad():
        for start in range(0, len(data), batch_size):
            indices = range(start, min(start + batch_size, len(data)))
            samples = [
                data.prepare(i, record_rng(eval_seed, data.records[i]), augment=False)
                for i in indices
            ]
            images = torch.stack([s["image"] for s in samples])
            points = torch.stack([s["points"] for s in samples])
            dtype = next(model.parameters()).dtype
            out = model(images.to(dtype), points.to(dtype), fps_seed=fps_seed)
            for s, density, volume, mass in zip(
                samples, out["density"], out["volume"], out["mass"]
            ):
                predictions.append(
                    {
                        "id": s["id"][0],
                        "view_index": s["id"][1],
                        "mass_true": float(s["mass"]),
                        "mass_pred": float(mass),
                        "density": float(density),
                        "volume": float(volume),
                    }
                )
                truths.append(float(s["mass"]))
                preds.append(max(float(mass), 1e-12))
    return mass_metrics_report(truths, preds), predictions
