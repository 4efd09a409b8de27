"""Training loop: dual-source batching, per-step logging, checkpointing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .config import ExperimentConfig
from .data import SOURCE_RGB_MASS, SOURCE_SYNTHETIC, Batch, ManifestData, make_batches
from .errors import ConfigError, NonFiniteLossError
from .evaluation import evaluate
from .nets.losses import alde_loss, chamfer_loss
from .nets.model import MassModel


@dataclass
class LossBreakdown:
    alde: float
    cd: float | None
    total: float

    def to_json(self, step: int, source: str) -> str:
        return json.dumps(
            {"step": step, "source": source, "alde": self.alde, "cd": self.cd,
             "total": self.total}
        )


@dataclass
class ExperimentResult:
    out_dir: Path
    best_checkpoint: Path
    last_checkpoint: Path
    log_path: Path
    history: list[dict]
    epoch_sample_audit: list[list[tuple[str, int]]] = field(default_factory=list)


def pt_stages(num_points: int, widths=(32, 64, 128, 512)) -> tuple[tuple, tuple]:
    """Quarter-rate downsampling schedule for a given input size."""
    counts = [num_points]
    while len(counts) < len(widths) and counts[-1] // 4 >= 4:
        counts.append(counts[-1] // 4)
    return tuple(widths[-len(counts):]), tuple(counts)


def build_model_from_config(config: ExperimentConfig) -> MassModel:
    kwargs = dict(
        variant=config.model_variant,
        image_size=config.image_size,
        num_points=config.num_points,
        balance_b=config.balance_b,
        rho_min=config.rho_min,
        rho_max=config.rho_max,
        grid_size=config.grid_size,
    )
    if config.k > 0:
        kwargs["k"] = config.k
    if config.model_variant == "point_transformer":
        pt_widths, pt_counts = pt_stages(config.num_points)
        kwargs["pt_widths"] = pt_widths
        kwargs["pt_counts"] = pt_counts
    return MassModel(**kwargs)


def train_step(
    model: MassModel,
    batch: Batch,
    optimizer: torch.optim.Optimizer,
    lam: float = 1.0,
    fps_seed: int = 0,
) -> LossBreakdown:
    """One optimizer update. The Chamfer term applies only to batches that
    carry reconstruction ground truth (synthetic source) on models with a
    folding decoder; mass-only sources contribute the mass term alone."""
    model.train()
    dtype = next(model.parameters()).dtype
    out = model(batch.images.to(dtype), batch.points.to(dtype), fps_seed=fps_seed)
    alde_term = alde_loss(out["mass"], batch.masses.to(dtype))
    cd_term = None
    if model.has_reconstruction and batch.source == SOURCE_SYNTHETIC:
        if batch.recon_targets is None:
            raise ConfigError("synthetic batch is missing reconstruction targets")
        cd_term = chamfer_loss(
            out["reconstruction"], [t.to(dtype) for t in batch.recon_targets]
        )
    total = alde_term if cd_term is None else alde_term + lam * cd_term
    if not torch.isfinite(total):
        raise NonFiniteLossError(
            f"non-finite loss: alde={alde_term.item()}, "
            f"cd={None if cd_term is None else cd_term.item()}"
        )
    optimizer.zero_grad(set_to_none=True)
    total.backward()
    optimizer.step()
    return LossBreakdown(
        alde=float(alde_term.item()),
        cd=None if cd_term is None else float(cd_term.item()),
        total=float(total.item()),
    )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Full training run: seeded end to end, JSONL step logs, per-epoch
    evaluation, best-by-ALDE checkpoint selection."""
    if not config.synthetic_manifest and not config.rgb_mass_manifest:
        raise ConfigError("at least one training manifest is required")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.to_file(out_dir / "config.txt")

    torch.manual_seed(config.seed)
    model = build_model_from_config(config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    synthetic = (
        ManifestData(
            config.synthetic_manifest, source=SOURCE_SYNTHETIC, split="train",
            image_size=config.image_size, num_points=config.num_points,
            depth_root=config.depth_root or None,
        )
        if config.synthetic_manifest
        else None
    )
    rgb_mass = (
        ManifestData(
            config.rgb_mass_manifest, source=SOURCE_RGB_MASS, split="train",
            image_size=config.image_size, num_points=config.num_points,
            depth_root=config.depth_root or None,
        )
        if config.rgb_mass_manifest
        else None
    )
    datasets = {SOURCE_SYNTHETIC: synthetic, SOURCE_RGB_MASS: rgb_mass}

    log_path = out_dir / "train_log.jsonl"
    best_path = out_dir / "best.ckpt.npz"
    last_path = out_dir / "last.ckpt.npz"
    history: list[dict] = []
    audit: list[list[tuple[str, int]]] = []
    best_alde = float("inf")
    step = 0

    with open(log_path, "w") as log:
        for epoch in range(config.epochs):
            epoch_rng = np.random.default_rng((config.data_seed, epoch))
            schedule = make_batches(
                len(synthetic) if synthetic else 0,
                len(rgb_mass) if rgb_mass else 0,
                config.batch_size,
                epoch_rng,
            )
            if config.steps_per_epoch > 0:
                schedule = schedule[: config.steps_per_epoch]
            consumed: list[tuple[str, int]] = []
            for source, indices in schedule:
                batch = datasets[source].collate(indices, epoch_rng, augment=config.augment)
                breakdown = train_step(
                    model, batch, optimizer, lam=config.lam, fps_seed=config.fps_seed
                )
                log.write(breakdown.to_json(step, source) + "\n")
                consumed.extend(batch.ids)
                step += 1
            audit.append(consumed)

            if config.test_manifest:
                report, predictions = evaluate(
                    model, config.test_manifest, split="test",
                    image_size=config.image_size, num_points=config.num_points,
                    eval_seed=config.eval_seed, fps_seed=config.fps_seed,
                    depth_root=config.depth_root or None,
                )
                history.append({"epoch": epoch, "steps": step, **json.loads(report.to_json())})
                if report.alde < best_alde:
                    best_alde = report.alde
                    save_checkpoint(model, best_path)
                    (out_dir / "best_predictions.jsonl").write_text(
                        "".join(json.dumps(p) + "\n" for p in predictions)
                    )

    save_checkpoint(model, last_path)
    if not best_path.exists():
        save_checkpoint(model, best_path)
    (out_dir / "history.json").write_text(json.dumps(history, indent=1) + "\n")
    return ExperimentResult(
        out_dir=out_dir,
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        log_path=log_path,
        history=history,
        epoch_sample_audit=audit,
    )


def fit_fixed_batch(
    model: MassModel,
    batch: Batch,
    steps: int,
    learning_rate: float = 1e-3,
    lam: float = 1.0,
    fps_seed: int = 0,
    target_alde: float | None = None,
) -> list[LossBreakdown]:
    """Repeatedly fit one fixed batch; stops early once `target_alde` is hit.
    Used by the overfitting sanity checks."""
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    trace: list[LossBreakdown] = []
    for _ in range(steps):
        trace.append(train_step(model, batch, optimizer, lam=lam, fps_seed=fps_seed))
        if target_alde is not None and trace[-1].alde < target_alde:
            break
    return trace
