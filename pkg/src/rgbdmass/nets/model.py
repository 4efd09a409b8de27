"""The full mass estimator: image encoder + optional point-cloud encoder,
fused latent, density/volume heads, optional folding reconstruction."""

from __future__ import annotations

import torch
from torch import nn

from ..errors import ConfigError, ShapeError
from .densecnn import DenseCNNEncoder
from .dgcnn import DGCNNEncoder
from .folding import FoldingDecoder
from .heads import DEFAULT_BALANCE, DensityHead, VolumeHead, predict_mass
from .point_transformer import PointTransformerEncoder
from .pointnet import PointNetEncoder

VARIANTS = ("image_only", "pointnet", "dgcnn", "point_transformer", "pointnet_folding")

FUSED_LATENT = 1024
DEFAULT_K = {"dgcnn": 20, "point_transformer": 16}


def fuse_latents(image_latent: torch.Tensor, point_latent: torch.Tensor | None) -> torch.Tensor:
    """Concatenate image then point latent; image-only passes straight through."""
    if point_latent is None:
        return image_latent
    if image_latent.shape[0] != point_latent.shape[0]:
        raise ShapeError("latent batch sizes differ")
    return torch.cat([image_latent, point_latent], dim=1)


class MassModel(nn.Module):
    def __init__(
        self,
        variant: str,
        k: int | None = None,
        image_size: int = 64,
        num_points: int = 1024,
        balance_b: float = DEFAULT_BALANCE,
        image_latent: int | None = None,
        point_latent: int = 512,
        growth: int = 12,
        block_layers=(4, 4, 4),
        pointnet_widths=(64, 128, 256, 512),
        dgcnn_widths=(64, 64, 128, 256),
        pt_widths=(32, 64, 128, 512),
        pt_counts=(1024, 256, 64, 16),
        head_hidden=(256, 64),
        rho_min: float = 10.0,
        rho_max: float = 10000.0,
        grid_size: int = 16,
        fold_hidden=(256, 128),
        dynamic_graph: bool = True,
        batch_norm: bool = False,
    ):
        super().__init__()
        if variant not in VARIANTS:
            raise ConfigError(f"unknown model variant '{variant}'")
        if image_latent is None:
            image_latent = FUSED_LATENT if variant == "image_only" else FUSED_LATENT - point_latent
        self.variant = variant
        self.num_points = num_points
        self.balance_b = balance_b
        self.build_config = {
            "variant": variant, "k": k, "image_size": image_size,
            "num_points": num_points, "balance_b": balance_b,
            "image_latent": image_latent, "point_latent": point_latent,
            "growth": growth, "block_layers": tuple(block_layers),
            "pointnet_widths": tuple(pointnet_widths),
            "dgcnn_widths": tuple(dgcnn_widths),
            "pt_widths": tuple(pt_widths), "pt_counts": tuple(pt_counts),
            "head_hidden": tuple(head_hidden),
            "rho_min": rho_min, "rho_max": rho_max,
            "grid_size": grid_size, "fold_hidden": tuple(fold_hidden),
            "dynamic_graph": dynamic_graph, "batch_norm": batch_norm,
        }

        self.image_encoder = DenseCNNEncoder(
            latent_dim=image_latent, growth=growth,
            block_layers=block_layers, image_size=image_size,
            batch_norm=batch_norm,
        )
        if variant == "image_only":
            self.point_encoder = None
        elif variant in ("pointnet", "pointnet_folding"):
            self.point_encoder = PointNetEncoder(
                widths=(*pointnet_widths[:-1], point_latent), batch_norm=batch_norm
            )
        elif variant == "dgcnn":
            self.point_encoder = DGCNNEncoder(
                k=k or DEFAULT_K["dgcnn"], widths=dgcnn_widths,
                latent_dim=point_latent, dynamic=dynamic_graph,
                batch_norm=batch_norm,
            )
        else:
            self.point_encoder = PointTransformerEncoder(
                widths=(*pt_widths[:-1], point_latent),
                counts=pt_counts, k=k or DEFAULT_K["point_transformer"],
            )

        latent_dim = image_latent + (point_latent if self.point_encoder else 0)
        self.density_head = DensityHead(latent_dim, head_hidden, rho_min, rho_max)
        self.volume_head = VolumeHead(latent_dim, head_hidden)
        self.folding = (
            FoldingDecoder(latent_dim, grid_size, fold_hidden)
            if variant == "pointnet_folding"
            else None
        )

    @property
    def has_reconstruction(self) -> bool:
        return self.folding is not None

    @property
    def uses_points(self) -> bool:
        return self.point_encoder is not None

    def forward(self, images: torch.Tensor, points: torch.Tensor | None = None,
                fps_seed: int = 0) -> dict:
        image_latent = self.image_encoder(images)
        point_latent = None
        if self.point_encoder is not None:
            if points is None:
                raise ShapeError(f"variant '{self.variant}' requires a point cloud input")
            if points.shape[1] != self.num_points:
                raise ShapeError(f"expected {self.num_points} points, got {points.shape[1]}")
            if isinstance(self.point_encoder, PointTransformerEncoder):
                point_latent = self.point_encoder(points, fps_seed=fps_seed)
            else:
                point_latent = self.point_encoder(points)
        latent = fuse_latents(image_latent, point_latent)
        density = self.density_head(latent)
        volume = self.volume_head(latent)
        mass, scaled_density, scaled_volume = predict_mass(density, volume, self.balance_b)
        out = {
            "latent": latent,
            "density": density,
            "volume": volume,
            "mass": mass,
            "scaled_density": scaled_density,
            "scaled_volume": scaled_volume,
        }
        if self.folding is not None:
            out["reconstruction"] = self.folding(latent)
        return out


def build_model(variant: str, **overrides) -> MassModel:
    return MassModel(variant, **overrides)
