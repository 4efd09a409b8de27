"""Order-invariant point encoder: shared per-point MLP plus global max pool."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ShapeError


class PointNetEncoder(nn.Module):
    """Lifts every point independently through a shared MLP and max-pools
    over the point dimension, so the latent is exactly permutation-invariant.

    Normalization is off by default (keeps finite-difference gradient checks
    clean); `batch_norm=True` inserts per-channel BatchNorm before each ReLU.
    """

    def __init__(self, widths=(64, 128, 256, 512), in_dim: int = 3,
                 batch_norm: bool = False):
        super().__init__()
        dims = (in_dim, *widths)
        self.layers = nn.ModuleList(nn.Linear(a, b) for a, b in zip(dims[:-1], dims[1:]))
        self.norms = (
            nn.ModuleList(nn.BatchNorm1d(w) for w in widths) if batch_norm else None
        )
        self.latent_dim = widths[-1]

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        if points.dim() != 3 or points.shape[-1] != self.layers[0].in_features:
            raise ShapeError(f"expected (B, N, {self.layers[0].in_features}), got {tuple(points.shape)}")
        x = points
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if self.norms is not None:
                x = self.norms[i](x.transpose(1, 2)).transpose(1, 2)
            x = F.relu(x)
        return x.max(dim=1).values
