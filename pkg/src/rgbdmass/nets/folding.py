"""Grid-folding reconstruction decoder (shared per-point MLPs)."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..errors import ShapeError
from .common import mlp


def folding_grid(size: int = 16) -> np.ndarray:
    """Uniform (size^2, 2) grid covering [-1, 1]^2."""
    ticks = np.linspace(-1.0, 1.0, size)
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


class FoldingDecoder(nn.Module):
    """Two folding passes deform a fixed 2D grid into a coarse 3D cloud.

    Each pass applies one shared MLP to every grid point, conditioned on the
    latent code; permuting grid points therefore permutes outputs identically.
    """

    def __init__(self, latent_dim: int = 1024, grid_size: int = 16, hidden=(256, 128)):
        super().__init__()
        self.latent_dim = latent_dim
        self.grid_size = grid_size
        self.register_buffer(
            "grid", torch.tensor(folding_grid(grid_size), dtype=torch.get_default_dtype())
        )
        self.fold1 = mlp((latent_dim + 2, *hidden, 3))
        self.fold2 = mlp((latent_dim + 3, *hidden, 3))

    @property
    def num_points(self) -> int:
        return self.grid_size**2

    def forward(self, latent: torch.Tensor, grid: torch.Tensor | None = None) -> torch.Tensor:
        if latent.dim() != 2 or latent.shape[1] != self.latent_dim:
            raise ShapeError(f"expected (B, {self.latent_dim}) latent, got {tuple(latent.shape)}")
        base = self.grid if grid is None else grid.to(latent.dtype)
        b, g = latent.shape[0], base.shape[0]
        tiled = base.unsqueeze(0).expand(b, g, 2).to(latent.device)
        ctx = latent.unsqueeze(1).expand(b, g, self.latent_dim)
        first = self.fold1(torch.cat([tiled, ctx], dim=-1))
        return self.fold2(torch.cat([first, ctx], dim=-1))
