"""Edge-convolution encoder over dynamically recomputed k-NN graphs."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ShapeError
from .common import index_points, knn_graph


def edge_features(x: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    """Per-neighbor features [x_i - x_j, x_i], shape (B, N, k, 2C).

    The difference block cancels under translation; the identity block keeps
    absolute position information.
    """
    if x.dim() != 3 or idx.dim() != 3 or x.shape[:2] != idx.shape[:2]:
        raise ShapeError(
            f"inconsistent edge feature inputs: {tuple(x.shape)} vs {tuple(idx.shape)}"
        )
    neighbors = index_points(x, idx)
    anchors = x.unsqueeze(2).expand_as(neighbors)
    return torch.cat([anchors - neighbors, anchors], dim=-1)


class EdgeConv(nn.Module):
    """Shared linear layer on [x_i - x_j, x_i] edges, max-pooled over the k
    neighbors. Computes the identical function to
    `relu(lin(edge_features(x, idx))).max(dim=2)` in three cheaper steps:

    - the linear map factors as (Wd x)_i - (Wd x)_j + (Wa x)_i + b, turning
      the per-edge matmul into two per-point matmuls;
    - relu is nondecreasing, so the neighbor max equals
      relu(c_i - min_j (Wd x)_j);
    - the minimizing neighbor per (point, channel) is selected without
      autograd, and gradients flow through one (B, N, C) gather.
    """

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin = nn.Linear(2 * in_dim, out_dim)
        self.in_dim = in_dim

    def forward(self, x, idx):
        diff_w = self.lin.weight[:, : self.in_dim]
        anchor_w = self.lin.weight[:, self.in_dim :]
        diff_part = x @ diff_w.T  # (B, N, out)
        anchor_part = x @ anchor_w.T + self.lin.bias
        with torch.no_grad():
            slots = index_points(diff_part, idx).min(dim=2).indices  # (B, N, out)
            # map winning neighbor slots back to point indices per channel
            min_idx = torch.gather(
                idx.unsqueeze(-1).expand(-1, -1, -1, slots.shape[-1]),
                2,
                slots.unsqueeze(2),
            ).squeeze(2)
        selected = torch.gather(diff_part, 1, min_idx)
        return F.relu(diff_part + anchor_part - selected)


class DGCNNEncoder(nn.Module):
    """Stacked edge convolutions; each block rebuilds its k-NN graph in the
    current feature space (set `dynamic=False` to pin all graphs to the input
    coordinates for debugging). Block outputs are concatenated into the head,
    then max-pooled into the global latent."""

    def __init__(self, k: int = 20, widths=(64, 64, 128, 256), latent_dim: int = 512,
                 in_dim: int = 3, dynamic: bool = True, batch_norm: bool = False):
        super().__init__()
        self.k = k
        self.dynamic = dynamic
        dims = (in_dim, *widths)
        self.blocks = nn.ModuleList(EdgeConv(a, b) for a, b in zip(dims[:-1], dims[1:]))
        # normalization, when enabled, sits on the pooled per-point features
        self.norms = (
            nn.ModuleList(nn.BatchNorm1d(w) for w in widths) if batch_norm else None
        )
        self.head = nn.Linear(sum(widths), latent_dim)
        self.latent_dim = latent_dim

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        if points.dim() != 3 or points.shape[-1] != 3:
            raise ShapeError(f"expected (B, N, 3), got {tuple(points.shape)}")
        x = points
        outputs = []
        for i, block in enumerate(self.blocks):
            graph_source = x if (self.dynamic or i == 0) else points
            idx = knn_graph(graph_source, self.k)
            x = block(x, idx)
            if self.norms is not None:
                x = self.norms[i](x.transpose(1, 2)).transpose(1, 2)
            outputs.append(x)
        fused = F.relu(self.head(torch.cat(outputs, dim=-1)))
        return fused.max(dim=1).values
