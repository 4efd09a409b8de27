"""Vector-attention encoder with progressive farthest-point downsampling."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ShapeError
from .common import cross_knn, fps_indices, index_points, knn_graph, mlp


class VectorAttention(nn.Module):
    """Channelwise attention over each point's k-nearest neighborhood.

    Attention logits come from query/key differences plus a learned relative
    positional term; weights are normalized per channel over the neighbors
    and applied to the learned value features.
    """

    def __init__(self, dim: int):
        super().__init__()
        self.to_q = nn.Linear(dim, dim)
        self.to_k = nn.Linear(dim, dim)
        self.to_v = nn.Linear(dim, dim)
        self.pos_mlp = mlp((3, dim, dim))
        self.weight_mlp = mlp((dim, dim, dim))

    def forward(self, points, feats, idx, return_weights: bool = False):
        if feats.shape[:2] != points.shape[:2] or idx.shape[:2] != feats.shape[:2]:
            raise ShapeError("points, features and neighbor indices are misaligned")
        q = self.to_q(feats).unsqueeze(2)  # (B, N, 1, C)
        k = index_points(self.to_k(feats), idx)  # (B, N, k, C)
        v = index_points(self.to_v(feats), idx)
        rel = points.unsqueeze(2) - index_points(points, idx)  # (B, N, k, 3)
        logits = self.weight_mlp(q - k + self.pos_mlp(rel))
        weights = torch.softmax(logits, dim=2)
        out = (weights * v).sum(dim=2)
        if return_weights:
            return out, weights
        return out


class TransitionDown(nn.Module):
    """FPS to a smaller point set, then max-pool lifted features over each
    kept point's neighborhood in the previous set (center included)."""

    def __init__(self, in_dim: int, out_dim: int, k: int):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim)
        self.k = k

    def forward(self, points, feats, m: int, seed: int):
        idx = fps_indices(points, m, seed)
        centers = index_points(points, idx)
        nidx = cross_knn(centers, points, min(self.k, points.shape[1]))
        lifted = index_points(F.relu(self.lin(feats)), nidx)
        return centers, lifted.max(dim=2).values


class PointTransformerEncoder(nn.Module):
    """Alternating vector-attention blocks and quarter-rate FPS stages:
    1024 -> 256 -> 64 -> 16 points at widening feature channels, finished
    with a global max pool."""

    def __init__(self, widths=(32, 64, 128, 512), counts=(1024, 256, 64, 16),
                 k: int = 16, in_dim: int = 3):
        super().__init__()
        if len(widths) != len(counts):
            raise ShapeError("widths and counts must align stage by stage")
        self.counts = tuple(counts)
        self.k = k
        self.embed = nn.Linear(in_dim, widths[0])
        self.attention = nn.ModuleList(VectorAttention(w) for w in widths)
        self.transitions = nn.ModuleList(
            TransitionDown(a, b, k) for a, b in zip(widths[:-1], widths[1:])
        )
        self.latent_dim = widths[-1]

    def forward(self, points: torch.Tensor, fps_seed: int = 0) -> torch.Tensor:
        if points.dim() != 3 or points.shape[-1] != 3:
            raise ShapeError(f"expected (B, N, 3), got {tuple(points.shape)}")
        if points.shape[1] != self.counts[0]:
            raise ShapeError(
                f"expected {self.counts[0]} points, got {points.shape[1]}"
            )
        feats = F.relu(self.embed(points))
        for stage, attn in enumerate(self.attention):
            idx = knn_graph(points, min(self.k, points.shape[1] - 1))
            feats = attn(points, feats, idx)
            if stage < len(self.transitions):
                points, feats = self.transitions[stage](
                    points, feats, self.counts[stage + 1], seed=fps_seed + stage
                )
        return feats.max(dim=1).values
