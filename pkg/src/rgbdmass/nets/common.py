"""Shared torch utilities: batched neighbor search, FPS, MLP building."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..errors import DomainError, ShapeError


def pairwise_sq_dists(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """(B, N, C) x (B, M, C) -> (B, N, M) squared Euclidean distances."""
    a2 = (a * a).sum(dim=-1, keepdim=True)  # (B, N, 1)
    b2 = (b * b).sum(dim=-1).unsqueeze(1)  # (B, 1, M)
    d2 = a2 + b2 - 2.0 * a @ b.transpose(1, 2)
    return d2.clamp_min_(0.0)


def knn_graph(x: torch.Tensor, k: int) -> torch.Tensor:
    """Exact k-NN indices (B, N, k) over each cloud, self excluded.

    Neighbors come back sorted by distance (partial top-k selection; exact
    distance ties follow topk's deterministic internal order). The reference
    single-cloud implementation lives in `rgbdmass.pointcloud.knn`.
    """
    if x.dim() != 3:
        raise ShapeError(f"knn_graph expects (B, N, C), got {tuple(x.shape)}")
    n = x.shape[1]
    if not (0 < k < n):
        raise DomainError(f"k must satisfy 0 < k < N, got k={k}, N={n}")
    with torch.no_grad():
        d2 = pairwise_sq_dists(x, x)
        idx = torch.arange(n, device=x.device)
        d2[:, idx, idx] = float("inf")
        order = torch.topk(d2, k, dim=-1, largest=False).indices
    return order


def cross_knn(queries: torch.Tensor, points: torch.Tensor, k: int) -> torch.Tensor:
    """k nearest `points` for each query, (B, M, k); self-matches allowed."""
    if not (0 < k <= points.shape[1]):
        raise DomainError(f"k must satisfy 0 < k <= N, got k={k}, N={points.shape[1]}")
    with torch.no_grad():
        d2 = pairwise_sq_dists(queries, points)
        order = torch.topk(d2, k, dim=-1, largest=False).indices
    return order


def fps_indices(points: torch.Tensor, m: int, seed: int = 0) -> torch.Tensor:
    """Batched greedy farthest-point sampling, (B, m) indices.

    The seed fixes the shared starting index; afterwards the choice is the
    deterministic maximin with ties going to the lower index.
    """
    if points.dim() != 3:
        raise ShapeError(f"fps_indices expects (B, N, 3), got {tuple(points.shape)}")
    b, n, _ = points.shape
    if not (1 <= m <= n):
        raise DomainError(f"m must satisfy 1 <= m <= N, got m={m}, N={n}")
    with torch.no_grad():
        pts = points.detach()
        start = int(np.random.default_rng(seed).permutation(n)[0])
        chosen = torch.empty(b, m, dtype=torch.long, device=points.device)
        chosen[:, 0] = start
        diff = pts - pts[:, start : start + 1]
        min_d2 = (diff * diff).sum(dim=-1)  # (B, N)
        batch_idx = torch.arange(b, device=points.device)
        for i in range(1, m):
            nxt = torch.argmax(min_d2, dim=1)
            chosen[:, i] = nxt
            diff = pts - pts[batch_idx, nxt].unsqueeze(1)
            min_d2 = torch.minimum(min_d2, (diff * diff).sum(dim=-1))
    return chosen


def index_points(x: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    """Gather rows of x (B, N, C) by idx (B, M) -> (B, M, C) or
    (B, N, k) -> (B, N, k, C)."""
    if idx.dim() == 2:
        expand = idx.unsqueeze(-1).expand(-1, -1, x.shape[-1])
        return torch.gather(x, 1, expand)
    if idx.dim() == 3:
        b, n, k = idx.shape
        flat = torch.gather(
            x, 1, idx.reshape(b, n * k).unsqueeze(-1).expand(-1, -1, x.shape[-1])
        )
        return flat.reshape(b, n, k, x.shape[-1])
    raise ShapeError(f"unsupported index shape {tuple(idx.shape)}")


def mlp(widths, final_activation: bool = False) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append(nn.Linear(a, b))
        if i < len(widths) - 2 or final_activation:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)
