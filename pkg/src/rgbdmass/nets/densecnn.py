"""Dense-connectivity CNN image encoder with 1x1 bottlenecks.

A configurable desk-scale network with the DenseNet wiring: inside a block
every layer sees the concatenation of all previous outputs; transitions
halve channels with a 1x1 conv and downsample. Normalization layers are
deliberately absent so finite-difference gradient checks stay clean.
"""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ShapeError


class DenseLayer(nn.Module):
    def __init__(self, in_channels: int, growth: int, bottleneck: int = 4,
                 batch_norm: bool = False):
        super().__init__()
        self.reduce = nn.Conv2d(in_channels, bottleneck * growth, kernel_size=1)
        self.conv = nn.Conv2d(bottleneck * growth, growth, kernel_size=3, padding=1)
        self.norm = nn.BatchNorm2d(bottleneck * growth) if batch_norm else None

    def forward(self, x):
        h = self.reduce(x)
        if self.norm is not None:
            h = self.norm(h)
        return F.relu(self.conv(F.relu(h)))


class DenseBlock(nn.Module):
    def __init__(self, in_channels: int, n_layers: int, growth: int,
                 batch_norm: bool = False):
        super().__init__()
        self.layers = nn.ModuleList(
            DenseLayer(in_channels + i * growth, growth, batch_norm=batch_norm)
            for i in range(n_layers)
        )
        self.out_channels = in_channels + n_layers * growth

    def forward(self, x):
        for layer in self.layers:
            x = torch.cat([x, layer(x)], dim=1)
        return x


class Transition(nn.Module):
    def __init__(self, in_channels: int):
        super().__init__()
        self.out_channels = in_channels // 2
        self.conv = nn.Conv2d(in_channels, self.out_channels, kernel_size=1)

    def forward(self, x):
        return F.avg_pool2d(F.relu(self.conv(x)), 2)


class DenseCNNEncoder(nn.Module):
    def __init__(self, latent_dim: int = 512, growth: int = 12,
                 block_layers=(4, 4, 4), image_size: int = 64, in_channels: int = 3,
                 batch_norm: bool = False):
        super().__init__()
        self.image_size = image_size
        self.stem = nn.Conv2d(in_channels, 2 * growth, kernel_size=3, padding=1)
        channels = 2 * growth
        blocks: list[nn.Module] = []
        for i, n_layers in enumerate(block_layers):
            block = DenseBlock(channels, n_layers, growth, batch_norm=batch_norm)
            blocks.append(block)
            channels = block.out_channels
            if i < len(block_layers) - 1:
                transition = Transition(channels)
                blocks.append(transition)
                channels = transition.out_channels
        self.blocks = nn.Sequential(*blocks)
        self.fc = nn.Linear(channels, latent_dim)
        self.latent_dim = latent_dim

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        if images.dim() != 4 or images.shape[1] != self.stem.in_channels:
            raise ShapeError(f"expected (B, 3, H, W) images, got {tuple(images.shape)}")
        if images.shape[2] != self.image_size or images.shape[3] != self.image_size:
            raise ShapeError(
                f"expected {self.image_size}x{self.image_size} input, "
                f"got {images.shape[2]}x{images.shape[3]}"
            )
        x = F.avg_pool2d(F.relu(self.stem(images)), 2)
        x = self.blocks(x)
        pooled = x.mean(dim=(2, 3))
        return self.fc(pooled)
