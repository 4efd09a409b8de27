"""Density and volume regression heads and the balanced mass product."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import torch
from torch import nn

from ..errors import DomainError, ShapeError
from .common import mlp

DEFAULT_BALANCE = 16.5
DEFAULT_RHO_MIN = 10.0  # light foams
DEFAULT_RHO_MAX = 10000.0  # dense metals

# Fresh models must start at a plausible mass and keep the volume ReLU out
# of its (unrecoverable) all-dead zone: the volume head's output layer
# starts at zero weights so its early movement is bias-driven (bounded
# Adam overshoot), while mass corrections flow through the bounded density
# activation, which cannot die. A fresh model predicts
# ~27 kg/m^3 * 0.025 m^3 ~ 0.7 kg for every input.
VOLUME_BIAS_INIT = 0.025
DENSITY_BIAS_INIT = -2.2


def density_activation(z: torch.Tensor, rho_min: float = DEFAULT_RHO_MIN,
                       rho_max: float = DEFAULT_RHO_MAX) -> torch.Tensor:
    """Logistic curve in log-density space: a bounded, strictly monotone map
    from the reals onto (rho_min, rho_max)."""
    if not (0 < rho_min < rho_max):
        raise DomainError("need 0 < rho_min < rho_max")
    log_min, log_max = math.log(rho_min), math.log(rho_max)
    return torch.exp(log_min + torch.sigmoid(z) * (log_max - log_min))


class DensityHead(nn.Module):
    """FC regressor bounded to a plausible density range by
    :func:`density_activation`."""

    def __init__(self, latent_dim: int = 1024, hidden=(256, 64),
                 rho_min: float = DEFAULT_RHO_MIN, rho_max: float = DEFAULT_RHO_MAX):
        super().__init__()
        if not (0 < rho_min < rho_max):
            raise DomainError("need 0 < rho_min < rho_max")
        self.net = mlp((latent_dim, *hidden, 1))
        nn.init.constant_(self.net[-1].bias, DENSITY_BIAS_INIT)
        self.rho_min = rho_min
        self.rho_max = rho_max

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        _check_latent(latent, self.net[0].in_features)
        z = self.net(latent).squeeze(-1)
        return density_activation(z, self.rho_min, self.rho_max)


class VolumeHead(nn.Module):
    """FC regressor with a final ReLU, so volumes are never negative."""

    def __init__(self, latent_dim: int = 1024, hidden=(256, 64)):
        super().__init__()
        self.net = mlp((latent_dim, *hidden, 1))
        nn.init.zeros_(self.net[-1].weight)
        nn.init.constant_(self.net[-1].bias, VOLUME_BIAS_INIT)

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        _check_latent(latent, self.net[0].in_features)
        return torch.relu(self.net(latent).squeeze(-1))


def _check_latent(latent: torch.Tensor, expected: int) -> None:
    if latent.dim() != 2 or latent.shape[1] != expected:
        raise ShapeError(f"expected (B, {expected}) latent, got {tuple(latent.shape)}")


def predict_mass(density, volume, b: float = DEFAULT_BALANCE):
    """mass = (density * b) * (volume / b).

    The constant cancels algebraically; it only rescales the two factors so
    they sit at comparable magnitudes. Both scaled factors are returned for
    balance diagnostics.
    """
    if b <= 0:
        raise DomainError(f"balancing constant must be positive, got {b}")
    scaled_density = density * b
    scaled_volume = volume / b
    return scaled_density * scaled_volume, scaled_density, scaled_volume


@dataclass(frozen=True)
class MassPrediction:
    density: float  # kg/m^3
    volume: float  # m^3
    mass: float  # kg
    b: float = DEFAULT_BALANCE

    def __post_init__(self):
        if self.volume < 0:
            raise DomainError("volume must be non-negative")
        product = self.density * self.volume
        if abs(self.mass - product) > 1e-6 * max(abs(product), 1e-30):
            raise DomainError("mass must equal density * volume")

    def to_json_line(self) -> str:
        return json.dumps(
            {"density": self.density, "volume": self.volume, "mass": self.mass, "b": self.b}
        )
