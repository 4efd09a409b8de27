"""Differentiable training losses (torch); the numpy metric suite in
`rgbdmass.objectives` is the evaluation reference these are tested against."""

from __future__ import annotations

import torch

from ..errors import EmptySetError
from .common import pairwise_sq_dists

# keeps log(mass) finite if the volume head collapses to zero
_MASS_FLOOR = 1e-12


def alde_loss(mass_pred: torch.Tensor, mass_true: torch.Tensor) -> torch.Tensor:
    """Mean absolute log difference between predicted and true mass."""
    return (torch.log(mass_true) - torch.log(mass_pred.clamp_min(_MASS_FLOOR))).abs().mean()


def chamfer_loss(pred: torch.Tensor, targets: list[torch.Tensor]) -> torch.Tensor:
    """Mean symmetric squared-nearest-neighbor distance over the batch.

    `targets` holds one (n_i, 3) cloud per sample so padding never leaks
    into the reconstruction objective.
    """
    if len(targets) != pred.shape[0]:
        raise EmptySetError("one target cloud per predicted cloud is required")
    terms = []
    for i, target in enumerate(targets):
        if target.numel() == 0:
            raise EmptySetError("empty reconstruction target")
        d2 = pairwise_sq_dists(pred[i].unsqueeze(0), target.unsqueeze(0)).squeeze(0)
        terms.append(d2.min(dim=1).values.mean() + d2.min(dim=0).values.mean())
    return torch.stack(terms).mean()
