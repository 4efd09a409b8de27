import json
import math

import numpy as np
import pytest
import torch

from rgbdmass.errors import DomainError, ShapeError
from rgbdmass.nets.folding import FoldingDecoder, folding_grid
from rgbdmass.nets.heads import (
    DensityHead,
    MassPrediction,
    VolumeHead,
    density_activation,
    predict_mass,
)

torch.manual_seed(0)


# ----------------------------------------------------------------- density


def test_density_activation_bounds_and_midpoint():
    z = torch.tensor([-60.0, 0.0, 60.0], dtype=torch.float64)
    rho = density_activation(z)
    assert rho[0] == pytest.approx(10.0, rel=1e-9)
    assert rho[1] == pytest.approx(math.sqrt(10.0 * 10000.0), rel=1e-12)  # 316.2278
    assert rho[2] == pytest.approx(10000.0, rel=1e-9)


def test_density_activation_strictly_monotone():
    z = torch.linspace(-20, 20, 201, dtype=torch.float64)
    rho = density_activation(z)
    assert torch.all(rho[1:] > rho[:-1])


def test_density_head_output_in_range(rng):
    head = DensityHead(latent_dim=32).double()
    latent = torch.tensor(rng.normal(size=(64, 32)) * 10)
    rho = head(latent)
    assert torch.all(rho > 10.0) and torch.all(rho < 10000.0)


def test_density_head_zero_params_gives_geometric_mean():
    head = DensityHead(latent_dim=8).double()
    with torch.no_grad():
        for p in head.parameters():
            p.zero_()
    rho = head(torch.zeros(3, 8, dtype=torch.float64))
    assert torch.allclose(rho, torch.full_like(rho, math.sqrt(1e5)), rtol=1e-12)


def test_density_head_custom_bounds(rng):
    head = DensityHead(latent_dim=8, rho_min=100.0, rho_max=900.0).double()
    rho = head(torch.tensor(rng.normal(size=(16, 8)) * 20))
    assert torch.all(rho > 100.0) and torch.all(rho < 900.0)
    with pytest.raises(DomainError):
        DensityHead(latent_dim=8, rho_min=10.0, rho_max=1.0)


# ------------------------------------------------------------------ volume


def test_volume_head_non_negative(rng):
    head = VolumeHead(latent_dim=16).double()
    latent = torch.tensor(rng.normal(size=(128, 16)) * 5)
    assert torch.all(head(latent) >= 0)


def test_volume_relu_semantics():
    z = torch.tensor([-1.0, 0.002, 0.0], requires_grad=True)
    out = torch.relu(z)
    assert out[0].item() == 0.0
    assert out[1].item() == pytest.approx(0.002)
    out.sum().backward()
    assert z.grad[0] == 0.0 and z.grad[1] == 1.0


def test_volume_head_fresh_model_predicts_positive(rng):
    # positive final bias keeps a fresh head off the all-dead branch
    head = VolumeHead(latent_dim=16).double()
    assert head(torch.zeros(1, 16, dtype=torch.float64)).item() > 0
    latent = torch.tensor(rng.normal(size=(64, 16)) * 0.01)
    assert torch.all(head(latent) > 0)


def test_heads_shape_errors():
    with pytest.raises(ShapeError):
        DensityHead(latent_dim=8)(torch.zeros(2, 9))
    with pytest.raises(ShapeError):
        VolumeHead(latent_dim=8)(torch.zeros(2, 7))


# -------------------------------------------------------------------- mass


def test_predict_mass_b_cancels():
    for b in (1.0, 16.5, 100.0):
        mass, sd, sv = predict_mass(torch.tensor(500.0, dtype=torch.float64),
                                    torch.tensor(0.002, dtype=torch.float64), b)
        assert mass.item() == pytest.approx(1.0, rel=1e-12)
        assert sd.item() == pytest.approx(500.0 * b, rel=1e-12)
        assert sv.item() == pytest.approx(0.002 / b, rel=1e-12)


def test_predict_mass_zero_volume():
    mass, _, _ = predict_mass(torch.tensor(800.0), torch.tensor(0.0))
    assert mass.item() == 0.0


def test_predict_mass_rejects_bad_b():
    with pytest.raises(DomainError):
        predict_mass(torch.tensor(1.0), torch.tensor(1.0), b=0.0)
    with pytest.raises(DomainError):
        predict_mass(torch.tensor(1.0), torch.tensor(1.0), b=-2.0)


def test_mass_prediction_record_roundtrip():
    pred = MassPrediction(density=500.0, volume=0.002, mass=1.0, b=16.5)
    parsed = json.loads(pred.to_json_line())
    assert parsed == {"density": 500.0, "volume": 0.002, "mass": 1.0, "b": 16.5}
    with pytest.raises(DomainError):
        MassPrediction(density=500.0, volume=0.002, mass=2.0)
    with pytest.raises(DomainError):
        MassPrediction(density=500.0, volume=-0.1, mass=-50.0)


# ----------------------------------------------------------------- folding


def test_folding_grid_covers_unit_square():
    grid = folding_grid(16)
    assert grid.shape == (256, 2)
    assert grid.min() == -1.0 and grid.max() == 1.0
    # uniform spacing on each axis
    xs = np.unique(grid[:, 0])
    np.testing.assert_allclose(np.diff(xs), 2.0 / 15, atol=1e-12)


def test_folding_decoder_point_count(rng):
    dec = FoldingDecoder(latent_dim=32, grid_size=16).double()
    latent = torch.tensor(rng.normal(size=(2, 32)))
    out = dec(latent)
    assert out.shape == (2, 256, 3)
    assert torch.isfinite(out).all()


def test_folding_decoder_purity(rng):
    dec = FoldingDecoder(latent_dim=16, grid_size=8).double()
    latent = torch.tensor(rng.normal(size=(1, 16)))
    assert torch.equal(dec(latent), dec(latent.clone()))


def test_folding_decoder_grid_permutation_equivariance(rng):
    dec = FoldingDecoder(latent_dim=16, grid_size=8).double()
    latent = torch.tensor(rng.normal(size=(1, 16)))
    perm = rng.permutation(64)
    base = dec(latent)
    permuted = dec(latent, grid=dec.grid[perm])
    assert torch.allclose(permuted, base[:, perm], atol=0)


def test_folding_decoder_shape_error(rng):
    dec = FoldingDecoder(latent_dim=16)
    with pytest.raises(ShapeError):
        dec(torch.zeros(2, 15))
