import numpy as np
import pytest
import torch

from rgbdmass.errors import ConfigError, ShapeError
from rgbdmass.nets.losses import alde_loss, chamfer_loss
from rgbdmass.nets.model import VARIANTS, MassModel
from rgbdmass.objectives import alde, chamfer

SMALL = dict(
    image_size=16, num_points=64, growth=2, block_layers=(1, 1),
    pointnet_widths=(8, 16), dgcnn_widths=(8, 8), point_latent=16,
    image_latent=16, pt_widths=(8, 8, 16), pt_counts=(64, 16, 4),
    head_hidden=(16, 8), grid_size=4, fold_hidden=(16, 8), k=4,
)


def small_model(variant, seed=0, **overrides) -> MassModel:
    torch.manual_seed(seed)
    return MassModel(variant, **{**SMALL, **overrides})


def batch_inputs(rng, b=2, image_size=16, n=64, dtype=torch.float32):
    images = torch.tensor(rng.uniform(size=(b, 3, image_size, image_size)), dtype=dtype)
    points = torch.tensor(rng.normal(size=(b, n, 3)) * 0.2, dtype=dtype)
    return images, points


@pytest.mark.parametrize("variant", VARIANTS)
def test_every_variant_forwards(variant, rng):
    model = small_model(variant)
    images, points = batch_inputs(rng)
    out = model(images, points)
    assert out["mass"].shape == (2,)
    assert torch.all(out["density"] > 0)
    assert torch.all(out["volume"] >= 0)
    assert torch.isfinite(out["mass"]).all()
    torch.testing.assert_close(out["mass"], out["density"] * out["volume"], rtol=1e-5, atol=1e-9)
    if variant == "pointnet_folding":
        assert out["reconstruction"].shape == (2, 16, 3)
    else:
        assert "reconstruction" not in out


def test_image_only_needs_no_points(rng):
    model = small_model("image_only")
    images, _ = batch_inputs(rng)
    out = model(images)
    assert model.point_encoder is None
    assert out["latent"].shape == (2, 16)


def test_image_only_default_latent_is_1024(rng):
    model = MassModel("image_only", image_size=16, growth=2, block_layers=(1, 1))
    assert model.image_encoder.latent_dim == 1024
    fused = MassModel("pointnet", image_size=16, growth=2, block_layers=(1, 1))
    assert fused.image_encoder.latent_dim == 512
    assert fused.point_encoder.latent_dim == 512


def test_point_variant_requires_points(rng):
    model = small_model("pointnet")
    images, points = batch_inputs(rng)
    with pytest.raises(ShapeError):
        model(images)
    with pytest.raises(ShapeError):
        model(images, points[:, :10])


def test_unknown_variant_rejected():
    with pytest.raises(ConfigError):
        MassModel("alchemy")


def test_forward_is_deterministic(rng):
    model = small_model("point_transformer")
    images, points = batch_inputs(rng)
    a = model(images, points, fps_seed=3)
    b = model(images, points.clone(), fps_seed=3)
    assert torch.equal(a["mass"], b["mass"])


def test_scaled_factors_expose_balance(rng):
    model = small_model("pointnet", balance_b=16.5)
    images, points = batch_inputs(rng)
    out = model(images, points)
    torch.testing.assert_close(out["scaled_density"], out["density"] * 16.5)
    torch.testing.assert_close(out["scaled_volume"], out["volume"] / 16.5)


def test_balance_invariance_through_model(rng):
    images, points = batch_inputs(rng, dtype=torch.float64)
    masses = {}
    for b in (1.0, 16.5, 100.0):
        model = small_model("pointnet", seed=7, balance_b=b).double()
        masses[b] = model(images, points)["mass"]
    for b in (16.5, 100.0):
        denom = masses[1.0].abs().clamp_min(1e-30)  # mass can be exactly 0
        rel = ((masses[b] - masses[1.0]).abs() / denom).max().item()
        assert rel < 1e-12


# ------------------------------------------------------------ torch losses


def test_alde_loss_matches_reference(rng):
    true = rng.uniform(0.1, 30.0, size=50)
    pred = rng.uniform(0.1, 30.0, size=50)
    ours = alde_loss(torch.tensor(pred), torch.tensor(true)).item()
    reference = float(np.mean(alde(true, pred)))
    assert ours == pytest.approx(reference, rel=1e-9)


def test_alde_loss_finite_at_zero_mass():
    loss = alde_loss(torch.tensor([0.0]), torch.tensor([1.0]))
    assert torch.isfinite(loss)


def test_chamfer_loss_matches_reference(rng):
    pred = rng.normal(size=(3, 20, 3))
    targets = [rng.normal(size=(rng.integers(5, 30), 3)) for _ in range(3)]
    ours = chamfer_loss(
        torch.tensor(pred), [torch.tensor(t) for t in targets]
    ).item()
    reference = np.mean([chamfer(pred[i], targets[i]) for i in range(3)])
    assert ours == pytest.approx(reference, rel=1e-9)


def test_chamfer_loss_gradient_flows(rng):
    pred = torch.tensor(rng.normal(size=(1, 8, 3)), requires_grad=True)
    target = [torch.tensor(rng.normal(size=(5, 3)))]
    chamfer_loss(pred, target).backward()
    assert pred.grad is not None and torch.isfinite(pred.grad).all()


# -------------------------------------------------------- gradient sampling


@pytest.mark.parametrize("variant", VARIANTS)
def test_sampled_gradients_match_finite_differences(variant, rng):
    from gradcheck import check_gradients
    from rgbdmass.nets.losses import alde_loss, chamfer_loss

    model = small_model(variant, seed=11).double()
    images, points = batch_inputs(rng, dtype=torch.float64)
    masses = torch.tensor(rng.uniform(0.5, 5.0, size=2), dtype=torch.float64)
    targets = [torch.tensor(rng.normal(size=(12, 3)) * 0.2) for _ in range(2)]

    def loss_fn():
        out = model(images, points, fps_seed=0)
        loss = alde_loss(out["mass"], masses)
        if model.has_reconstruction:
            loss = loss + chamfer_loss(out["reconstruction"], targets)
        return loss

    worst, n_checked, failures = check_gradients(model, loss_fn, max_per_tensor=4, seed=5)
    assert not failures, failures[:3]
    assert n_checked > 50
