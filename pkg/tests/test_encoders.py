import numpy as np
import pytest
import torch

from rgbdmass.errors import ShapeError
from rgbdmass.nets.densecnn import DenseCNNEncoder
from rgbdmass.nets.dgcnn import DGCNNEncoder, edge_features
from rgbdmass.nets.model import fuse_latents
from rgbdmass.nets.point_transformer import (
    PointTransformerEncoder,
    TransitionDown,
    VectorAttention,
)
from rgbdmass.nets.pointnet import PointNetEncoder
from rgbdmass.nets.common import knn_graph

torch.manual_seed(0)


def cloud(rng, n=1024, b=1):
    return torch.tensor(rng.normal(size=(b, n, 3)))


# ---------------------------------------------------------------- pointnet


def test_pointnet_latent_width(rng):
    enc = PointNetEncoder().double()
    out = enc(cloud(rng))
    assert out.shape == (1, 512)
    assert torch.isfinite(out).all()


def test_pointnet_exact_permutation_invariance(rng):
    enc = PointNetEncoder().double()
    pts = cloud(rng)
    base = enc(pts)
    for _ in range(20):
        perm = torch.tensor(rng.permutation(1024))
        diff = (enc(pts[:, perm]) - base).abs().max().item()
        assert diff == 0.0


def test_pointnet_degenerate_cloud_equals_single_point_feature(rng):
    enc = PointNetEncoder().double()
    point = torch.tensor(rng.normal(size=(1, 1, 3)))
    repeated = point.expand(1, 1024, 3).contiguous()
    latent = enc(repeated)
    # max over identical rows is the per-point feature of that one point
    x = repeated
    for layer in enc.layers:
        x = torch.relu(layer(x))
    assert torch.all(x == x[:, :1, :])  # rows really are identical
    assert torch.equal(latent, x[:, 0, :])


def test_pointnet_shape_error(rng):
    enc = PointNetEncoder()
    with pytest.raises(ShapeError):
        enc(torch.zeros(4, 10))
    with pytest.raises(ShapeError):
        enc(torch.zeros(1, 10, 4))


# ------------------------------------------------------------------- dgcnn


def test_edge_features_two_point_cloud(rng):
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([-1.0, 0.5, 2.0])
    pts = torch.tensor(np.stack([a, b])[None])
    idx = torch.tensor([[[1], [0]]])  # each point's only neighbor is the other
    feats = edge_features(pts, idx)
    assert feats.shape == (1, 2, 1, 6)
    np.testing.assert_allclose(feats[0, 0, 0].numpy(), np.concatenate([a - b, a]))
    np.testing.assert_allclose(feats[0, 1, 0].numpy(), np.concatenate([b - a, b]))


def test_edge_features_duplicate_points_zero_difference(rng):
    p = torch.tensor(rng.normal(size=(1, 1, 3))).expand(1, 6, 3)
    idx = knn_graph(p + torch.tensor(rng.normal(size=(1, 6, 3))) * 0, 2)  # degenerate dists
    feats = edge_features(p, idx)
    assert torch.all(feats[..., :3] == 0)
    assert torch.allclose(feats[..., 3:], p.unsqueeze(2).expand(-1, -1, 2, -1))


def test_edge_features_translation_moves_only_anchor_block(rng):
    pts = torch.tensor(rng.normal(size=(1, 40, 3)))
    idx = knn_graph(pts, 5)
    shift = torch.tensor([10.0, -3.0, 2.0])
    base = edge_features(pts, idx)
    moved = edge_features(pts + shift, idx)
    assert torch.allclose(moved[..., :3], base[..., :3], atol=1e-12)
    assert torch.allclose(moved[..., 3:], base[..., 3:] + shift, atol=1e-12)


def test_dgcnn_latent_width_and_determinism(rng):
    enc = DGCNNEncoder(k=8).double()
    pts = cloud(rng, n=256)
    a = enc(pts)
    b = enc(pts.clone())
    assert a.shape == (1, 512)
    assert torch.equal(a, b)
    assert torch.isfinite(a).all()


def test_dgcnn_permutation_invariance(rng):
    enc = DGCNNEncoder(k=6).double()
    pts = cloud(rng, n=128)
    base = enc(pts)
    perm = torch.tensor(rng.permutation(128))
    assert (enc(pts[:, perm]) - base).abs().max().item() == 0.0


def test_dgcnn_translation_invariant_when_anchor_weights_zeroed(rng):
    enc = DGCNNEncoder(k=6).double()
    with torch.no_grad():
        for block in enc.blocks:
            in_dim = block.lin.in_features // 2
            block.lin.weight[:, in_dim:] = 0.0
    pts = cloud(rng, n=128)
    base = enc(pts)
    moved = enc(pts + torch.tensor([5.0, -2.0, 1.0]))
    assert (moved - base).abs().max().item() < 1e-6


def test_dgcnn_static_mode_uses_coordinate_graphs(rng):
    pts = cloud(rng, n=64)
    static = DGCNNEncoder(k=4, dynamic=False).double()
    out = static(pts)
    assert out.shape == (1, 512)


# ------------------------------------------------------------ pt attention


def test_vector_attention_uniform_weights_on_duplicates(rng):
    attn = VectorAttention(8).double()
    feats = torch.tensor(rng.normal(size=(1, 1, 8))).expand(1, 5, 8).contiguous()
    pts = torch.tensor(rng.normal(size=(1, 1, 3))).expand(1, 5, 3).contiguous()
    idx = torch.tensor([[[1, 2, 3, 4]] * 5]) % 5
    out, weights = attn(pts, feats, idx, return_weights=True)
    assert torch.allclose(weights, torch.full_like(weights, 0.25), atol=1e-12)


def test_vector_attention_k1_returns_value_transform(rng):
    attn = VectorAttention(8).double()
    feats = torch.tensor(rng.normal(size=(1, 6, 8)))
    pts = torch.tensor(rng.normal(size=(1, 6, 3)))
    idx = knn_graph(pts, 1)
    out = attn(pts, feats, idx)
    values = attn.to_v(feats)
    expected = values.gather(1, idx.squeeze(-1).unsqueeze(-1).expand(-1, -1, 8))
    assert torch.allclose(out, expected, atol=1e-12)


def test_vector_attention_weights_sum_to_one(rng):
    attn = VectorAttention(16).double()
    pts = torch.tensor(rng.normal(size=(2, 40, 3)))
    feats = torch.tensor(rng.normal(size=(2, 40, 16)))
    idx = knn_graph(pts, 7)
    _, weights = attn(pts, feats, idx, return_weights=True)
    sums = weights.sum(dim=2)
    assert torch.all(weights >= 0)
    assert (sums - 1.0).abs().max().item() < 1e-6


def test_transition_down_shapes(rng):
    td = TransitionDown(8, 16, k=4).double()
    pts = torch.tensor(rng.normal(size=(2, 32, 3)))
    feats = torch.tensor(rng.normal(size=(2, 32, 8)))
    new_pts, new_feats = td(pts, feats, 8, seed=0)
    assert new_pts.shape == (2, 8, 3)
    assert new_feats.shape == (2, 8, 16)


def test_point_transformer_stage_counts(rng):
    enc = PointTransformerEncoder(widths=(8, 8, 16, 32), k=4).double()
    seen = []
    hooks = [
        a.register_forward_hook(lambda m, args, out: seen.append(args[1].shape[1]))
        for a in enc.attention
    ]
    out = enc(cloud(rng))
    for h in hooks:
        h.remove()
    assert seen == [1024, 256, 64, 16]
    assert out.shape == (1, 32)


def test_point_transformer_deterministic_given_seed(rng):
    enc = PointTransformerEncoder(widths=(8, 8, 8, 16), k=4).double()
    pts = cloud(rng)
    a = enc(pts, fps_seed=5)
    b = enc(pts.clone(), fps_seed=5)
    assert torch.equal(a, b)
    assert torch.isfinite(a).all()


def test_point_transformer_latent_width_default(rng):
    enc = PointTransformerEncoder(k=4).double()
    out = enc(cloud(rng))
    assert out.shape == (1, 512)


def test_point_transformer_rejects_wrong_count(rng):
    enc = PointTransformerEncoder(widths=(8, 8, 8, 8), k=4)
    with pytest.raises(ShapeError):
        enc(torch.zeros(1, 100, 3))


# --------------------------------------------------------------------- cnn


def test_cnn_zero_image_zero_biases_gives_zero_latent():
    enc = DenseCNNEncoder(latent_dim=64, growth=4, block_layers=(2, 2), image_size=16)
    with torch.no_grad():
        for p in enc.parameters():
            if p.dim() == 1:
                p.zero_()
    out = enc(torch.zeros(2, 3, 16, 16))
    assert torch.all(out == 0)


def test_cnn_latent_width_1024_image_only_config(rng):
    enc = DenseCNNEncoder(latent_dim=1024, growth=4, block_layers=(2, 2), image_size=32)
    out = enc(torch.tensor(rng.uniform(size=(1, 3, 32, 32)), dtype=torch.float32))
    assert out.shape == (1, 1024)
    assert torch.isfinite(out).all()


def test_cnn_desk_config_shape_and_timing(rng):
    import time

    enc = DenseCNNEncoder()  # 512-wide latent, growth 12, 64x64
    img = torch.tensor(rng.uniform(size=(1, 3, 64, 64)), dtype=torch.float32)
    enc(img)  # warm-up
    t0 = time.perf_counter()
    out = enc(img)
    elapsed = time.perf_counter() - t0
    assert out.shape == (1, 512)
    assert torch.isfinite(out).all()
    print(f"dense cnn forward: {elapsed * 1e3:.1f} ms")


def test_cnn_shape_errors():
    enc = DenseCNNEncoder(image_size=64)
    with pytest.raises(ShapeError):
        enc(torch.zeros(1, 3, 32, 32))
    with pytest.raises(ShapeError):
        enc(torch.zeros(1, 1, 64, 64))


def test_batch_norm_option_forwards(rng):
    # normalization is off by default; the opt-in flag must build and run
    pts = cloud(rng, n=64, b=4).float()
    pn = PointNetEncoder(widths=(8, 16), batch_norm=True)
    assert torch.isfinite(pn(pts)).all()
    dg = DGCNNEncoder(k=4, widths=(8, 8), latent_dim=16, batch_norm=True)
    assert torch.isfinite(dg(pts)).all()
    cnn = DenseCNNEncoder(latent_dim=16, growth=2, block_layers=(1, 1),
                          image_size=16, batch_norm=True)
    img = torch.tensor(rng.uniform(size=(4, 3, 16, 16)), dtype=torch.float32)
    assert torch.isfinite(cnn(img)).all()
    assert PointNetEncoder(widths=(8, 16)).norms is None


# -------------------------------------------------------------------- fuse


def test_fuse_latents_concatenates_image_first(rng):
    img = torch.full((2, 512), 1.0)
    pc = torch.full((2, 512), 2.0)
    fused = fuse_latents(img, pc)
    assert fused.shape == (2, 1024)
    assert torch.all(fused[:, :512] == 1.0)
    assert torch.all(fused[:, 512:] == 2.0)


def test_fuse_latents_image_only_passthrough():
    img = torch.ones(3, 1024)
    assert fuse_latents(img, None) is img


def test_fuse_latents_batch_mismatch():
    with pytest.raises(ShapeError):
        fuse_latents(torch.ones(2, 512), torch.ones(3, 512))
