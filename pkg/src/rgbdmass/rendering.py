"""Software ray renderer: z-depth plus flat lambertian RGB for small meshes."""

from __future__ import annotations

import numpy as np

from .cameras import CameraPose, Intrinsics, camera_basis
from .depthmaps import UNITS_METRIC, DepthImage
from .errors import RenderError
from .meshes import TriangleMesh

_RAY_CHUNK = 4096
_TRI_CHUNK = 256
_EPS = 1e-12

DEFAULT_ALBEDO = (0.72, 0.72, 0.72)
# directional light, camera frame, roughly over the camera's left shoulder
_LIGHT_DIR = np.array([0.3, -0.45, 0.84])
_AMBIENT = 0.25


def render_depth(
    mesh: TriangleMesh,
    pose: CameraPose,
    intrinsics: Intrinsics,
    albedo=DEFAULT_ALBEDO,
) -> tuple[DepthImage, np.ndarray]:
    """Render one view. Returns (metric DepthImage, uint8 RGB image).

    Depth is the distance along the camera z-axis to the nearest triangle;
    pixels with no intersection are invalid and carry the 0 sentinel.
    """
    if len(mesh.faces) == 0:
        raise RenderError("mesh has no triangles")
    rot, origin = camera_basis(pose)  # raises RenderError when degenerate

    h, w = intrinsics.height, intrinsics.width
    u, v = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    # camera-frame direction with unit z component: the ray parameter t at the
    # intersection is then exactly the z-depth
    dirs_cam = np.stack(
        [
            (u - intrinsics.cx) / intrinsics.fx,
            (v - intrinsics.cy) / intrinsics.fy,
            np.ones_like(u),
        ],
        axis=-1,
    ).reshape(-1, 3)
    dirs_world = dirs_cam @ rot

    tri = mesh.vertices[mesh.faces]  # (F, 3, 3)
    depth_flat, tri_idx = _trace(origin, dirs_world, tri)

    valid = np.isfinite(depth_flat)
    depth = np.where(valid, depth_flat, 0.0).reshape(h, w)
    depth_image = DepthImage(
        data=depth, valid=valid.reshape(h, w), units=UNITS_METRIC, intrinsics=intrinsics
    )

    rgb = _shade(tri, tri_idx, valid, rot, np.asarray(albedo, dtype=np.float64))
    return depth_image, rgb.reshape(h, w, 3)


def _trace(origin, dirs, tri):
    """Moller-Trumbore over all (ray, triangle) pairs, chunked for memory."""
    n_rays = len(dirs)
    best_t = np.full(n_rays, np.inf)
    best_tri = np.full(n_rays, -1, dtype=np.int64)

    edge1 = tri[:, 1] - tri[:, 0]
    edge2 = tri[:, 2] - tri[:, 0]

    for r0 in range(0, n_rays, _RAY_CHUNK):
        d = dirs[r0 : r0 + _RAY_CHUNK]  # (R, 3)
        for f0 in range(0, len(tri), _TRI_CHUNK):
            e1 = edge1[f0 : f0 + _TRI_CHUNK]  # (F, 3)
            e2 = edge2[f0 : f0 + _TRI_CHUNK]
            v0 = tri[f0 : f0 + _TRI_CHUNK, 0]

            pvec = np.cross(d[:, None, :], e2[None, :, :])  # (R, F, 3)
            det = np.einsum("fk,rfk->rf", e1, pvec)
            inv_det = np.where(np.abs(det) > _EPS, 1.0 / np.where(det == 0, 1, det), 0.0)

            tvec = origin[None, :] - v0  # (F, 3)
            bu = np.einsum("fk,rfk->rf", tvec, pvec) * inv_det
            qvec = np.cross(tvec, e1)  # (F, 3)
            bv = np.einsum("rk,fk->rf", d, qvec) * inv_det
            t = np.einsum("fk,fk->f", e2, qvec)[None, :] * inv_det

            hit = (
                (np.abs(det) > _EPS)
                & (bu >= -1e-9)
                & (bv >= -1e-9)
                & (bu + bv <= 1 + 1e-9)
                & (t > 1e-9)
            )
            t = np.where(hit, t, np.inf)
            local_best = np.argmin(t, axis=1)
            local_t = t[np.arange(len(d)), local_best]
            better = local_t < best_t[r0 : r0 + len(d)]
            sl = slice(r0, r0 + len(d))
            best_t[sl] = np.where(better, local_t, best_t[sl])
            best_tri[sl] = np.where(better, local_best + f0, best_tri[sl])

    return best_t, best_tri


def _shade(tri, tri_idx, valid, rot, albedo):
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.where(lengths > 0, lengths, 1.0)
    light = _LIGHT_DIR / np.linalg.norm(_LIGHT_DIR)

    rgb = np.zeros((len(tri_idx), 3))
    if valid.any():
        n_cam = normals[tri_idx[valid]] @ rot.T
        # two-sided shading: meshes from the wild have mixed winding
        lambert = np.abs(n_cam @ light)
        intensity = _AMBIENT + (1.0 - _AMBIENT) * lambert
        rgb[valid] = albedo[None, :] * intensity[:, None]
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
