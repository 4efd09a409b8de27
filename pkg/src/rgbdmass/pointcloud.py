"""Point-cloud preprocessing: unprojection, 1024-point resampling, centering,
paired flip augmentation, and exact neighborhood primitives (k-NN, FPS).

Everything here is a pure function of its inputs plus an explicit RNG, so
samples can be prepared in parallel and replayed deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cameras import Intrinsics
from .depthmaps import DepthImage
from .errors import DegenerateCloudError, DomainError, EmptyDepthError

NUM_POINTS = 1024

FLIP_MODES = ("none", "horizontal", "vertical", "both")

STAGE_AFTER_DOWNSAMPLE = "after_downsample"
STAGE_BEFORE_PADDING = "before_padding"


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3)
    centroid_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    n_real: int = -1  # points before origin padding; -1 means all

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.centroid_offset = np.asarray(self.centroid_offset, dtype=np.float64).reshape(3)
        if self.n_real < 0:
            self.n_real = len(self.points)
        if self.n_real > len(self.points):
            raise DomainError("n_real exceeds the number of points")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def real_points(self) -> np.ndarray:
        return self.points[: self.n_real]


@dataclass(frozen=True)
class NeighborIndex:
    indices: np.ndarray  # (N, k)
    k: int


def unproject(depth: DepthImage, intrinsics: Intrinsics | None = None) -> PointCloud:
    """Back-project valid pixels through the pinhole model.

    Camera looks down +z; +u maps to +x and +v to +y, which is what pairs
    image flips with coordinate negations in :func:`flip_augment`.
    """
    intr = intrinsics or depth.intrinsics
    if (intr.height, intr.width) != depth.data.shape:
        raise DomainError("intrinsics do not match the depth image size")
    vs, us = np.nonzero(depth.valid)  # row-major scan order, deterministic
    if len(vs) == 0:
        raise EmptyDepthError("depth image has no valid pixels")
    z = depth.data[vs, us]
    x = z * (us - intr.cx) / intr.fx
    y = z * (vs - intr.cy) / intr.fy
    return PointCloud(points=np.stack([x, y, z], axis=1))


def resample(pc: PointCloud, n: int = NUM_POINTS, rng: np.random.Generator | None = None) -> PointCloud:
    """Reduce to exactly `n` points by uniform subsampling, or pad with origin
    points when fewer are available."""
    if len(pc) == 0:
        raise DegenerateCloudError("cannot resample an empty cloud")
    if pc.n_real >= n:
        rng = rng if rng is not None else np.random.default_rng()
        keep = rng.choice(pc.n_real, size=n, replace=False)
        return PointCloud(points=pc.points[keep], centroid_offset=pc.centroid_offset, n_real=n)
    pad = np.zeros((n - pc.n_real, 3))
    return PointCloud(
        points=np.vstack([pc.real_points, pad]),
        centroid_offset=pc.centroid_offset,
        n_real=pc.n_real,
    )


def center(pc: PointCloud, stage: str = STAGE_AFTER_DOWNSAMPLE) -> PointCloud:
    """Subtract the mean of the real points; padding stays at the origin.

    `stage` documents where in the pipeline this runs: `before_padding`
    requires that no padding has been appended yet.
    """
    if stage not in (STAGE_AFTER_DOWNSAMPLE, STAGE_BEFORE_PADDING):
        raise DomainError(f"unknown centering stage '{stage}'")
    if pc.n_real == 0:
        raise DegenerateCloudError("cannot center a cloud with no real points")
    if stage == STAGE_BEFORE_PADDING and pc.n_real != len(pc):
        raise DomainError("before_padding centering called on a padded cloud")
    mean = pc.real_points.mean(axis=0)
    points = pc.points.copy()
    points[: pc.n_real] -= mean
    return PointCloud(
        points=points,
        centroid_offset=pc.centroid_offset + mean,
        n_real=pc.n_real,
    )


def flip_augment(
    image: np.ndarray,
    pc: PointCloud,
    mode: str | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, PointCloud]:
    """Flip the image and apply the matching point transform.

    horizontal <-> negate x, vertical <-> negate y, both <-> negate x and y.
    With `mode=None` one of the four modes is drawn equiprobably from `rng`.
    """
    if mode is None:
        if rng is None:
            raise DomainError("mode=None requires an rng to draw from")
        mode = FLIP_MODES[int(rng.integers(len(FLIP_MODES)))]
    if mode not in FLIP_MODES:
        raise DomainError(f"unknown flip mode '{mode}'")

    sign = np.ones(3)
    out = image
    if mode in ("horizontal", "both"):
        out = np.flip(out, axis=1)
        sign[0] = -1.0
    if mode in ("vertical", "both"):
        out = np.flip(out, axis=0)
        sign[1] = -1.0
    flipped = PointCloud(
        points=pc.points * sign,
        centroid_offset=pc.centroid_offset * sign,
        n_real=pc.n_real,
    )
    return np.ascontiguousarray(out), flipped


def knn(pc: PointCloud | np.ndarray, k: int) -> NeighborIndex:
    """Exact brute-force Euclidean k-NN over all points, self excluded.

    Ties are broken toward the lower point index.
    """
    points = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    n = len(points)
    if not (0 < k < n):
        raise DomainError(f"k must satisfy 0 < k < N, got k={k}, N={n}")
    diff = points[:, None, :] - points[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return NeighborIndex(indices=order[:, :k].astype(np.int64), k=k)


def farthest_point_sample(pc: PointCloud | np.ndarray, m: int, seed: int = 0) -> np.ndarray:
    """Greedy farthest-point sampling; the seed picks the starting point via
    a random permutation, after which selection is deterministic (ties go to
    the lower index)."""
    points = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    n = len(points)
    if not (1 <= m <= n):
        raise DomainError(f"m must satisfy 1 <= m <= N, got m={m}, N={n}")
    start = int(np.random.default_rng(seed).permutation(n)[0])
    chosen = np.empty(m, dtype=np.int64)
    chosen[0] = start
    min_d2 = np.einsum("ij,ij->i", points - points[start], points - points[start])
    for i in range(1, m):
        nxt = int(np.argmax(min_d2))  # argmax takes the first max: lower index
        chosen[i] = nxt
        diff = points - points[nxt]
        np.minimum(min_d2, np.einsum("ij,ij->i", diff, diff), out=min_d2)
    return chosen


def preprocess(
    pc: PointCloud, n: int = NUM_POINTS, rng: np.random.Generator | None = None
) -> PointCloud:
    """The standard training pipeline: large clouds are downsampled then
    centered; small clouds are centered first and then origin-padded."""
    if pc.n_real > n:
        return center(resample(pc, n, rng), STAGE_AFTER_DOWNSAMPLE)
    return resample(center(pc, STAGE_BEFORE_PADDING), n, rng)
