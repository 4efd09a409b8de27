"""Mass and depth evaluation metrics, Chamfer distance, and the combined
training objective. All functions are pure numpy; the torch training losses
live in `rgbdmass.nets.losses` and are tested against these.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, EmptyMaskError, EmptySetError
from .pointcloud import PointCloud


def _positive(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def alde(y_true, y_pred):
    """Absolute log difference |ln y - ln y_hat|: symmetric, scale-invariant."""
    y = _positive("y_true", y_true)
    p = _positive("y_pred", y_pred)
    out = np.abs(np.log(y) - np.log(p))
    return float(out) if out.ndim == 0 else out


def ape(y_true, y_pred):
    """Relative error |(y - y_hat) / y|; not symmetric in its arguments."""
    y = _positive("y_true", y_true)
    p = np.asarray(y_pred, dtype=np.float64)
    out = np.abs((y - p) / y)
    return float(out) if out.ndim == 0 else out


def mnre(y_true, y_pred):
    """min(y_hat/y, y/y_hat) in (0, 1]; 1 only for exact predictions."""
    y = _positive("y_true", y_true)
    p = _positive("y_pred", y_pred)
    out = np.minimum(np.abs(p / y), np.abs(y / p))
    return float(out) if out.ndim == 0 else out


def q_fraction(pairs) -> float:
    """Fraction of predictions within a factor of 2 (MnRE >= 0.5, inclusive).

    Higher is better. The complementary fraction (off by a factor of 2 or
    more) is available as :func:`q_off_fraction`.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptySetError("q_fraction over an empty set")
    values = np.array([mnre(y, p) for y, p in pairs])
    return float(np.mean(values >= 0.5))


def q_off_fraction(pairs) -> float:
    return 1.0 - q_fraction(pairs)


def chamfer(a: PointCloud | np.ndarray, b: PointCloud | np.ndarray) -> float:
    """Symmetric mean of squared nearest-neighbor distances.

    Padding points are excluded via each cloud's `n_real`.
    """
    pa = a.real_points if isinstance(a, PointCloud) else np.asarray(a, dtype=np.float64)
    pb = b.real_points if isinstance(b, PointCloud) else np.asarray(b, dtype=np.float64)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptySetError("chamfer distance over an empty cloud")
    diff = pa[:, None, :] - pb[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


def total_loss(alde_term: float, cd_term: float | None, lam: float = 1.0) -> float:
    """Combined objective: mass term plus lam * reconstruction term.

    `cd_term=None` marks samples without reconstruction ground truth; they
    contribute the mass term only.
    """
    if lam < 0:
        raise DomainError(f"lam must be non-negative, got {lam}")
    if alde_term < 0 or (cd_term is not None and cd_term < 0):
        raise DomainError("loss terms must be non-negative")
    if cd_term is None:
        return float(alde_term)
    return float(alde_term + lam * cd_term)


@dataclass(frozen=True)
class MassMetricsReport:
    alde: float
    ape: float
    mnre: float
    q: float
    n: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def mass_metrics_report(y_true, y_pred) -> MassMetricsReport:
    y = np.asarray(y_true, dtype=np.float64).ravel()
    p = np.asarray(y_pred, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise DomainError("prediction/truth length mismatch")
    if len(y) == 0:
        raise EmptySetError("mass metrics over an empty set")
    return MassMetricsReport(
        alde=float(np.mean(alde(y, p))),
        ape=float(np.mean(ape(y, p))),
        mnre=float(np.mean(mnre(y, p))),
        q=q_fraction(zip(y, p)),
        n=len(y),
    )


@dataclass(frozen=True)
class DepthMetricsReport:
    mape: float
    mspe: float
    rmse: float
    rmse_log: float
    log10: float
    silog: float
    n: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def depth_metric_report(y_true, y_pred, mask=None) -> DepthMetricsReport:
    """All six depth metrics over the masked pixels.

    rmse_log uses log(1 + d); log10 and silog require positive depths.
    """
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if y.shape != p.shape:
        raise DomainError("depth arrays must share a shape")
    mask = np.ones(y.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != y.shape:
        raise DomainError("mask shape must match the depth arrays")
    y, p = y[mask], p[mask]
    n = len(y)
    if n == 0:
        raise EmptyMaskError("depth metrics over an empty mask")
    if np.any(y <= 0) or np.any(p <= 0):
        raise DomainError("log-based depth metrics need positive depths")

    rel = (y - p) / y
    log_diff = np.log(y) - np.log(p)
    silog = float(np.mean(log_diff**2) - np.mean(log_diff) ** 2)
    return DepthMetricsReport(
        mape=float(np.mean(np.abs(rel))),
        mspe=float(np.mean(rel**2)),
        rmse=float(np.sqrt(np.mean((y - p) ** 2))),
        rmse_log=float(np.sqrt(np.mean((np.log1p(y) - np.log1p(p)) ** 2))),
        log10=float(np.mean(np.abs(np.log10(y) - np.log10(p)))),
        silog=max(silog, 0.0),  # variance form; clip float noise at zero
        n=n,
    )
