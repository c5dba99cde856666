"""Gaussian normality models, Mahalanobis scoring, and two-view fusion.

A view's training descriptors are fitted with a sample mean and covariance;
the anomaly score of a test descriptor is the squared Mahalanobis distance
(x - mu)^T Sigma^-1 (x - mu). No density, determinant, or normalizing
constant is ever computed. The decision threshold is a percentile of the
training scores, and ROC sweeps scale both calibrated thresholds with a
single multiplier alpha.

Covariance regularization is relative: Sigma + eps*(trace/dim)*I, falling
back to eps*I when the covariance is all zero, so rank-deficient training
data still yields finite scores.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._container import load_container, save_container
from .errors import ConfigError, DataError, NumericError


class Label(enum.Enum):
    NORMAL = "normal"
    ANOMALY = "anomaly"


class FusionMode(str, enum.Enum):
    PROSE_AND = "prose_and"    # anomaly only if both views flag it
    EQ4_OR = "eq4_or"          # anomaly if at least one view flags it
    GLOBAL_ONLY = "global_only"


@dataclass(frozen=True)
class PatchLabel:
    label: Label
    score: float  # raw Mahalanobis value f(x), or the fused ratio after fuse()
    ratio: float  # f(x) / calibrated threshold; the alpha-sweep coordinate


@dataclass(frozen=True)
class GaussianModel:
    mu: np.ndarray
    sigma: np.ndarray
    sigma_inv: np.ndarray  # inverse of the regularized covariance
    epsilon: float         # relative regularization coefficient
    threshold: float | None
    layout: str            # descriptor layout tag, e.g. "global:1000" / "local:13"

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def fit_gaussian(descriptors, epsilon: float = 1e-6, layout: str = "") -> GaussianModel:
    """Sample mean/covariance fit (1/(n-1)); threshold left uncalibrated."""
    X = np.asarray(descriptors, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"descriptors must be a (n, dim) array, got shape {X.shape}")
    n, dim = X.shape
    if n < dim + 1:
        raise DataError(f"need at least dim+1 = {dim + 1} descriptors for a "
                        f"rank-{dim} covariance, got {n}")
    if not np.isfinite(X).all():
        raise NumericError("descriptors contain non-finite values")
    mu = X.mean(axis=0)
    centered = X - mu
    sigma = (centered.T @ centered) / (n - 1)
    reg = epsilon * (np.trace(sigma) / dim) if np.trace(sigma) > 0 else epsilon
    sigma_inv = np.linalg.inv(sigma + reg * np.eye(dim))
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)  # keep the quadratic form symmetric
    return GaussianModel(mu=mu, sigma=sigma, sigma_inv=sigma_inv,
                         epsilon=epsilon, threshold=None, layout=layout)


def mahalanobis(model: GaussianModel, x: np.ndarray) -> float:
    """Squared Mahalanobis distance of one descriptor (no square root)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DataError(f"descriptor shape {x.shape} does not match model dim {model.dim}")
    d = x - model.mu
    return float(d @ model.sigma_inv @ d)


def mahalanobis_batch(model: GaussianModel, X: np.ndarray) -> np.ndarray:
    """Row-wise squared Mahalanobis distances of a (n, dim) array."""
    D = np.asarray(X, dtype=np.float64) - model.mu
    return np.einsum("ij,jk,ik->i", D, model.sigma_inv, D)


def calibrate_threshold(model: GaussianModel, train_descriptors,
                        percentile: float = 99.0) -> GaussianModel:
    """Set the threshold to a percentile of the training Mahalanobis scores.

    Uses linear interpolation between order statistics. Returns a calibrated
    copy; models are immutable after calibration.
    """
    if not 0.0 < percentile <= 100.0:
        raise ConfigError(f"percentile must be in (0, 100], got {percentile}")
    X = np.asarray(train_descriptors, dtype=np.float64)
    if X.size == 0:
        raise DataError("cannot calibrate threshold on an empty training set")
    scores = mahalanobis_batch(model, X)
    return replace(model, threshold=float(np.percentile(scores, percentile)))


def classify_patch(model: GaussianModel, x: np.ndarray, alpha: float = 1.0) -> PatchLabel:
    """Label one descriptor: anomaly iff f(x) > alpha * threshold.

    A score exactly equal to the (scaled) threshold is Normal.
    """
    if model.threshold is None:
        raise ConfigError("model is not calibrated; run calibrate_threshold first")
    score = mahalanobis(model, x)
    ratio = score / model.threshold
    label = Label.ANOMALY if score > alpha * model.threshold else Label.NORMAL
    return PatchLabel(label=label, score=score, ratio=ratio)


def fuse(c1: PatchLabel, c2: PatchLabel, mode: FusionMode = FusionMode.PROSE_AND) -> PatchLabel:
    """Combine the two views' labels into one decision.

    PROSE_AND flags a patch only when both views flag it; EQ4_OR flags when
    either does. The fused score/ratio is the min (resp. max) of the two
    score ratios, which makes per-alpha relabeling exact during ROC sweeps.
    """
    if mode == FusionMode.PROSE_AND:
        both = c1.label is Label.ANOMALY and c2.label is Label.ANOMALY
        ratio = min(c1.ratio, c2.ratio)
        label = Label.ANOMALY if both else Label.NORMAL
    elif mode == FusionMode.EQ4_OR:
        either = c1.label is Label.ANOMALY or c2.label is Label.ANOMALY
        ratio = max(c1.ratio, c2.ratio)
        label = Label.ANOMALY if either else Label.NORMAL
    else:
        raise ConfigError(f"fuse() handles two-view modes only, got {mode}")
    return PatchLabel(label=label, score=ratio, ratio=ratio)


def save_classifier(model: GaussianModel, path: str | Path, fusion: FusionMode | None = None) -> None:
    meta = {
        "layout": model.layout,
        "dim": model.dim,
        "epsilon": model.epsilon,
        "threshold": model.threshold,
        "fusion": fusion.value if fusion is not None else None,
    }
    save_container(path, "gaussian", meta,
                   {"mu": model.mu, "sigma": model.sigma, "sigma_inv": model.sigma_inv})


def load_classifier(path: str | Path) -> GaussianModel:
    meta, arrays = load_container(path, "gaussian")
    return GaussianModel(mu=arrays["mu"], sigma=arrays["sigma"], sigma_inv=arrays["sigma_inv"],
                         epsilon=float(meta["epsilon"]),
                         threshold=None if meta["threshold"] is None else float(meta["threshold"]),
                         layout=meta["layout"])
