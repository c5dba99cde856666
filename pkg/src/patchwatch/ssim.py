"""Structural similarity between 2-D patches and space-time cubes.

The default ("global") mode computes a single SSIM value from whole-patch
statistics: patches here are 10 to 40 pixels wide, too small for the
sliding-window mean-SSIM used on full images to pay off. A "windowed" mode
is kept behind `SsimParams.mode` so the two can be compared.

All statistics use 1/N normalization. Values lie in [-1, 1]; identical
patches score exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

MODES = ("global", "windowed")


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    L: float = 255.0  # dynamic range of the intensity data
    mode: str = "global"
    win_size: int = 8  # only used in windowed mode

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0 or self.L <= 0:
            raise ConfigError(f"SSIM constants must be positive: k1={self.k1} k2={self.k2} L={self.L}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown SSIM mode {self.mode!r}, expected one of {MODES}")

    @property
    def c1(self) -> float:
        return (self.k1 * self.L) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.L) ** 2


DEFAULT_PARAMS = SsimParams()


def _as_float_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(getattr(a, "data", a), dtype=np.float64)
    b = np.asarray(getattr(b, "data", b), dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"SSIM inputs must have equal shapes, got {a.shape} vs {b.shape}")
    return a, b


def _ssim_from_stats(mu_a, mu_b, var_a, var_b, cov, params: SsimParams):
    c1, c2 = params.c1, params.c2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim_frame_batch(a: np.ndarray, b: np.ndarray, params: SsimParams = DEFAULT_PARAMS) -> np.ndarray:
    """SSIM over the last two axes of equally shaped (..., h, w) stacks."""
    a, b = _as_float_pair(a, b)
    if params.mode == "windowed":
        return _windowed_batch(a, b, params)
    ax = (-2, -1)
    mu_a = a.mean(axis=ax)
    mu_b = b.mean(axis=ax)
    var_a = a.var(axis=ax)
    var_b = b.var(axis=ax)
    cov = (a * b).mean(axis=ax) - mu_a * mu_b
    return _ssim_from_stats(mu_a, mu_b, var_a, var_b, cov, params)


def _windowed_batch(a: np.ndarray, b: np.ndarray, params: SsimParams) -> np.ndarray:
    from scipy.ndimage import uniform_filter

    win = min(params.win_size, a.shape[-1], a.shape[-2])
    size = (1,) * (a.ndim - 2) + (win, win)
    mu_a = uniform_filter(a, size=size, mode="reflect")
    mu_b = uniform_filter(b, size=size, mode="reflect")
    var_a = uniform_filter(a * a, size=size, mode="reflect") - mu_a ** 2
    var_b = uniform_filter(b * b, size=size, mode="reflect") - mu_b ** 2
    cov = uniform_filter(a * b, size=size, mode="reflect") - mu_a * mu_b
    ssim_map = _ssim_from_stats(mu_a, mu_b, var_a, var_b, cov, params)
    return ssim_map.mean(axis=(-2, -1))


def ssim_frame(a, b, params: SsimParams = DEFAULT_PARAMS) -> float:
    """Structural similarity of two equally sized 2-D patches, in [-1, 1]."""
    a, b = _as_float_pair(a, b)
    if a.ndim != 2:
        raise DataError(f"ssim_frame expects 2-D patches, got shape {a.shape}")
    return float(ssim_frame_batch(a, b, params))


def ssim_cube(a, b, params: SsimParams = DEFAULT_PARAMS) -> float:
    """Similarity of two cubes: mean of per-frame SSIM over the t frame pairs."""
    a, b = _as_float_pair(a, b)
    if a.ndim != 3:
        raise DataError(f"ssim_cube expects (t, h, w) cubes, got shape {a.shape}")
    return float(ssim_frame_batch(a, b, params).mean())
