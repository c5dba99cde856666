"""Local view descriptors: neighborhood similarity plus intra-cube motion.

Each cube is described by 9 + (t-1) SSIM values:

* d[0..7] - similarity to the 8 spatially adjacent cubes in the same slab,
  clockwise from the top-left neighbor. Out-of-range neighbors are replaced
  by the nearest in-bounds cube (replicate padding), keeping descriptor
  length constant at the grid border.
* d[8]    - similarity to the co-located cube in the previous slab. Slab 0
  has no predecessor; it compares against itself (d[8] = 1) and the
  descriptor carries a `temporal_boundary` flag so training can treat it
  specially.
* D[0..t-2] - SSIM of each frame in the cube against its successor frame.

`slab_descriptors` is the vectorized path used by the detector; it is
verified against the per-cube functions in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ssim import DEFAULT_PARAMS, SsimParams, ssim_cube, ssim_frame, ssim_frame_batch
from .videoio import CubeGrid, Cube

# (drow, dcol) of the 8 spatial neighbors, clockwise starting top-left.
NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True)
class LocalDescriptor:
    values: np.ndarray  # (9 + t - 1,) entries in [-1, 1]
    temporal_boundary: bool  # True for slab 0 (d[8] comes from self-comparison)

    @property
    def neighbor_part(self) -> np.ndarray:
        return self.values[:9]

    @property
    def intra_part(self) -> np.ndarray:
        return self.values[9:]


def descriptor_length(cube_t: int) -> int:
    return 9 + (cube_t - 1)


def neighbor_similarities(grid: CubeGrid, idx: tuple[int, int, int],
                          params: SsimParams = DEFAULT_PARAMS) -> np.ndarray:
    """The 9 neighbor SSIMs (8 spatial + 1 temporal predecessor) of one cube."""
    row, col, slab = idx
    center = grid.cube(row, col, slab)
    out = np.empty(9)
    for k, (dr, dc) in enumerate(NEIGHBOR_OFFSETS):
        r = min(max(row + dr, 0), grid.rows - 1)
        c = min(max(col + dc, 0), grid.cols - 1)
        out[k] = ssim_cube(center, grid.cube(r, c, slab), params)
    prev_slab = max(slab - 1, 0)
    out[8] = ssim_cube(center, grid.cube(row, col, prev_slab), params)
    return out


def intra_similarities(cube: Cube, params: SsimParams = DEFAULT_PARAMS) -> np.ndarray:
    """SSIM of each frame with its successor: t-1 values in time order."""
    data = np.asarray(getattr(cube, "data", cube), dtype=np.float64)
    t = data.shape[0]
    if t < 2:
        raise DataError(f"intra similarities need at least 2 frames, cube has {t}")
    out = np.empty(t - 1)
    for k in range(t - 1):
        out[k] = ssim_frame(data[k], data[k + 1], params)
    return out


def local_descriptor(grid: CubeGrid, idx: tuple[int, int, int],
                     params: SsimParams = DEFAULT_PARAMS) -> LocalDescriptor:
    """Full local descriptor of one cube: [d0..d8, D0..Dt-2]."""
    row, col, slab = idx
    values = np.concatenate([
        neighbor_similarities(grid, idx, params),
        intra_similarities(grid.cube(row, col, slab), params),
    ])
    return LocalDescriptor(values=values, temporal_boundary=(slab == 0))


def slab_descriptors(grid: CubeGrid, slab: int,
                     params: SsimParams = DEFAULT_PARAMS) -> np.ndarray:
    """Descriptors of every cube in one slab as a (rows, cols, 9+t-1) array.

    Vectorized equivalent of calling `local_descriptor` per cube.
    """
    a = np.asarray(grid.slab_block(slab), dtype=np.float64)  # (rows, cols, t, h, w)
    t = grid.cube_t
    out = np.empty((grid.rows, grid.cols, descriptor_length(t)))
    row_idx = np.arange(grid.rows)
    col_idx = np.arange(grid.cols)
    for k, (dr, dc) in enumerate(NEIGHBOR_OFFSETS):
        r = np.clip(row_idx + dr, 0, grid.rows - 1)
        c = np.clip(col_idx + dc, 0, grid.cols - 1)
        neighbor = a[r][:, c]
        out[:, :, k] = ssim_frame_batch(a, neighbor, params).mean(axis=-1)
    prev = np.asarray(grid.slab_block(max(slab - 1, 0)), dtype=np.float64)
    out[:, :, 8] = ssim_frame_batch(a, prev, params).mean(axis=-1)
    out[:, :, 9:] = ssim_frame_batch(a[:, :, :-1], a[:, :, 1:], params)
    return out
