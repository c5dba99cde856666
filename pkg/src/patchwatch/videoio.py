"""Frame-sequence loading and the non-overlapping space-time cube grid.

Frames live in memory as one (n_frames, height, width) uint8 array. Cube
grids never copy pixel data: a cube is a view into the (cropped) volume,
so iterating a large grid stays cheap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

# Rec. 601 luma weights; fixed so color ingestion is reproducible bit-for-bit.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class FrameVolume:
    """An ordered stack of equally sized grayscale frames (intensities 0..255)."""

    frames: np.ndarray  # (n_frames, height, width) uint8

    def __post_init__(self):
        f = self.frames
        if f.ndim != 3 or f.shape[0] < 1:
            raise DataError(f"frame volume must be (n, h, w) with n >= 1, got shape {f.shape}")
        if f.dtype != np.uint8:
            raise DataError(f"frame volume must be uint8, got {f.dtype}")

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class Cube:
    """One w*h*t block of the volume. `origin` is (x, y, t0) in volume coordinates."""

    data: np.ndarray  # (t, h, w) view into the volume
    origin: tuple[int, int, int]

    @property
    def cube_w(self) -> int:
        return self.data.shape[2]

    @property
    def cube_h(self) -> int:
        return self.data.shape[1]

    @property
    def cube_t(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class CubeGrid:
    """Partition of a volume into non-overlapping, axis-aligned cubes.

    `volume` is the input cropped to whole cubes; any right/bottom/tail
    remainder is discarded at construction.
    """

    cube_w: int
    cube_h: int
    cube_t: int
    rows: int
    cols: int
    slabs: int
    volume: np.ndarray  # (slabs*cube_t, rows*cube_h, cols*cube_w) uint8

    def cube(self, row: int, col: int, slab: int) -> Cube:
        if not (0 <= row < self.rows and 0 <= col < self.cols and 0 <= slab < self.slabs):
            raise IndexError(f"cube index ({row}, {col}, {slab}) outside grid "
                             f"{self.rows}x{self.cols}x{self.slabs}")
        t0 = slab * self.cube_t
        y0 = row * self.cube_h
        x0 = col * self.cube_w
        data = self.volume[t0:t0 + self.cube_t, y0:y0 + self.cube_h, x0:x0 + self.cube_w]
        return Cube(data=data, origin=(x0, y0, t0))

    def slab_block(self, slab: int) -> np.ndarray:
        """All cubes of one slab as a (rows, cols, t, h, w) view (no copy)."""
        if not 0 <= slab < self.slabs:
            raise IndexError(f"slab {slab} outside grid with {self.slabs} slabs")
        t0 = slab * self.cube_t
        v = self.volume[t0:t0 + self.cube_t]
        block = v.reshape(self.cube_t, self.rows, self.cube_h, self.cols, self.cube_w)
        return block.transpose(1, 3, 0, 2, 4)

    def iter_indices(self):
        for slab in range(self.slabs):
            for row in range(self.rows):
                for col in range(self.cols):
                    yield row, col, slab


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    """Reduce an (h, w, 3) array to uint8 luma with the fixed channel weights."""
    wr, wg, wb = LUMA_WEIGHTS
    luma = wr * rgb[..., 0] + wg * rgb[..., 1] + wb * rgb[..., 2]
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def _read_pnm_tokens(raw: bytes, count: int, start: int) -> tuple[list[int], int]:
    # PNM headers: tokens separated by whitespace, '#' starts a comment to EOL.
    tokens: list[int] = []
    i = start
    while len(tokens) < count:
        if i >= len(raw):
            raise DataError("truncated PNM header")
        c = raw[i:i + 1]
        if c == b"#":
            while i < len(raw) and raw[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j:j + 1].isspace() and raw[j:j + 1] != b"#":
                j += 1
            tokens.append(int(raw[i:j]))
            i = j
    return tokens, i


def read_image(path: str | Path) -> np.ndarray:
    """Read a PGM/PPM file as uint8; grayscale (h, w) or color (h, w, 3)."""
    path = Path(path)
    raw = path.read_bytes()
    magic = raw[:2].decode("ascii", errors="replace")
    if magic not in ("P2", "P3", "P5", "P6"):
        raise DataError(f"{path}: unsupported image format {magic!r} (want PGM/PPM)")
    channels = 3 if magic in ("P3", "P6") else 1
    (width, height, maxval), pos = _read_pnm_tokens(raw, 3, 2)
    if width < 1 or height < 1:
        raise DataError(f"{path}: bad PNM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise DataError(f"{path}: maxval {maxval} unsupported (only 8-bit data)")
    n = width * height * channels
    if magic in ("P5", "P6"):
        pos += 1  # exactly one whitespace byte after maxval
        data = np.frombuffer(raw, dtype=np.uint8, count=n, offset=pos)
        if data.size != n:
            raise DataError(f"{path}: truncated pixel data")
    else:
        values = raw[pos:].split()
        if len(values) < n:
            raise DataError(f"{path}: truncated pixel data")
        data = np.array([int(v) for v in values[:n]], dtype=np.uint8)
    if channels == 3:
        return data.reshape(height, width, 3)
    return data.reshape(height, width)


def read_frame(path: str | Path) -> np.ndarray:
    """Read one frame as grayscale uint8, converting color via `to_luminance`."""
    img = read_image(path)
    if img.ndim == 3:
        img = to_luminance(img)
    return img


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write a 2-D uint8 array as binary PGM (P5, maxval 255)."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise DataError(f"PGM output must be 2-D, got shape {image.shape}")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def load_frame_sequence(directory: str | Path, pattern: str = "*.pgm") -> FrameVolume:
    """Load a directory of image frames; lexicographic filename order is time order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"frame directory not found: {directory}")
    paths = sorted(p for p in directory.glob(pattern) if p.is_file())
    if not paths:
        raise DataError(f"no frames matching {pattern!r} in {directory}")
    frames = []
    shape = None
    for p in paths:
        img = read_frame(p)
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise DataError(f"frame size mismatch: {paths[0].name} is {shape[1]}x{shape[0]} "
                            f"but {p.name} is {img.shape[1]}x{img.shape[0]}")
        frames.append(img)
    return FrameVolume(frames=np.stack(frames))


def build_grid(volume: FrameVolume, cube_w: int, cube_h: int, cube_t: int) -> CubeGrid:
    """Partition `volume` into whole cubes, cropping any remainder.

    Grid extents are the floor division of the volume dimensions by the cube
    dimensions; a warning is logged when cropping discards pixels or frames.
    """
    if min(cube_w, cube_h, cube_t) < 1:
        raise DataError(f"cube dimensions must be >= 1, got {cube_w}x{cube_h}x{cube_t}")
    if cube_w > volume.width or cube_h > volume.height or cube_t > volume.frame_count:
        raise DataError(f"cube {cube_w}x{cube_h}x{cube_t} exceeds volume "
                        f"{volume.width}x{volume.height}x{volume.frame_count}")
    cols = volume.width // cube_w
    rows = volume.height // cube_h
    slabs = volume.frame_count // cube_t
    crop_x = volume.width - cols * cube_w
    crop_y = volume.height - rows * cube_h
    crop_t = volume.frame_count - slabs * cube_t
    if crop_x or crop_y or crop_t:
        logger.warning("grid crops remainder: %d px right, %d px bottom, %d tail frames",
                       crop_x, crop_y, crop_t)
    cropped = volume.frames[:slabs * cube_t, :rows * cube_h, :cols * cube_w]
    return CubeGrid(cube_w=cube_w, cube_h=cube_h, cube_t=cube_t,
                    rows=rows, cols=cols, slabs=slabs, volume=cropped)


def subdivide(cube: Cube, sub_w: int, sub_h: int) -> list[Cube]:
    """Split a cube into (w/sub_w)*(h/sub_h) sub-cubes in row-major spatial order.

    All sub-cubes share the parent's temporal extent. Dimensions must divide
    evenly.
    """
    if cube.cube_w % sub_w or cube.cube_h % sub_h:
        raise DataError(f"cube {cube.cube_w}x{cube.cube_h} not divisible by "
                        f"sub-cube {sub_w}x{sub_h}")
    x0, y0, t0 = cube.origin
    subs = []
    for r in range(cube.cube_h // sub_h):
        for c in range(cube.cube_w // sub_w):
            data = cube.data[:, r * sub_h:(r + 1) * sub_h, c * sub_w:(c + 1) * sub_w]
            subs.append(Cube(data=data, origin=(x0 + c * sub_w, y0 + r * sub_h, t0)))
    return subs


def rasterize(cube: Cube) -> np.ndarray:
    """Flatten a cube to a float64 vector with index = t*(w*h) + row*w + col.

    This ordering is part of the on-disk model format; do not change it.
    """
    return np.ascontiguousarray(cube.data, dtype=np.float64).reshape(-1)


def rasterize_block(block: np.ndarray) -> np.ndarray:
    """Rasterize a (..., t, h, w) stack of cubes into (..., t*h*w) float64.

    Matches `rasterize` element-for-element on every cube in the stack.
    """
    block = np.ascontiguousarray(block, dtype=np.float64)
    return block.reshape(block.shape[:-3] + (-1,))
