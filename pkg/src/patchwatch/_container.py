"""Deterministic binary container for model files.

Layout: one magic line (`#patchwatch <kind> v1`), one JSON metadata line
with sorted keys, then the raw bytes of each array in manifest order,
little-endian. No timestamps or compression, so identical content always
produces byte-identical files (np.savez does not guarantee this).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError

_MAGIC = "#patchwatch {kind} v1\n"


def save_container(path: str | Path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        manifest.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.astype("<f8", copy=False).tobytes())
    header = {"meta": meta, "arrays": manifest}
    with open(path, "wb") as fh:
        fh.write(_MAGIC.format(kind=kind).encode("ascii"))
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_container(path: str | Path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        expected = _MAGIC.format(kind=kind).rstrip("\n")
        if magic != expected:
            raise DataError(f"{path}: expected header {expected!r}, found {magic!r}")
        try:
            header = json.loads(fh.readline().decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: corrupt container header ({exc})") from exc
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise DataError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return header["meta"], arrays
