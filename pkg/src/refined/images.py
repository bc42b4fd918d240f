"""Per-sample image rendering and image file formats.

Rendering paints each sample's normalized feature values onto the pixels a
:class:`FeatureGridMap` assigns; vacant pixels stay 0.  Two on-disk forms
are supported: one binary PGM per sample, and a single packed float32
tensor file for downstream model training.  Both round-trip bit-exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .gridmap import FeatureGridMap

__all__ = [
    "ImageStack",
    "render",
    "write_pgm",
    "read_pgm",
    "write_tensor",
    "read_tensor",
]

TENSOR_MAGIC = "REFINED-TENSOR v1"


@dataclass
class ImageStack:
    """(n, g, g) float images in [0, 1] with one id per image."""

    pixels: np.ndarray
    sample_ids: list[str]

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 3 or self.pixels.shape[1] != self.pixels.shape[2]:
            raise DataError("pixels must be a (n, g, g) array")
        if len(self.sample_ids) != self.pixels.shape[0]:
            raise DataError(
                f"{len(self.sample_ids)} ids for {self.pixels.shape[0]} images"
            )

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    @property
    def grid_size(self) -> int:
        return self.pixels.shape[1]


def render(t, m: FeatureGridMap, smoothing=None) -> ImageStack:
    """One grayscale image per sample from a normalized table.

    The table and map must carry the same feature names (any order).
    smoothing, when given, is applied to each image as a (g, g) -> (g, g)
    callable; the default pipeline applies none.
    """
    if t.missing_mask.any():
        raise DataError("render requires a table with no missing values")
    if t.values.size and (t.values.min() < 0 or t.values.max() > 1):
        raise DataError("render requires values normalized to [0, 1]")
    if set(t.feature_names) != set(m.labels):
        missing = set(m.labels) - set(t.feature_names)
        extra = set(t.feature_names) - set(m.labels)
        raise DataError(
            f"feature names do not align with the map "
            f"(missing {sorted(missing)[:3]}, extra {sorted(extra)[:3]})"
        )
    col_of = {name: j for j, name in enumerate(t.feature_names)}
    order = np.array([col_of[name] for name in m.labels])
    g = m.grid_size
    pixels = np.zeros((t.n, g, g))
    pixels[:, m.assignment[:, 0], m.assignment[:, 1]] = t.values[:, order]
    if smoothing is not None:
        for i in range(t.n):
            pixels[i] = smoothing(pixels[i])
    return ImageStack(pixels, list(t.sample_ids))


def _quantize(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats to 0..255, halves rounding away from zero."""
    return np.clip(np.floor(values * 255.0 + 0.5), 0, 255).astype(np.uint8)


def write_pgm(stack: ImageStack, out_dir, suffixes: list[str] | None = None) -> list[Path]:
    """Write one binary (P5) PGM per image as <id><suffix>.pgm.

    Returns the written paths in stack order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if suffixes is None:
        suffixes = [""] * stack.count
    if len(suffixes) != stack.count:
        raise DataError("one suffix per image required")
    g = stack.grid_size
    paths = []
    for i in range(stack.count):
        path = out_dir / f"{stack.sample_ids[i]}{suffixes[i]}.pgm"
        data = _quantize(stack.pixels[i])
        try:
            with open(path, "wb") as fh:
                fh.write(f"P5\n{g} {g}\n255\n".encode("ascii"))
                fh.write(data.tobytes())
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    return paths


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM written by write_pgm back as (h, w) uint8."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", blob)
    if m is None:
        raise DataError(f"{path}: not a binary PGM")
    width, height, maxval = int(m.group(1)), int(m.group(2)), int(m.group(3))
    if maxval != 255:
        raise DataError(f"{path}: unsupported maxval {maxval}")
    data = blob[m.end() :]
    if len(data) != width * height:
        raise DataError(
            f"{path}: expected {width * height} pixel bytes, found {len(data)}"
        )
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width)


def write_tensor(stack: ImageStack, path) -> None:
    """Pack the stack as '<magic> <n> <g> <g>\\n' then row-major float32
    little-endian image data in stack order."""
    header = f"{TENSOR_MAGIC} {stack.count} {stack.grid_size} {stack.grid_size}\n"
    data = np.ascontiguousarray(stack.pixels, dtype="<f4")
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(data.tobytes())
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def read_tensor(path) -> np.ndarray:
    """Read a tensor file back as (n, g, g) float32."""
    try:
        with open(path, "rb") as fh:
            header = fh.readline()
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    try:
        text = header.decode("ascii").rstrip("\n")
    except UnicodeDecodeError:
        raise DataError(f"{path}: malformed tensor header") from None
    parts = text.split(" ")
    if len(parts) != 5 or " ".join(parts[:2]) != TENSOR_MAGIC:
        raise DataError(f"{path}: missing '{TENSOR_MAGIC}' header")
    try:
        n, rows, cols = int(parts[2]), int(parts[3]), int(parts[4])
    except ValueError:
        raise DataError(f"{path}: malformed tensor header") from None
    if rows != cols or n < 0 or rows < 1:
        raise DataError(f"{path}: bad tensor dimensions {n}x{rows}x{cols}")
    expected = n * rows * cols * 4
    if len(data) != expected:
        raise DataError(
            f"{path}: expected {expected} data bytes, found {len(data)}"
        )
    return np.frombuffer(data, dtype="<f4").reshape(n, rows, cols)
