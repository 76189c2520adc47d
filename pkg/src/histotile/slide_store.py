"""Flat raster loading and a tiled image pyramid with random region access.

A slide enters the pipeline as a plain 8-bit RGB raster (PNG or binary PPM).
``build_pyramid`` persists it as a directory of fixed-size PNG tiles per
pyramid level plus a ``manifest.json``; :class:`TileStore` serves arbitrary
rectangles from any level without the caller knowing tile boundaries.

Store layout::

    <root>/manifest.json
    <root>/L<level>/<col>_<row>.png      col = x // tile_size

Level 0 is the input raster. Each next level halves both dimensions
(rounding up); pixels are the mean of their 2x2 parent block, rounded half
away from zero. The chain stops once max(width, height) <= tile_size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

WHITE = 255


class RasterFormatError(ValueError):
    """Unsupported or corrupt raster payload."""


@dataclass(frozen=True)
class SlideMeta:
    """Identity and level-0 geometry of one slide (one patient per slide)."""

    slide_id: str
    patient_id: str
    mpp_x: float
    mpp_y: float
    width: int
    height: int

    def __post_init__(self):
        if self.mpp_x <= 0 or self.mpp_y <= 0:
            raise ValueError("microns-per-pixel must be positive")


@dataclass(frozen=True)
class LevelInfo:
    level: int
    width: int
    height: int


@dataclass
class TileStoreManifest:
    slide_meta: SlideMeta
    tile_size: int
    levels: list[LevelInfo] = field(default_factory=list)
    storage_path: str = ""


def _read_ppm_p6(data: bytes, path: Path) -> np.ndarray:
    # Header: "P6" <width> <height> <maxval>, tokens separated by whitespace
    # or comment lines, then a single whitespace byte before the pixel data.
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterFormatError(f"{path}: truncated PPM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError:
            raise RasterFormatError(f"{path}: non-numeric PPM header field") from None
    pos += 1  # single whitespace after maxval
    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise RasterFormatError(f"{path}: bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise RasterFormatError(f"{path}: only 8-bit PPM supported (maxval {maxval})")
    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise RasterFormatError(
            f"{path}: truncated PPM payload ({len(payload)} of {need} bytes)"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def load_raster(path: str | Path) -> np.ndarray:
    """Decode a PNG or binary PPM (P6) file to an (H, W, 3) uint8 array.

    Grayscale inputs are replicated to three channels; an alpha channel, if
    present, is dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"raster file not found: {path}")
    data = path.read_bytes()
    if data[:2] == b"P6":
        return _read_ppm_p6(data, path)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        try:
            with Image.open(path) as img:
                img.load()
                return np.asarray(img.convert("RGB"), dtype=np.uint8)
        except FileNotFoundError:
            raise
        except Exception as exc:
            raise RasterFormatError(f"{path}: corrupt PNG ({exc})") from exc
    raise RasterFormatError(f"{path}: not a PNG or binary PPM (P6) file")


def downsample_half(img: np.ndarray) -> np.ndarray:
    """Halve both dimensions: 2x2 block mean, rounded half away from zero.

    Odd edges average the 1 or 2 parent pixels actually present, so output
    dims are ceil(input / 2) with no padding bias.
    """
    h, w = img.shape[:2]
    h2, w2 = (h + 1) // 2, (w + 1) // 2
    acc = np.zeros((2 * h2, 2 * w2, img.shape[2]), dtype=np.uint32)
    acc[:h, :w] = img
    cnt = np.zeros((2 * h2, 2 * w2), dtype=np.uint32)
    cnt[:h, :w] = 1
    s = acc.reshape(h2, 2, w2, 2, -1).sum(axis=(1, 3))
    c = cnt.reshape(h2, 2, w2, 2).sum(axis=(1, 3))[..., None]
    # round(s/c) half away from zero, exact in integers: (2s + c) // 2c
    return ((2 * s + c) // (2 * c)).astype(np.uint8)


def _iter_tiles(width: int, height: int, tile_size: int):
    cols = math.ceil(width / tile_size)
    rows = math.ceil(height / tile_size)
    for row in range(rows):
        for col in range(cols):
            yield col, row


class TileStore:
    """Read access to a persisted tile pyramid."""

    def __init__(self, manifest: TileStoreManifest):
        self.manifest = manifest
        self.root = Path(manifest.storage_path)

    @classmethod
    def open(cls, root: str | Path) -> "TileStore":
        root = Path(root)
        doc = json.loads((root / "manifest.json").read_text())
        levels = [LevelInfo(**lv) for lv in doc["levels"]]
        meta = SlideMeta(
            slide_id=doc["slide_id"],
            patient_id=doc["patient_id"],
            mpp_x=doc["mpp_x"],
            mpp_y=doc["mpp_y"],
            width=levels[0].width,
            height=levels[0].height,
        )
        return cls(TileStoreManifest(meta, doc["tile_size"], levels, str(root)))

    @property
    def slide_meta(self) -> SlideMeta:
        return self.manifest.slide_meta

    @property
    def tile_size(self) -> int:
        return self.manifest.tile_size

    def level_dims(self, level: int) -> tuple[int, int]:
        if not 0 <= level < len(self.manifest.levels):
            raise ValueError(
                f"level {level} out of range (store has {len(self.manifest.levels)} levels)"
            )
        info = self.manifest.levels[level]
        return info.width, info.height

    def _tile_path(self, level: int, col: int, row: int) -> Path:
        return self.root / f"L{level}" / f"{col}_{row}.png"

    def read_region(self, level: int, x: int, y: int, w: int, h: int) -> np.ndarray:
        """Read a (h, w, 3) uint8 region of one pyramid level.

        Coordinates are level-local pixels; the region must lie fully inside
        the level extent. Results do not depend on tile boundaries.
        """
        lw, lh = self.level_dims(level)
        if w < 1 or h < 1:
            raise ValueError("region width and height must be >= 1")
        if x < 0 or y < 0 or x + w > lw or y + h > lh:
            raise ValueError(
                f"region ({x},{y},{w},{h}) out of bounds for level {level} ({lw}x{lh})"
            )
        ts = self.tile_size
        out = np.empty((h, w, 3), dtype=np.uint8)
        for row in range(y // ts, (y + h - 1) // ts + 1):
            for col in range(x // ts, (x + w - 1) // ts + 1):
                tpath = self._tile_path(level, col, row)
                if not tpath.is_file():
                    raise FileNotFoundError(f"missing tile file: {tpath}")
                tile = np.asarray(Image.open(tpath).convert("RGB"), dtype=np.uint8)
                tx0, ty0 = col * ts, row * ts
                sx0, sy0 = max(x, tx0), max(y, ty0)
                sx1, sy1 = min(x + w, tx0 + ts), min(y + h, ty0 + ts)
                out[sy0 - y : sy1 - y, sx0 - x : sx1 - x] = tile[
                    sy0 - ty0 : sy1 - ty0, sx0 - tx0 : sx1 - tx0
                ]
        return out


def build_pyramid(
    img: np.ndarray, meta: SlideMeta, root: str | Path, tile_size: int = 256
) -> TileStore:
    """Persist a raster as a tile pyramid under ``root`` and return the store.

    Edge tiles are padded to ``tile_size`` with white; padding is stripped on
    read so a full-extent level-0 read reproduces the input exactly.
    """
    if tile_size < 16:
        raise ValueError(f"tile_size must be >= 16, got {tile_size}")
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 raster")
    if (img.shape[1], img.shape[0]) != (meta.width, meta.height):
        raise ValueError("raster dimensions disagree with slide metadata")

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    levels: list[LevelInfo] = []
    current = img
    level = 0
    while True:
        h, w = current.shape[:2]
        levels.append(LevelInfo(level, w, h))
        ldir = root / f"L{level}"
        ldir.mkdir(exist_ok=True)
        for col, row in _iter_tiles(w, h, tile_size):
            x0, y0 = col * tile_size, row * tile_size
            crop = current[y0 : y0 + tile_size, x0 : x0 + tile_size]
            if crop.shape[:2] != (tile_size, tile_size):
                padded = np.full((tile_size, tile_size, 3), WHITE, dtype=np.uint8)
                padded[: crop.shape[0], : crop.shape[1]] = crop
                crop = padded
            Image.fromarray(crop).save(ldir / f"{col}_{row}.png")
        if max(w, h) <= tile_size:
            break
        current = downsample_half(current)
        level += 1

    doc = {
        "slide_id": meta.slide_id,
        "patient_id": meta.patient_id,
        "mpp_x": meta.mpp_x,
        "mpp_y": meta.mpp_y,
        "tile_size": tile_size,
        "levels": [{"level": lv.level, "width": lv.width, "height": lv.height} for lv in levels],
    }
    (root / "manifest.json").write_text(json.dumps(doc, indent=1) + "\n")
    return TileStore(TileStoreManifest(meta, tile_size, levels, str(root)))
