"""Image containers, color conversion, dihedral transforms and PNG I/O.

All math in the package runs on float64 intensities in [0, 1]. Quantization
to 8 bits happens only when an image is written to disk.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

PathLike = Union[str, os.PathLike]

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
MAX_PIXELS = 1 << 28


class RasterError(Exception):
    """Base class for image I/O failures."""


class MissingFileError(RasterError, FileNotFoundError):
    pass


class ImageFormatError(RasterError):
    pass


class DimensionOverflowError(RasterError):
    pass


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Grayscale (H, W) or RGB (H, W, 3) image with float64 data in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) data, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def planes(self) -> list:
        """Per-channel 2-D views."""
        if self.channels == 1:
            return [self.data]
        return [self.data[:, :, c] for c in range(3)]

    def to_uint8(self) -> np.ndarray:
        return quantize(self.data)

    @classmethod
    def from_uint8(cls, arr: np.ndarray) -> "RasterImage":
        return cls(np.asarray(arr, dtype=np.float64) / 255.0)

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean (H, W) labels; True marks foreground ink."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=bool)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2-D array, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def count(self) -> int:
        return int(self.data.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True)
class Transform:
    """Element of the dihedral group D4: optional horizontal flip, then CCW rotation."""

    rotation: int = 0
    hflip: bool = False

    def __post_init__(self):
        if self.rotation not in (0, 90, 180, 270):
            raise ValueError(f"rotation must be one of 0, 90, 180, 270; got {self.rotation}")
        object.__setattr__(self, "hflip", bool(self.hflip))

    @property
    def index(self) -> int:
        """Position in ALL_TRANSFORMS (0..7)."""
        return self.rotation // 90 + (4 if self.hflip else 0)

    def inverse(self) -> "Transform":
        # a flip-then-rotate element is an involution
        if self.hflip:
            return self
        return Transform((360 - self.rotation) % 360, False)

    def compose(self, other: "Transform") -> "Transform":
        """Transform equivalent to applying ``other`` first, then ``self``."""
        # F R_a = R_{-a} F
        if self.hflip:
            rot = (self.rotation - other.rotation) % 360
        else:
            rot = (self.rotation + other.rotation) % 360
        return Transform(rot, self.hflip != other.hflip)


IDENTITY = Transform()
ALL_TRANSFORMS = tuple(Transform(r, f) for f in (False, True) for r in (0, 90, 180, 270))


def quantize(data: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to uint8, rounding half away from zero."""
    scaled = np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def to_grayscale(img: RasterImage) -> RasterImage:
    if img.channels == 1:
        return img
    luma = img.data @ LUMA_WEIGHTS
    return RasterImage(np.clip(luma, 0.0, 1.0))


def transform_array(arr: np.ndarray, t: Transform) -> np.ndarray:
    """Apply ``t`` to the two leading (row, column) axes of ``arr``."""
    out = arr[:, ::-1] if t.hflip else arr
    out = np.rot90(out, k=t.rotation // 90, axes=(0, 1))
    return np.ascontiguousarray(out)


def apply_transform(img, t: Transform):
    """Transform a RasterImage or BinaryMask; width and height swap for 90/270."""
    if isinstance(img, BinaryMask):
        return BinaryMask(transform_array(img.data, t))
    return RasterImage(transform_array(img.data, t))


def _open(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: unsupported format {im.format!r}; only PNG is accepted")
            w, h = im.size
            if w * h > MAX_PIXELS:
                raise DimensionOverflowError(f"{path}: {w}x{h} exceeds {MAX_PIXELS} pixels")
            if im.mode in ("L", "RGB"):
                arr = np.asarray(im)
            elif im.mode in ("1", "P", "LA", "RGBA"):
                im = im.convert("RGB" if im.mode in ("P", "RGBA") else "L")
                arr = np.asarray(im)
            else:
                raise ImageFormatError(f"{path}: unsupported PNG mode {im.mode!r}; 8-bit L or RGB expected")
    except Image.DecompressionBombError as exc:
        raise DimensionOverflowError(f"{path}: {exc}") from exc
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        if isinstance(exc, RasterError):
            raise
        raise ImageFormatError(f"{path}: cannot decode image ({exc})") from exc
    return arr


def _atomic_png(path: PathLike, arr: np.ndarray) -> None:
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"parent directory does not exist: {path.parent}")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            Image.fromarray(arr).save(fh, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_image(path: PathLike) -> RasterImage:
    return RasterImage.from_uint8(_open(path))


def save_image(path: PathLike, img: RasterImage) -> None:
    """Write ``img`` as an 8-bit PNG; the file appears atomically."""
    _atomic_png(path, img.to_uint8())


def load_mask(path: PathLike) -> BinaryMask:
    """Read a ground-truth PNG: dark pixels (< 128) are ink."""
    arr = _open(path)
    if arr.ndim == 3:
        arr = quantize(arr @ LUMA_WEIGHTS / 255.0)
    return BinaryMask(arr < 128)


def save_mask(path: PathLike, mask: BinaryMask) -> None:
    """Write ink as 0 and background as 255."""
    _atomic_png(path, np.where(mask.data, 0, 255).astype(np.uint8))
