"""Fixed-size patch cropping and dihedral augmentation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .raster import ALL_TRANSFORMS, BinaryMask, RasterImage, apply_transform


class PatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PatchSpec:
    size: int = 480
    stride: int = 480

    def __post_init__(self):
        if self.size < 1 or self.stride < 1:
            raise ValueError(f"size and stride must be >= 1, got size={self.size} stride={self.stride}")


def patch_offsets(height: int, width: int, spec: PatchSpec) -> list[tuple[int, int]]:
    """Top-left ``(x, y)`` offsets in row-major order; leftover margins are dropped."""
    if height < spec.size or width < spec.size:
        return []
    nx = (width - spec.size) // spec.stride + 1
    ny = (height - spec.size) // spec.stride + 1
    return [(i * spec.stride, j * spec.stride) for j in range(ny) for i in range(nx)]


def _crop(arr, x: int, y: int, size: int):
    return arr[y:y + size, x:x + size]


def crop_patches(img: RasterImage, spec: PatchSpec) -> list[tuple[tuple[int, int], RasterImage]]:
    """Crop ``img`` on the stride grid.

    An image smaller than the patch yields an empty list and a PatchWarning.
    """
    offsets = patch_offsets(img.height, img.width, spec)
    if not offsets:
        warnings.warn(f"image {img.width}x{img.height} is smaller than patch size {spec.size}",
                      PatchWarning, stacklevel=2)
    return [((x, y), RasterImage(_crop(img.data, x, y, spec.size))) for x, y in offsets]


def augment_set(patch):
    """All 8 dihedral variants of a square patch, in ALL_TRANSFORMS order."""
    if patch.height != patch.width:
        raise ValueError(f"augmentation needs a square patch, got {patch.width}x{patch.height}")
    return [apply_transform(patch, t) for t in ALL_TRANSFORMS]


def crop_aligned(img: RasterImage, gt: BinaryMask, spec: PatchSpec):
    """Crop an image and its ground truth on the same grid.

    Returns ``[((x, y), patch, gt_patch), ...]`` with offsets identical to
    ``crop_patches(img, spec)``.
    """
    if img.shape[:2] != gt.shape:
        raise ValueError(f"image {img.shape[:2]} and ground truth {gt.shape} differ in size")
    offsets = patch_offsets(img.height, img.width, spec)
    if not offsets:
        warnings.warn(f"image {img.width}x{img.height} is smaller than patch size {spec.size}",
                      PatchWarning, stacklevel=2)
    return [((x, y), RasterImage(_crop(img.data, x, y, spec.size)),
             BinaryMask(_crop(gt.data, x, y, spec.size))) for x, y in offsets]


def augment_aligned(patch: RasterImage, gt: BinaryMask):
    """Apply every dihedral transform to both members of a pair."""
    return [(apply_transform(patch, t), apply_transform(gt, t)) for t in ALL_TRANSFORMS]
