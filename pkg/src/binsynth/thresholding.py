"""Global Otsu and local adaptive thresholding, plus ground-truth extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import BinaryMask, RasterImage, quantize, to_grayscale


class ThresholdParameterError(ValueError):
    pass


@dataclass(frozen=True)
class AdaptiveParams:
    """Local threshold settings.

    A pixel is ink when it is darker than the weighted mean of its
    ``window`` x ``window`` neighborhood minus ``offset``.
    """

    window: int = 31
    offset: float = 0.06
    method: str = "mean"

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 3 or self.window % 2 == 0:
            raise ThresholdParameterError(f"window must be an odd integer >= 3, got {self.window}")
        if not -1.0 <= self.offset <= 1.0:
            raise ThresholdParameterError(f"offset must lie in [-1, 1], got {self.offset}")
        if self.method not in ("mean", "gaussian"):
            raise ThresholdParameterError(f"method must be 'mean' or 'gaussian', got {self.method!r}")

    @property
    def sigma(self) -> float:
        return self.window / 6.0


def _levels(img: RasterImage) -> np.ndarray:
    if img.channels != 1:
        raise ThresholdParameterError("otsu expects a single-channel image")
    return quantize(img.data)


def otsu(img: RasterImage) -> tuple[int, BinaryMask]:
    """Otsu's global threshold on the 256-bin histogram.

    Returns ``(threshold, mask)`` where the mask marks pixels whose 8-bit
    level is ``<= threshold``. Ties resolve to the smallest level. A constant
    image has no valid split and yields threshold 0 with an empty mask.
    """
    levels = _levels(img)
    hist = np.bincount(levels.ravel(), minlength=256).tolist()
    total = sum(hist)
    total_sum = sum(i * h for i, h in enumerate(hist))

    # between-class variance is proportional to (N*S_b - n_b*S)^2 / (n_b*n_f);
    # compared exactly with Python ints so ties are genuine ties
    best_t, best_num, best_den = None, 0, 1
    n_b = s_b = 0
    for t in range(255):
        n_b += hist[t]
        s_b += t * hist[t]
        n_f = total - n_b
        if n_b == 0 or n_f == 0:
            continue
        num = (total * s_b - n_b * total_sum) ** 2
        den = n_b * n_f
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den

    if best_t is None:
        return 0, BinaryMask(np.zeros(levels.shape, dtype=bool))
    return best_t, BinaryMask(levels <= best_t)


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    x = np.arange(window) - window // 2
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def local_mean(gray: np.ndarray, params: AdaptiveParams) -> np.ndarray:
    """Windowed (box or Gaussian) mean with edge-replicated borders."""
    r = params.window // 2
    if params.method == "gaussian":
        k = _gaussian_kernel(params.window, params.sigma)
        out = ndimage.correlate1d(gray, k, axis=0, mode="nearest")
        return ndimage.correlate1d(out, k, axis=1, mode="nearest")
    padded = np.pad(gray, r, mode="edge")
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    np.cumsum(np.cumsum(padded, axis=0), axis=1, out=sat[1:, 1:])
    w = params.window
    h, wd = gray.shape
    total = sat[w:w + h, w:w + wd] - sat[:h, w:w + wd] - sat[w:w + h, :wd] + sat[:h, :wd]
    return total / (w * w)


def adaptive_threshold(img: RasterImage, params: AdaptiveParams) -> BinaryMask:
    if img.channels != 1:
        raise ThresholdParameterError("adaptive_threshold expects a single-channel image")
    limit = 2 * min(img.width, img.height) + 1
    if params.window > limit:
        raise ThresholdParameterError(
            f"window {params.window} exceeds 2*min(width, height)+1 = {limit}")
    mean = local_mean(img.data, params)
    return BinaryMask(img.data < mean - params.offset)


def despeckle(mask: BinaryMask) -> BinaryMask:
    """Clear foreground pixels that have no foreground 8-neighbor."""
    m = mask.data
    neighbors = ndimage.convolve(m.astype(np.int32), np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]]),
                                 mode="constant", cval=0)
    return BinaryMask(m & (neighbors > 0))


def extract_ground_truth(doc: RasterImage, params: AdaptiveParams | None = None,
                         clean: bool = True) -> BinaryMask:
    """Binarize a clean-background document into its ink mask."""
    params = params or AdaptiveParams()
    mask = adaptive_threshold(to_grayscale(doc), params)
    return despeckle(mask) if clean else mask
