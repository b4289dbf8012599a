"""Image loading and size normalization.

A raster is a 2-D ``float64`` array of intensities. Images read from disk are
scaled into [0, 1] by the maximum value representable in their sample depth.

Resizing is bilinear on a pixel-center grid (``align_corners=False``): output
pixel ``i`` samples the source at ``(i + 0.5) * n_in / n_out - 0.5``, clamped
to the valid index range, which replicates the edge samples.
"""
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

SUPPORTED_SUFFIXES = {".png", ".pgm", ".pnm", ".ppm", ".pbm"}

# ITU-R BT.601 luma weights; sum to 1 so white maps to 1.0.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class ImageLoadError(OSError):
    """Raised when an image file cannot be turned into a raster."""


def load_image(path):
    """Read a PNG or PGM/PNM file as a grayscale raster in [0, 1]."""
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ImageLoadError(f"unsupported image format: {path.suffix or path.name}")
    try:
        with Image.open(path) as im:
            im.load()
            return _to_raster(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        if isinstance(exc, ImageLoadError):
            raise
        raise ImageLoadError(f"cannot read {path}: {exc}") from exc


def _to_raster(im):
    if im.width == 0 or im.height == 0:
        raise ImageLoadError("zero-dimension image")
    mode = im.mode
    if mode in ("I;16", "I;16B", "I;16L", "I;16N", "I"):
        # 16-bit PNG/PGM; Pillow widens PGM to full 16-bit range.
        arr = np.asarray(im, dtype=np.float64) / 65535.0
    elif mode == "F":
        arr = np.asarray(im, dtype=np.float64)
    else:
        if mode == "1" or mode == "L":
            im = im.convert("L")
        elif mode == "LA":
            im = im.getchannel("L")
        elif mode not in ("RGB", "RGBA"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
        if arr.ndim == 3:
            arr = arr[..., :3] @ LUMA_WEIGHTS
    arr = np.clip(arr, 0.0, 1.0)
    if arr.ndim != 2 or arr.size == 0:
        raise ImageLoadError("zero-dimension image")
    return np.ascontiguousarray(arr)


def check_raster(img, name="image"):
    """Validate a 2-D finite intensity array and return it as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _axis_weights(n_in, n_out):
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(arr, target_rows, target_cols):
    """Bilinear resize of a 2-D array without any range clamping."""
    if target_rows < 1 or target_cols < 1:
        raise ValueError("target size must be at least 1x1")
    arr = np.asarray(arr, dtype=np.float64)
    rows, cols = arr.shape
    if (rows, cols) == (target_rows, target_cols):
        return arr.copy()
    r_lo, r_hi, r_frac = _axis_weights(rows, target_rows)
    c_lo, c_hi, c_frac = _axis_weights(cols, target_cols)
    tmp = arr[r_lo] * (1.0 - r_frac)[:, None] + arr[r_hi] * r_frac[:, None]
    return tmp[:, c_lo] * (1.0 - c_frac) + tmp[:, c_hi] * c_frac


def normalize(img, target_rows, target_cols):
    """Resize ``img`` to ``target_rows x target_cols``.

    The result is clamped to the input's own intensity range, so a raster in
    [0, 1] stays in [0, 1] and scaled inputs are not truncated.
    """
    arr = check_raster(img)
    out = resize_bilinear(arr, int(target_rows), int(target_cols))
    return np.clip(out, arr.min(), arr.max())
