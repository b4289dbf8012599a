"""Input checks shared by the estimators."""
from os import PathLike

import numpy as np

from .raster import check_raster, load_image


def check_images(X):
    """Coerce ``X`` to a list of 2-D float64 rasters.

    Accepts a 3-D array ``(n_images, rows, cols)``, a single 2-D array (one
    image), or a sequence whose items are 2-D arrays or image file paths.
    """
    if isinstance(X, np.ndarray):
        if X.ndim == 2:
            return [check_raster(X)]
        if X.ndim == 3:
            return [check_raster(x, f"image {i}") for i, x in enumerate(X)]
        raise ValueError(f"expected 2-D or 3-D image array, got shape {X.shape}")
    if isinstance(X, (str, PathLike)):
        return [load_image(X)]
    images = []
    for i, item in enumerate(X):
        if isinstance(item, (str, PathLike)):
            images.append(load_image(item))
        else:
            images.append(check_raster(item, f"image {i}"))
    return images


def check_bits(X, n_bits=None):
    """Validate a 0/1 matrix of shape ``(n_codes, n_bits)`` and return it as bool."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D bit matrix, got shape {arr.shape}")
    if arr.dtype != bool:
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("bit matrix must contain only 0 and 1")
        arr = arr.astype(bool)
    if n_bits is not None and arr.shape[1] != n_bits:
        raise ValueError(f"expected {n_bits} bits per code, got {arr.shape[1]}")
    return arr
