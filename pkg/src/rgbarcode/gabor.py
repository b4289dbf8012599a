"""Gabor filter banks, magnitude responses and decimation.

Kernel for scale ``u`` and orientation ``v`` (both 1-based)::

    f_u     = f_max / sqrt(2) ** (u - 1)
    theta_v = (v - 1) * 180 / n_orientations          (degrees)
    sigma_u = eta / f_u
    G(x, y) = f_u**2 / (pi * gamma * eta)
              * exp(-(x'**2 + gamma**2 * y'**2) / (2 * sigma_u**2))
              * exp(1j * (2 * pi * f_u * x' + phi))

with ``x' = x cos(theta) + y sin(theta)`` and ``y' = -x sin(theta) + y cos(theta)``.
Kernels are sampled on the centered integer grid of the window using the same
axis convention as :mod:`rgbarcode.radon` (``x`` right, ``y`` up), so
``theta_v`` is the direction of the normal to the kernel's stripes in both
modules.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d, fftconvolve

from .radon import pixel_coordinates


@dataclass(frozen=True)
class GaborBankConfig:
    n_scales: int = 5
    n_orientations: int = 8
    win_rows: int = 23
    win_cols: int = 23
    f_max: float = 0.25
    gamma: float = math.sqrt(2)
    eta: float = math.sqrt(2)
    phi: float = 0.0

    def __post_init__(self):
        if self.n_scales < 1 or self.n_orientations < 1:
            raise ValueError("n_scales and n_orientations must be >= 1")
        for w in (self.win_rows, self.win_cols):
            if w < 3 or w % 2 == 0:
                raise ValueError(f"window dimensions must be odd and >= 3, got {w}")
        if not 0.0 < self.f_max <= 0.5:
            raise ValueError("f_max must lie in (0, 0.5]")
        if self.gamma <= 0 or self.eta <= 0:
            raise ValueError("gamma and eta must be positive")

    @property
    def n_filters(self):
        return self.n_scales * self.n_orientations

    def frequency(self, u):
        return self.f_max / math.sqrt(2) ** (u - 1)

    def orientation(self, v):
        return (v - 1) * 180.0 / self.n_orientations


@dataclass(frozen=True)
class GaborKernel:
    scale_index: int
    orientation_index: int
    frequency: float
    orientation_deg: float
    values: np.ndarray


def gabor_kernel(frequency, orientation_deg, win_rows, win_cols, gamma, eta, phi=0.0):
    """Sample one complex Gabor kernel on a ``win_rows x win_cols`` grid."""
    x, y = pixel_coordinates(win_rows, win_cols)
    th = math.radians(orientation_deg)
    xr = x * math.cos(th) + y * math.sin(th)
    yr = -x * math.sin(th) + y * math.cos(th)
    sigma = eta / frequency
    envelope = np.exp(-(xr**2 + gamma**2 * yr**2) / (2.0 * sigma**2))
    carrier = np.exp(1j * (2.0 * math.pi * frequency * xr + phi))
    return frequency**2 / (math.pi * gamma * eta) * envelope * carrier


def build_bank(cfg):
    """All ``n_scales * n_orientations`` kernels, scale-major order."""
    bank = []
    for u in range(1, cfg.n_scales + 1):
        f = cfg.frequency(u)
        for v in range(1, cfg.n_orientations + 1):
            theta = cfg.orientation(v)
            values = gabor_kernel(f, theta, cfg.win_rows, cfg.win_cols, cfg.gamma, cfg.eta, cfg.phi)
            values.setflags(write=False)
            bank.append(GaborKernel(u, v, f, theta, values))
    return bank


def filter_magnitude(img, kernel, method="direct"):
    """``|img * kernel|`` with zero padding, cropped to the input size.

    ``method="fft"`` uses FFT convolution; results agree with the direct sum
    to about 1e-12.
    """
    values = kernel.values if isinstance(kernel, GaborKernel) else np.asarray(kernel)
    img = np.asarray(img, dtype=np.float64)
    if values.shape[0] > img.shape[0] or values.shape[1] > img.shape[1]:
        warnings.warn(
            f"kernel {values.shape} larger than image {img.shape}", RuntimeWarning, stacklevel=2
        )
    if method == "direct":
        resp = convolve2d(img, values, mode="same", boundary="fill", fillvalue=0)
    elif method == "fft":
        resp = fftconvolve(img, values, mode="same")
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    return np.abs(resp)


def downsample(resp, d1, d2, mode="decimate"):
    """Reduce ``resp`` by ``d1`` along rows and ``d2`` along columns.

    ``"decimate"`` keeps every ``d1``-th row and ``d2``-th column starting at
    0; ``"mean"`` averages each ``d1 x d2`` block instead.
    """
    resp = np.asarray(resp)
    if d1 < 1 or d2 < 1:
        raise ValueError("downsampling factors must be >= 1")
    rows, cols = resp.shape
    if rows % d1 or cols % d2:
        raise ValueError(f"shape {resp.shape} not divisible by ({d1}, {d2})")
    if mode == "decimate":
        return resp[::d1, ::d2]
    if mode == "mean":
        return resp.reshape(rows // d1, d1, cols // d2, d2).mean(axis=(1, 3))
    raise ValueError(f"unknown downsampling mode {mode!r}")
