"""Median-thresholded barcodes: RBC, GRIBC and GRGBC.

Bit order is append order: segment after segment (scale-major, then
orientation for the Gabor methods; angle order for RBC), and inside a segment
the row-major flattening of the feature map. Packed storage is LSB-first:
bit ``i`` lives in byte ``i // 8`` at position ``i % 8``.
"""
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .gabor import GaborBankConfig, build_bank, downsample, filter_magnitude
from .radon import project, projection_bin_count, radon_transform
from .raster import normalize, resize_bilinear

METHODS = ("RBC", "GRIBC", "GRGBC")

# Radon-image side that GRIBC resizes the sinogram to
GRIBC_RADON_SIDE = 32


@dataclass(frozen=True)
class CodeConfig:
    """Every parameter that determines a barcode's bits.

    ``bins_per_angle`` means: resampled bins per projection for RBC, the
    resized Radon-image side for GRIBC, and the guided projection length for
    GRGBC.
    """

    method: str
    n_scales: int = 0
    n_orientations: int = 0
    win_rows: int = 0
    win_cols: int = 0
    image_side: int = 32
    n_angles: int = 4
    d1: int = 1
    d2: int = 1
    bins_per_angle: int = 128
    f_max: float = 0.25
    gamma: float = math.sqrt(2)
    eta: float = math.sqrt(2)
    phi: float = 0.0
    downsample_mode: str = "decimate"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown barcode method {self.method!r}")

    def header_fields(self):
        """Integer fields persisted in archive headers, in file order."""
        return (
            self.n_scales, self.n_orientations, self.win_rows, self.win_cols,
            self.image_side, self.n_angles, self.d1, self.d2, self.bins_per_angle,
        )

    def bank_config(self):
        return GaborBankConfig(
            self.n_scales, self.n_orientations, self.win_rows, self.win_cols,
            self.f_max, self.gamma, self.eta, self.phi,
        )

    @property
    def segment_length(self):
        if self.method == "RBC":
            return self.bins_per_angle
        if self.method == "GRIBC":
            return (self.bins_per_angle // self.d1) * (self.bins_per_angle // self.d2)
        return projection_bin_count(self.image_side // self.d1, self.image_side // self.d2)

    @property
    def n_segments(self):
        if self.method == "RBC":
            return self.n_angles
        return self.n_scales * self.n_orientations

    def label(self):
        if self.method == "RBC":
            return f"RBC{self.n_angles}"
        return f"{self.method}({self.n_scales},{self.n_orientations},{self.win_rows},{self.win_cols})"


def rbc_config(n_angles=4, bins_per_angle=128, image_side=32):
    return CodeConfig("RBC", image_side=image_side, n_angles=n_angles, bins_per_angle=bins_per_angle)


def gribc_config(n_scales=5, n_orientations=16, win_rows=23, win_cols=23, *, image_side=128,
                 n_angles=180, d1=4, d2=4, radon_side=GRIBC_RADON_SIDE, **bank):
    return CodeConfig("GRIBC", n_scales, n_orientations, win_rows, win_cols, image_side,
                      n_angles, d1, d2, radon_side, **bank)


def grgbc_config(n_scales=5, n_orientations=8, win_rows=23, win_cols=23, *, image_side=64,
                 d1=2, d2=2, **bank):
    bins = projection_bin_count(image_side // d1, image_side // d2)
    return CodeConfig("GRGBC", n_scales, n_orientations, win_rows, win_cols, image_side,
                      n_orientations, d1, d2, bins, **bank)


def code_length(config):
    """Barcode length in bits, computed from the configuration alone."""
    return config.n_segments * config.segment_length


@dataclass(frozen=True, eq=False)
class Barcode:
    config: CodeConfig
    n_bits: int
    bits: np.ndarray  # packed uint8, LSB-first, zero padding

    @classmethod
    def from_bits(cls, config, bits):
        bits = np.asarray(bits, dtype=bool).ravel()
        packed = np.packbits(bits, bitorder="little")
        packed.setflags(write=False)
        return cls(config, int(bits.size), packed)

    @property
    def method(self):
        return self.config.method

    def unpack(self):
        return np.unpackbits(self.bits, count=self.n_bits, bitorder="little").astype(bool)

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return (self.config == other.config and self.n_bits == other.n_bits
                and np.array_equal(self.bits, other.bits))

    def __len__(self):
        return self.n_bits


def binarize_median(vec, nonzero_only=False):
    """Threshold ``vec`` at its median; bit ``i`` is ``vec[i] >= median``.

    With ``nonzero_only`` the median is taken over the non-zero entries, and
    is 0 when there are none.
    """
    vec = np.asarray(vec, dtype=np.float64).ravel()
    if vec.size == 0:
        raise ValueError("cannot binarize an empty vector")
    pool = vec[vec != 0] if nonzero_only else vec
    threshold = float(np.median(pool)) if pool.size else 0.0
    return vec >= threshold, threshold


def rbc_encode(img, config, **_):
    """Radon barcode: threshold every projection at its non-zero median."""
    side = config.image_side
    img = normalize(img, side, side)
    angles = [k * 180.0 / config.n_angles for k in range(config.n_angles)]
    sino = radon_transform(img, angles).values
    proj = resize_bilinear(sino, config.bins_per_angle, sino.shape[1])
    rows = [binarize_median(proj[:, j], nonzero_only=True)[0] for j in range(proj.shape[1])]
    return Barcode.from_bits(config, np.concatenate(rows))


def _bank_for(config, bank):
    return bank if bank is not None else build_bank(config.bank_config())


def gribc_encode(img, config, bank=None, conv_method="direct"):
    """Gabor-of-Radon-image barcode.

    Radon-transform the normalized image, shrink the sinogram to a small
    square, filter it with every kernel, and median-threshold each decimated
    magnitude map.
    """
    side = config.image_side
    img = normalize(img, side, side)
    angles = [k * 180.0 / config.n_angles for k in range(config.n_angles)]
    sino = radon_transform(img, angles).values
    radon_img = resize_bilinear(sino, config.bins_per_angle, config.bins_per_angle)
    segments = []
    for kernel in _bank_for(config, bank):
        resp = filter_magnitude(radon_img, kernel, method=conv_method)
        feat = downsample(resp, config.d1, config.d2, config.downsample_mode)
        segments.append(binarize_median(feat.ravel())[0])
    return Barcode.from_bits(config, np.concatenate(segments))


def guided_angle(orientation_deg):
    """Radon angle that integrates across a kernel's stripes."""
    return (orientation_deg + 90.0) % 180.0


def grgbc_encode(img, config, bank=None, conv_method="direct"):
    """Guided Radon-of-Gabor barcode.

    For every kernel, project the decimated magnitude response once, at the
    angle perpendicular to the kernel's stripes, and median-threshold it.
    """
    side = config.image_side
    img = normalize(img, side, side)
    segments = []
    for kernel in _bank_for(config, bank):
        resp = filter_magnitude(img, kernel, method=conv_method)
        feat = downsample(resp, config.d1, config.d2, config.downsample_mode)
        segments.append(binarize_median(project(feat, guided_angle(kernel.orientation_deg)))[0])
    return Barcode.from_bits(config, np.concatenate(segments))


ENCODERS = {"RBC": rbc_encode, "GRIBC": gribc_encode, "GRGBC": grgbc_encode}


def encode(img, config, bank=None, conv_method="direct"):
    return ENCODERS[config.method](img, config, bank=bank, conv_method=conv_method)


def barcode_image(bits, segment_length=None, row_height=1):
    """Stripe image: one row block per segment, 1 bits black, 0 bits white."""
    if isinstance(bits, Barcode):
        segment_length = segment_length or bits.config.segment_length
        bits = bits.unpack()
    bits = np.asarray(bits, dtype=bool).ravel()
    segment_length = segment_length or bits.size
    if bits.size % segment_length:
        raise ValueError("bit count is not a multiple of the segment length")
    grid = bits.reshape(-1, segment_length)
    grid = np.repeat(grid, row_height, axis=0)
    return np.where(grid, 0, 255).astype(np.uint8)


def render_barcode(bc, path, segment_length=None, row_height=1):
    """Write :func:`barcode_image` of ``bc`` as a PNG."""
    Image.fromarray(barcode_image(bc, segment_length, row_height)).save(path, format="PNG")
