"""Small labelled corpus of jittered geometric shapes for smoke tests and demos."""
import math

import numpy as np

SHAPES = ("disk", "square", "triangle", "cross", "ring")


def _mask(shape, u, v):
    # u, v: shape-frame coordinates in units of the nominal radius
    if shape == "disk":
        return u**2 + v**2 <= 1.0
    if shape == "square":
        return (np.abs(u) <= 0.8) & (np.abs(v) <= 0.8)
    if shape == "triangle":
        return (v >= -0.6) & (np.abs(u) <= (1.0 - v) * 0.75)
    if shape == "cross":
        return ((np.abs(u) <= 0.25) & (np.abs(v) <= 1.0)) | ((np.abs(v) <= 0.25) & (np.abs(u) <= 1.0))
    if shape == "ring":
        r2 = u**2 + v**2
        return (r2 <= 1.0) & (r2 >= 0.45)
    raise ValueError(f"unknown shape {shape!r}")


def make_shape(shape, size=64, rotation=0.0, scale=1.0, shift=(0.0, 0.0), noise=0.0, rng=None):
    """Render one bright shape on a dark background with optional jitter."""
    rng = np.random.default_rng(rng)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2.0
    radius = 0.3 * size * scale
    x = (xx - c - shift[0]) / radius
    y = (c - yy - shift[1]) / radius
    th = math.radians(rotation)
    u = x * math.cos(th) + y * math.sin(th)
    v = -x * math.sin(th) + y * math.cos(th)
    img = np.where(_mask(shape, u, v), 0.8, 0.1)
    if noise:
        img = img + rng.normal(0.0, noise, img.shape)
    return np.clip(img, 0.0, 1.0)


def make_shape_corpus(n_per_class=40, size=64, max_rotation=10.0, noise=0.02,
                      scale_jitter=0.0, max_shift=0.0, seed=0):
    """Return ``(images, labels)`` with ``n_per_class`` jittered copies of every shape.

    Each copy gets a uniform rotation in ``[-max_rotation, max_rotation]``
    degrees and additive Gaussian noise. ``scale_jitter`` and ``max_shift``
    (a fraction of ``size``) add optional size and position jitter.
    """
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for shape in SHAPES:
        for _ in range(n_per_class):
            images.append(make_shape(
                shape, size,
                rotation=rng.uniform(-max_rotation, max_rotation),
                scale=1.0 + rng.uniform(-scale_jitter, scale_jitter),
                shift=tuple(rng.uniform(-max_shift * size, max_shift * size, 2)),
                noise=noise,
                rng=rng,
            ))
            labels.append(shape)
    return np.stack(images), np.array(labels)
