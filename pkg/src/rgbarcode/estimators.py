"""scikit-learn compatible barcode encoders and a Hamming nearest-neighbour retriever.

The encoders are stateless transformers: ``fit`` only validates the
parameters and builds the Gabor bank. ``transform`` maps a collection of
images to a ``(n_images, n_bits)`` matrix of 0/1 values, so encoders can sit
in a :class:`sklearn.pipeline.Pipeline` in front of :class:`HammingRetriever`
or any other estimator.
"""
import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .barcode import ENCODERS, code_length, gribc_config, grgbc_config, rbc_config
from .gabor import build_bank
from .index import hamming_distances
from .validation import check_bits, check_images


class _BarcodeEncoder(TransformerMixin, BaseEstimator):

    def _make_config(self):
        raise NotImplementedError

    def fit(self, X=None, y=None):
        self.config_ = self._make_config()
        self.bank_ = build_bank(self.config_.bank_config()) if self.config_.method != "RBC" else None
        self.n_bits_ = code_length(self.config_)
        return self

    def encode(self, img):
        """Barcode of a single image."""
        check_is_fitted(self, "config_")
        (img,) = check_images(img)
        return ENCODERS[self.config_.method](
            img, self.config_, bank=self.bank_, conv_method=getattr(self, "conv_method", "direct")
        )

    def encode_many(self, X):
        """Barcodes for every image in ``X``, in input order."""
        check_is_fitted(self, "config_")
        images = check_images(X)
        n_jobs = getattr(self, "n_jobs", None)
        if n_jobs in (None, 1) or len(images) < 2:
            return [self.encode(img) for img in images]
        return Parallel(n_jobs=n_jobs)(delayed(self.encode)(img) for img in images)

    def transform(self, X):
        codes = self.encode_many(X)
        if not codes:
            return np.zeros((0, self.n_bits_), dtype=np.uint8)
        return np.stack([c.unpack() for c in codes]).astype(np.uint8)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "config_")
        return np.array([f"bit{i}" for i in range(self.n_bits_)], dtype=object)


class RBCEncoder(_BarcodeEncoder):
    """Radon barcodes: median-thresholded projections at evenly spaced angles.

    Parameters
    ----------
    n_angles : int
        Number of projection angles ``k * 180 / n_angles``.
    bins_per_angle : int
        Each projection is linearly resampled to this many values.
    image_side : int
        Images are resized to ``image_side x image_side`` first.
    n_jobs : int, optional
        joblib workers used by ``transform``.
    """

    def __init__(self, n_angles=4, bins_per_angle=128, image_side=32, n_jobs=None):
        self.n_angles = n_angles
        self.bins_per_angle = bins_per_angle
        self.image_side = image_side
        self.n_jobs = n_jobs

    def _make_config(self):
        if self.n_angles < 1 or self.bins_per_angle < 1 or self.image_side < 1:
            raise ValueError("n_angles, bins_per_angle and image_side must be >= 1")
        return rbc_config(self.n_angles, self.bins_per_angle, self.image_side)


class _GaborEncoder(_BarcodeEncoder):

    def _bank_params(self):
        return dict(f_max=self.f_max, gamma=self.gamma, eta=self.eta, phi=self.phi,
                    downsample_mode=self.downsample_mode)


class GRIBCEncoder(_GaborEncoder):
    """Gabor-of-Radon-image barcodes.

    The image is resized to ``image_side``, Radon-transformed at ``n_angles``
    angles, the sinogram resized to ``radon_side x radon_side`` and filtered
    by an ``n_scales x n_orientations`` Gabor bank. Each magnitude response
    is downsampled by ``(d1, d2)`` and thresholded at its median.
    """

    def __init__(self, n_scales=5, n_orientations=16, win_rows=23, win_cols=23,
                 f_max=0.25, gamma=math.sqrt(2), eta=math.sqrt(2), phi=0.0,
                 image_side=128, n_angles=180, radon_side=32, d1=4, d2=4,
                 downsample_mode="decimate", conv_method="direct", n_jobs=None):
        self.n_scales = n_scales
        self.n_orientations = n_orientations
        self.win_rows = win_rows
        self.win_cols = win_cols
        self.f_max = f_max
        self.gamma = gamma
        self.eta = eta
        self.phi = phi
        self.image_side = image_side
        self.n_angles = n_angles
        self.radon_side = radon_side
        self.d1 = d1
        self.d2 = d2
        self.downsample_mode = downsample_mode
        self.conv_method = conv_method
        self.n_jobs = n_jobs

    def _make_config(self):
        if self.radon_side % self.d1 or self.radon_side % self.d2:
            raise ValueError("radon_side must be divisible by d1 and d2")
        cfg = gribc_config(self.n_scales, self.n_orientations, self.win_rows, self.win_cols,
                           image_side=self.image_side, n_angles=self.n_angles,
                           d1=self.d1, d2=self.d2, radon_side=self.radon_side,
                           **self._bank_params())
        cfg.bank_config()  # validates the Gabor parameters
        return cfg


class GRGBCEncoder(_GaborEncoder):
    """Guided Radon-of-Gabor barcodes.

    The image is resized to ``image_side`` and filtered by the Gabor bank;
    each magnitude response is downsampled by ``(d1, d2)`` and projected once,
    perpendicular to its kernel's stripes, then thresholded at its median.
    """

    def __init__(self, n_scales=5, n_orientations=8, win_rows=23, win_cols=23,
                 f_max=0.25, gamma=math.sqrt(2), eta=math.sqrt(2), phi=0.0,
                 image_side=64, d1=2, d2=2,
                 downsample_mode="decimate", conv_method="direct", n_jobs=None):
        self.n_scales = n_scales
        self.n_orientations = n_orientations
        self.win_rows = win_rows
        self.win_cols = win_cols
        self.f_max = f_max
        self.gamma = gamma
        self.eta = eta
        self.phi = phi
        self.image_side = image_side
        self.d1 = d1
        self.d2 = d2
        self.downsample_mode = downsample_mode
        self.conv_method = conv_method
        self.n_jobs = n_jobs

    def _make_config(self):
        if self.image_side % self.d1 or self.image_side % self.d2:
            raise ValueError("image_side must be divisible by d1 and d2")
        cfg = grgbc_config(self.n_scales, self.n_orientations, self.win_rows, self.win_cols,
                           image_side=self.image_side, d1=self.d1, d2=self.d2,
                           **self._bank_params())
        cfg.bank_config()  # validates the Gabor parameters
        return cfg


def encoder_for_config(config, **params):
    """Unfitted encoder reproducing ``config``; ``params`` adds runtime options."""
    bank = dict(f_max=config.f_max, gamma=config.gamma, eta=config.eta, phi=config.phi,
                downsample_mode=config.downsample_mode)
    shape = dict(n_scales=config.n_scales, n_orientations=config.n_orientations,
                 win_rows=config.win_rows, win_cols=config.win_cols)
    if config.method == "RBC":
        return RBCEncoder(config.n_angles, config.bins_per_angle, config.image_side, **params)
    if config.method == "GRIBC":
        return GRIBCEncoder(**shape, **bank, image_side=config.image_side,
                            n_angles=config.n_angles, radon_side=config.bins_per_angle,
                            d1=config.d1, d2=config.d2, **params)
    return GRGBCEncoder(**shape, **bank, image_side=config.image_side,
                        d1=config.d1, d2=config.d2, **params)


class HammingRetriever(BaseEstimator):
    """Exhaustive nearest neighbours under Hamming similarity.

    Ties in similarity are broken by ascending id, so results do not depend
    on the order of the training codes.

    Parameters
    ----------
    n_neighbors : int
        Default neighbour count for :meth:`kneighbors`.
    """

    def __init__(self, n_neighbors=1):
        self.n_neighbors = n_neighbors

    def fit(self, X, y=None, ids=None):
        bits = check_bits(X)
        self.n_bits_ = bits.shape[1]
        self.packed_ = np.packbits(bits, axis=1, bitorder="little")
        n = bits.shape[0]
        self.ids_ = np.asarray(ids if ids is not None else np.arange(n))
        if len(self.ids_) != n:
            raise ValueError("ids must have one entry per code")
        if len(set(self.ids_.tolist())) != n:
            raise ValueError("ids must be unique")
        self.labels_ = None if y is None else np.asarray(y)
        self._rank = np.empty(n, dtype=np.int64)
        self._rank[np.argsort(self.ids_, kind="stable")] = np.arange(n)
        return self

    @classmethod
    def from_archive(cls, archive, n_neighbors=1):
        bits = (np.unpackbits(archive.packed_matrix(), axis=1, count=archive.n_bits,
                              bitorder="little") if len(archive)
                else np.zeros((0, archive.n_bits), dtype=bool))
        labels = [e.irma_code for e in archive.entries]
        return cls(n_neighbors).fit(bits, labels, ids=archive.ids)

    def kneighbors(self, X, n_neighbors=None, exclude_ids=None):
        """Return ``(similarities, indices)``, each of shape ``(n_queries, k)``.

        ``exclude_ids`` gives one id per query whose entry must not be
        returned (leave-one-out); use ``None`` items to exclude nothing.
        """
        check_is_fitted(self, "packed_")
        bits = check_bits(X, self.n_bits_)
        n = self.packed_.shape[0]
        k = self.n_neighbors if n_neighbors is None else n_neighbors
        excl = [None] * len(bits) if exclude_ids is None else list(exclude_ids)
        id_pos = {v: i for i, v in enumerate(self.ids_.tolist())}
        sims, idx = [], []
        for row, ex in zip(np.packbits(bits, axis=1, bitorder="little"), excl):
            dist = hamming_distances(row, self.packed_)
            key = dist * n + self._rank
            allowed = n
            if ex is not None and ex in id_pos:
                key[id_pos[ex]] = np.iinfo(np.int64).max
                allowed -= 1
            kk = min(k, allowed)
            top = np.argsort(key, kind="stable")[:kk]
            idx.append(top)
            sims.append(1.0 - dist[top] / self.n_bits_)
        return np.array(sims, dtype=np.float64), np.array(idx, dtype=np.intp)

    def predict(self, X, exclude_ids=None):
        """Label of the most similar training code for each query."""
        if self.labels_ is None:
            raise ValueError("retriever was fitted without labels")
        _, idx = self.kneighbors(X, 1, exclude_ids)
        return self.labels_[idx[:, 0]]
