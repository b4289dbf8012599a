import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from rgbarcode.barcode import Barcode, code_length, grgbc_config, grgbc_encode, rbc_config, rbc_encode
from rgbarcode.estimators import (
    GRGBCEncoder,
    GRIBCEncoder,
    HammingRetriever,
    RBCEncoder,
    encoder_for_config,
)
from rgbarcode.index import BarcodeArchive, search
from rgbarcode.raster import ImageLoadError


def test_params_and_clone():
    enc = GRGBCEncoder(n_scales=3, n_orientations=4, d1=4, d2=4)
    params = enc.get_params()
    assert params["n_scales"] == 3 and params["d1"] == 4 and params["conv_method"] == "direct"
    twin = clone(enc)
    assert twin is not enc and twin.get_params() == params
    assert not hasattr(twin, "config_")
    enc.set_params(n_orientations=6)
    assert enc.n_orientations == 6


@pytest.mark.parametrize("enc", [RBCEncoder(), GRIBCEncoder(), GRGBCEncoder(n_orientations=16)])
def test_fit_reports_length(enc):
    enc.fit()
    assert enc.n_bits_ == code_length(enc.config_)
    assert len(enc.get_feature_names_out()) == enc.n_bits_


def test_default_lengths():
    assert RBCEncoder().fit().n_bits_ == 512
    assert GRIBCEncoder().fit().n_bits_ == 5120
    assert GRGBCEncoder().fit().n_bits_ == 1960


def test_transform_matches_functional_api(rng):
    images = rng.random((3, 40, 50))
    enc = RBCEncoder(n_angles=8).fit()
    bits = enc.transform(images)
    assert bits.shape == (3, 1024) and bits.dtype == np.uint8
    for img, row in zip(images, bits):
        assert np.array_equal(rbc_encode(img, rbc_config(8)).unpack(), row.astype(bool))

    enc = GRGBCEncoder(n_scales=2, n_orientations=4, conv_method="fft").fit()
    cfg = grgbc_config(2, 4)
    assert enc.encode(images[0]) == grgbc_encode(images[0], cfg)


def test_parallel_transform_is_identical(rng):
    images = rng.random((4, 32, 32))
    serial = RBCEncoder().fit().transform(images)
    parallel = RBCEncoder(n_jobs=2).fit().transform(images)
    assert np.array_equal(serial, parallel)


def test_transform_accepts_paths(tmp_path, rng):
    from PIL import Image

    img = (rng.random((20, 30)) * 255).astype(np.uint8)
    Image.fromarray(img).save(tmp_path / "a.png")
    enc = RBCEncoder().fit()
    assert enc.transform([tmp_path / "a.png"]).shape == (1, 512)
    with pytest.raises(ImageLoadError):
        enc.transform([tmp_path / "missing.png"])


def test_invalid_parameters():
    with pytest.raises(ValueError):
        RBCEncoder(n_angles=0).fit()
    with pytest.raises(ValueError):
        GRGBCEncoder(d1=3).fit()
    with pytest.raises(ValueError):
        GRIBCEncoder(d2=5).fit()
    with pytest.raises(ValueError):
        GRGBCEncoder(gamma=-1.0).fit()
    with pytest.raises(NotFittedError):
        RBCEncoder().transform(np.zeros((1, 8, 8)))


def test_invalid_images():
    enc = RBCEncoder().fit()
    with pytest.raises(ValueError):
        enc.transform(np.zeros((2, 2, 2, 2)))
    with pytest.raises(ValueError):
        enc.encode(np.full((8, 8), np.nan))


@pytest.mark.parametrize("cfg", [rbc_config(8), grgbc_config(3, 4), GRIBCEncoder(n_scales=2).fit().config_])
def test_encoder_for_config_roundtrip(cfg):
    enc = encoder_for_config(cfg, n_jobs=1).fit()
    assert enc.config_ == cfg


def test_retriever_matches_search(rng):
    cfg = rbc_config(1, 64)
    bits = rng.random((200, 64)) > 0.5
    bits[10] = bits[20]  # exact duplicate, tie broken by id
    ids = [f"id{i:03d}" for i in range(200)]
    archive = BarcodeArchive(cfg)
    for i, b in zip(ids, bits):
        archive.add(i, Barcode.from_bits(cfg, b))
    retr = HammingRetriever().fit(bits, ids=ids)
    queries = rng.random((15, 64)) > 0.5
    queries[0] = bits[20]
    sims, idx = retr.kneighbors(queries, n_neighbors=7)
    for q, s_row, i_row in zip(queries, sims, idx):
        ref = search(Barcode.from_bits(cfg, q), archive, k=7)
        assert [h.id for h in ref.hits] == [ids[i] for i in i_row]
        assert np.allclose([h.similarity for h in ref.hits], s_row)
    assert ids[idx[0, 0]] == "id010" and sims[0, 0] == 1.0

    from_archive = HammingRetriever.from_archive(archive)
    assert np.array_equal(from_archive.kneighbors(queries, 7)[1], idx)


def test_retriever_exclusion_and_predict(rng):
    bits = rng.random((30, 48)) > 0.5
    labels = np.repeat(["a", "b", "c"], 10)
    retr = HammingRetriever().fit(bits, labels)
    _, idx = retr.kneighbors(bits, 1)
    assert np.array_equal(idx[:, 0], np.arange(30))
    _, idx = retr.kneighbors(bits, 30, exclude_ids=list(range(30)))
    assert idx.shape == (30, 29)
    assert all(i not in row for i, row in enumerate(idx))
    assert (retr.predict(bits) == labels).all()
    with pytest.raises(ValueError):
        HammingRetriever().fit(bits).predict(bits)


def test_retriever_validation(rng):
    bits = rng.random((5, 16)) > 0.5
    with pytest.raises(ValueError):
        HammingRetriever().fit(bits, ids=[1, 1, 2, 3, 4])
    with pytest.raises(ValueError):
        HammingRetriever().fit(np.full((2, 16), 2))
    retr = HammingRetriever().fit(bits)
    with pytest.raises(ValueError):
        retr.kneighbors(np.zeros((1, 17), dtype=bool))


def test_pipeline_classifies_shapes():
    from rgbarcode.synthetic import make_shape_corpus

    X, y = make_shape_corpus(n_per_class=6)
    pipe = make_pipeline(GRGBCEncoder(conv_method="fft"), HammingRetriever())
    pipe.fit(X[::2], y[::2])
    assert (pipe.predict(X[1::2]) == y[1::2]).mean() >= 0.8
