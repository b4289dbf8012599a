"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are collected in ``RESULTS`` and printed by the terminal-summary
hook in ``conftest.py``. Run just this file with::

    pytest tests/test_acceptance.py -v

Criterion 8 has a dataset-scale part that runs only when ``RGBC_IRMA_DIR``
points at a directory holding ``train.txt`` and ``test.txt`` manifests
(``<image path>\\t<IRMA code>`` per line).
"""
import math
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from rgbarcode.barcode import (
    Barcode,
    binarize_median,
    code_length,
    encode,
    gribc_config,
    grgbc_config,
    rbc_config,
)
from rgbarcode.estimators import GRGBCEncoder, GRIBCEncoder, HammingRetriever, RBCEncoder
from rgbarcode.gabor import GaborBankConfig, build_bank, filter_magnitude
from rgbarcode.index import (
    ArchiveFormatError,
    BarcodeArchive,
    archive_from_bytes,
    archive_to_bytes,
    hamming_similarity,
    search,
)
from rgbarcode.irma import build_hierarchy, evaluate, read_manifest, suitability, total_error
from rgbarcode.radon import pixel_coordinates, projection_bin_count, radon_transform
from rgbarcode.synthetic import make_shape_corpus
from oracles.irma_hand_scores import PAIRS, TRAINING, branch_counts, score
from oracles.reference import brute_force_radon, naive_search, sort_median
from published import ETA_RANKING, PRINTED_TYPO, ROWS, config_for, expected_length

RESULTS = {}

TITLES = {
    1: "code lengths of the 20 published configurations",
    2: "Radon mass conservation and brute-force oracle",
    3: "Gabor kernel identities",
    4: "binarization and barcode properties",
    5: "search equals the naive oracle",
    6: "IRMA error edge cases and hand-scored pairs",
    7: "suitability ranking",
    8: "retrieval accuracy",
    9: "archive round-trip and robustness",
}


@contextmanager
def criterion(n):
    """Record PASS or FAIL for criterion ``n``; ``notes`` collects detail strings."""
    notes = []
    try:
        yield notes
    except BaseException as exc:
        if isinstance(exc, pytest.skip.Exception):
            RESULTS[n] = ("SKIP", str(exc))
        else:
            RESULTS[n] = ("FAIL", f"{type(exc).__name__}: {exc}".splitlines()[0])
        raise
    RESULTS[n] = ("PASS", "; ".join(notes))


def summary_lines():
    lines = []
    for n, title in TITLES.items():
        status, detail = RESULTS.get(n, ("NOT RUN", ""))
        lines.append(f"criterion {n} [{status}] {title}" + (f": {detail}" if detail else ""))
    return lines


def test_criterion_1_code_lengths():
    with criterion(1) as notes:
        img = np.random.default_rng(1).random((70, 90))
        mismatches = []
        for row in ROWS:
            cfg = config_for(row)
            want = expected_length(row)
            got = code_length(cfg)
            produced = len(encode(img, cfg))
            if not got == produced == want:
                mismatches.append(f"{row[0]}: code_length {got}, encoder {produced}, expected {want}")
        assert not mismatches, mismatches
        for label, n in PRINTED_TYPO.items():
            printed = next(r[7] for r in ROWS if r[0] == label)
            notes.append(f"20/20 exact ({label} produces {n}, printed {printed})")


def test_criterion_2_radon():
    with criterion(2) as notes:
        rng = np.random.default_rng(2)
        angles = list(range(180))
        worst_sum = worst_bin = 0.0
        for _ in range(200):
            img = rng.random((32, 32))
            sino = radon_transform(img, angles).values
            total = img.sum()
            worst_sum = max(worst_sum, np.max(np.abs(sino.sum(axis=0) - total)) / total)
            worst_bin = max(worst_bin, np.max(np.abs(sino - brute_force_radon(img, angles))))
        assert worst_sum <= 1e-6, f"column sum relative error {worst_sum:.3g}"
        assert worst_bin <= 1e-9, f"oracle bin error {worst_bin:.3g}"
        assert projection_bin_count(32, 32) == 49
        assert projection_bin_count(64, 64) == 95
        notes.append(f"max sum error {worst_sum:.1e}, max bin error {worst_bin:.1e}, bins 49/95")


def test_criterion_3_gabor():
    with criterion(3) as notes:
        worst = 0.0
        for cfg in (GaborBankConfig(5, 8, 23, 23), GaborBankConfig(8, 16, 23, 23), GaborBankConfig(5, 4, 17, 17)):
            bank = build_bank(cfg)
            assert len(bank) == cfg.n_scales * cfg.n_orientations
            for k in bank:
                f = k.frequency
                center = k.values[(cfg.win_rows - 1) // 2, (cfg.win_cols - 1) // 2]
                expected = f * f / (math.pi * cfg.gamma * cfg.eta)
                worst = max(worst, abs(center - expected))
        assert worst <= 1e-12, f"center sample error {worst:.3g}"

        cfg = GaborBankConfig(5, 16, 23, 23)
        bank = build_bank(cfg)
        x, y = pixel_coordinates(128, 128)
        picks = np.random.default_rng(3).choice(len(bank), size=3, replace=False)
        for i in picks:
            k = bank[i]
            t = math.radians(k.orientation_deg)
            img = 0.5 + 0.5 * np.cos(2 * math.pi * k.frequency * (x * math.cos(t) + y * math.sin(t)))
            means = [filter_magnitude(img, kk)[32:-32, 32:-32].mean() for kk in bank]
            assert int(np.argmax(means)) == i, f"grating for (u={k.scale_index}, v={k.orientation_index})"
        chosen = ", ".join(f"({bank[i].scale_index},{bank[i].orientation_index})" for i in picks)
        notes.append(f"center error {worst:.1e}; matched gratings {chosen} on GFB(5,16)")


def test_criterion_4_binarization(natural_images):
    with criterion(4) as notes:
        rng = np.random.default_rng(4)
        for trial in range(10_000):
            n = int(rng.integers(1, 60))
            vec = rng.integers(0, 5, n).astype(float) if trial % 3 == 0 else rng.normal(size=n)
            nonzero = bool(trial % 2)
            bits, thr = binarize_median(vec, nonzero_only=nonzero)
            pool = [v for v in vec if v != 0] if nonzero else list(vec)
            want = sort_median(pool) if pool else 0.0
            assert thr == pytest.approx(want, abs=1e-12)
            assert np.array_equal(bits, vec >= want)

        gabor_configs = (gribc_config(5, 16), grgbc_config(5, 8))
        scaled = [rng.random((48, 56)), *natural_images[:4]]
        for cfg in gabor_configs:
            for img in scaled:
                ref = encode(img, cfg)
                for c in (0.5, 2.0, 7.0):
                    assert encode(img * c, cfg) == ref, f"{cfg.label()} changes under scaling by {c}"

        low, high = 1.0, 0.0
        for cfg in gabor_configs:
            for img in natural_images:
                segs = encode(img, cfg).unpack().reshape(cfg.n_segments, cfg.segment_length)
                frac = segs.mean(axis=1)
                low, high = min(low, frac.min()), max(high, frac.max())
        assert 0.4 <= low and high <= 0.6, f"segment popcount fraction in [{low:.3f}, {high:.3f}]"

        for cfg in (rbc_config(4), *gabor_configs):
            assert encode(np.zeros((40, 40)), cfg).unpack().all(), f"{cfg.label()} zero image"
        notes.append(f"{len(natural_images)} natural images, segment popcount in [{low:.3f}, {high:.3f}]")


def test_criterion_5_search():
    with criterion(5) as notes:
        rng = np.random.default_rng(5)
        cfg = grgbc_config(5, 4)
        archive = BarcodeArchive(cfg)
        rows = rng.random((1000, archive.n_bits)) > 0.5
        rows[500] = rows[17]  # force an exact tie
        for i in rng.permutation(1000):
            archive.add(f"img{i:04d}", Barcode.from_bits(cfg, rows[i]))
        queries = [rows[17], *(rng.random((4, archive.n_bits)) > 0.5)]
        for q in queries:
            for k in (1, 5, 10):
                got = [(h.similarity, h.id) for h in search(Barcode.from_bits(cfg, q), archive, k=k).hits]
                assert got == naive_search(q, archive, k)
        bits = rows[3]
        assert hamming_similarity(bits, bits) == 1.0
        assert hamming_similarity(bits, ~bits) == 0.0
        notes.append("1000 codes, k in {1, 5, 10}, ids and similarities identical")


def test_criterion_6_irma():
    with criterion(6) as notes:
        stats = build_hierarchy(TRAINING)
        truth = "1121-120-200-700"
        assert total_error(truth, truth, stats) == 0.0
        assert total_error(truth, "2121-120-200-700", stats) == 0.25
        assert total_error(truth, "9999-999-999-999", stats) == 1.0
        assert total_error(truth, "****-***-***-***", stats) == 0.5
        b = branch_counts(TRAINING)
        worst = 0.0
        for t, p in PAIRS:
            worst = max(worst, abs(total_error(t, p, stats) - float(score(t, p, b))))
        assert worst <= 1e-12, f"hand-scored pair error {worst:.3g}"
        notes.append(f"{len(PAIRS)} hand-scored pairs, max error {worst:.1e}")


def test_criterion_7_eta_ranking():
    with criterion(7) as notes:
        etas = suitability([(r[6], r[7]) for r in ROWS])
        ranked = [r[0] for _, r in sorted(zip(etas, ROWS), key=lambda t: -t[0])]
        agree = sum(a == b for a, b in zip(ranked, ETA_RANKING))
        assert agree == len(ETA_RANKING), f"{agree}/{len(ETA_RANKING)} rank positions"
        notes.append(f"{agree}/{len(ETA_RANKING)} rank positions")


def _irma_dataset():
    root = os.environ.get("RGBC_IRMA_DIR")
    if not root:
        return None
    root = Path(root)
    if not (root / "train.txt").is_file() or not (root / "test.txt").is_file():
        return None
    return root


def _dataset_errors(root):
    train = read_manifest(root / "train.txt")
    test = read_manifest(root / "test.txt")
    stats = build_hierarchy(code for _, code in train)
    encoders = {
        "GRGBC(8,16,23,23)": GRGBCEncoder(8, 16, conv_method="fft", n_jobs=-1),
        "GRIBC(5,16,23,23)": GRIBCEncoder(5, 16, conv_method="fft", n_jobs=-1),
        **{f"RBC{n}": RBCEncoder(n, n_jobs=-1) for n in (4, 8, 16, 32)},
    }
    totals = {}
    for label, enc in encoders.items():
        enc.fit()
        archive = BarcodeArchive(enc.config_)
        for (path, code), bc in zip(train, enc.encode_many([p for p, _ in train])):
            archive.add(str(path), bc, code)
        queries = [(f"test:{p}", bc, code) for (p, code), bc in zip(test, enc.encode_many([p for p, _ in test]))]
        totals[label] = evaluate(archive, queries, stats, top_k=()).e_total
    return totals, len(test)


def test_criterion_8_retrieval():
    with criterion(8) as notes:
        images, labels = make_shape_corpus(n_per_class=40)
        enc = GRGBCEncoder(5, 8, 23, 23).fit()
        bits = enc.transform(images)
        retriever = HammingRetriever().fit(bits, labels)
        predicted = retriever.predict(bits, exclude_ids=list(range(len(labels))))
        accuracy = float(np.mean(predicted == labels))
        assert accuracy >= 0.90, f"synthetic first-hit accuracy {accuracy:.3f}"
        notes.append(f"synthetic 5x40 leave-one-out accuracy {accuracy:.3f}")

        root = _irma_dataset()
        if root is None:
            notes.append("IRMA dataset part skipped (RGBC_IRMA_DIR not set)")
            return
        totals, n_test = _dataset_errors(root)
        rbc_best = min(v for k, v in totals.items() if k.startswith("RBC"))
        for label in ("GRGBC(8,16,23,23)", "GRIBC(5,16,23,23)"):
            e = totals[label]
            assert e <= 420, f"{label} E_total {e:.2f}"
            assert e < rbc_best, f"{label} E_total {e:.2f} not below RBC {rbc_best:.2f}"
            assert 1 - e / n_test >= 0.75, f"{label} accuracy {1 - e / n_test:.3f}"
        notes.append("IRMA: " + ", ".join(f"{k} {v:.2f}" for k, v in totals.items()))


def _random_archive(rng):
    cfg = [rbc_config(int(rng.integers(1, 9))), gribc_config(int(rng.integers(1, 6)), 4),
           grgbc_config(int(rng.integers(1, 6)), int(rng.integers(1, 9)))][int(rng.integers(0, 3))]
    archive = BarcodeArchive(cfg)
    for i in range(int(rng.integers(0, 12))):
        code = None if rng.random() < 0.3 else f"{rng.integers(1000, 9999)}-120-200-700"
        ident = f"id{i}-" + "".join(rng.choice(list("abcé漢/ "), size=int(rng.integers(0, 6))))
        archive.add(ident, Barcode.from_bits(cfg, rng.random(archive.n_bits) > 0.5), code)
    return archive


def test_criterion_9_archive():
    with criterion(9) as notes:
        rng = np.random.default_rng(9)
        samples = []
        for _ in range(100):
            archive = _random_archive(rng)
            data = archive_to_bytes(archive)
            assert archive_from_bytes(data) == archive
            samples.append(data)
        typed = 0
        for trial in range(50):
            data = bytearray(samples[trial])
            if trial % 2:
                data = data[: int(rng.integers(0, len(data)))]
            else:
                for pos in rng.integers(0, len(data), int(rng.integers(1, 5))):
                    data[pos] ^= int(rng.integers(1, 256))
            with pytest.raises(ArchiveFormatError):
                archive_from_bytes(bytes(data))
            typed += 1
        notes.append(f"100 round-trips exact, {typed}/50 damaged archives raised ArchiveFormatError")
