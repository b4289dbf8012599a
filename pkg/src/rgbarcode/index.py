"""Barcode archives, Hamming-similarity search and the archive file format.

File layout (little-endian)::

    magic        4s   b"RGBC"
    version      u16  1
    method       u8   0 = RBC, 1 = GRIBC, 2 = GRGBC
    config       9 x u16  n_scales, n_orientations, win_rows, win_cols,
                          image_side, n_angles, d1, d2, bins_per_angle
    n_bits       u32
    n_entries    u64
    per entry:
        id_len   u16, id bytes (UTF-8)
        code_len u8,  IRMA code bytes (ASCII, 0 = absent)
        ceil(n_bits / 8) packed bytes, bit 0 = LSB of byte 0
    crc32        u32  of every preceding byte

The floating-point Gabor parameters are not stored; a loaded archive carries
the library defaults for them.
"""
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barcode import METHODS, Barcode, CodeConfig, code_length

MAGIC = b"RGBC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHB9HIQ")
_CRC = struct.Struct("<I")


class ArchiveFormatError(ValueError):
    """Archive bytes are malformed, truncated or fail the checksum."""


class ConfigMismatchError(ValueError):
    """A barcode was compared against an archive built with other settings."""


@dataclass(frozen=True)
class ArchiveEntry:
    id: str
    bits: np.ndarray
    irma_code: str | None = None


@dataclass(frozen=True)
class Hit:
    id: str
    similarity: float
    irma_code: str | None = None


@dataclass
class RetrievalResult:
    query_id: str | None
    hits: list

    def to_dict(self):
        return {
            "query_id": self.query_id,
            "hits": [
                {"id": h.id, "similarity": h.similarity, "irma_code": h.irma_code}
                for h in self.hits
            ],
        }


def same_config(a, b):
    return a.method == b.method and a.header_fields() == b.header_fields()


@dataclass
class BarcodeArchive:
    """Ordered, id-unique collection of barcodes sharing one configuration."""

    config: CodeConfig
    n_bits: int = None
    entries: list = field(default_factory=list)

    def __post_init__(self):
        if self.n_bits is None:
            self.n_bits = code_length(self.config)
        self._ids = set()
        self._matrix = None
        entries, self.entries = list(self.entries), []
        for e in entries:
            self._append(e)

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, BarcodeArchive):
            return NotImplemented
        return (
            same_config(self.config, other.config)
            and self.n_bits == other.n_bits
            and len(self) == len(other)
            and all(
                a.id == b.id and a.irma_code == b.irma_code and np.array_equal(a.bits, b.bits)
                for a, b in zip(self.entries, other.entries)
            )
        )

    def _append(self, entry):
        if entry.id in self._ids:
            raise ValueError(f"duplicate archive id {entry.id!r}")
        if entry.bits.shape != ((self.n_bits + 7) // 8,):
            raise ValueError(f"entry {entry.id!r} does not hold {self.n_bits} packed bits")
        self._ids.add(entry.id)
        self.entries.append(entry)
        self._matrix = None

    def add(self, id, barcode, irma_code=None):
        if not isinstance(barcode, Barcode):
            raise TypeError("expected a Barcode")
        if not same_config(barcode.config, self.config) or barcode.n_bits != self.n_bits:
            raise ConfigMismatchError(
                f"barcode {barcode.config.label()} does not match archive {self.config.label()}"
            )
        self._append(ArchiveEntry(str(id), np.asarray(barcode.bits, dtype=np.uint8), irma_code))

    @property
    def ids(self):
        return [e.id for e in self.entries]

    def barcode(self, id):
        for e in self.entries:
            if e.id == id:
                return Barcode(self.config, self.n_bits, e.bits)
        raise KeyError(id)

    def packed_matrix(self):
        if self._matrix is None:
            nbytes = (self.n_bits + 7) // 8
            if self.entries:
                self._matrix = np.stack([e.bits for e in self.entries]).astype(np.uint8)
            else:
                self._matrix = np.zeros((0, nbytes), dtype=np.uint8)
            ids = np.array(self.ids, dtype=object)
            self._id_rank = np.empty(len(ids), dtype=np.int64)
            self._id_rank[np.argsort(ids, kind="stable")] = np.arange(len(ids))
        return self._matrix


def _as_bits(x):
    if isinstance(x, Barcode):
        return x.unpack()
    return np.asarray(x, dtype=bool).ravel()


def hamming_similarity(a, b):
    """``1 - popcount(a XOR b) / n_bits`` for barcodes or bit vectors."""
    if isinstance(a, Barcode) and isinstance(b, Barcode):
        if a.n_bits != b.n_bits:
            raise ValueError(f"length mismatch: {a.n_bits} vs {b.n_bits}")
        if a.n_bits == 0:
            raise ValueError("empty barcodes")
        diff = int(np.bitwise_count(np.bitwise_xor(a.bits, b.bits)).sum())
        return 1.0 - diff / a.n_bits
    a, b = _as_bits(a), _as_bits(b)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty bit vectors")
    return 1.0 - int(np.count_nonzero(a != b)) / a.size


def hamming_distances(query_packed, matrix):
    """Bit distances from one packed code to every row of a packed matrix."""
    return np.bitwise_count(np.bitwise_xor(matrix, query_packed)).sum(axis=1, dtype=np.int64)


def search(query, archive, k=1, exclude_id=None):
    """Exhaustive top-``k`` retrieval, most similar first, ties by ascending id.

    ``exclude_id`` drops the entry with that id, for leave-one-out queries.
    """
    if not same_config(query.config, archive.config) or query.n_bits != archive.n_bits:
        raise ConfigMismatchError(
            f"query {query.config.label()} does not match archive {archive.config.label()}"
        )
    if len(archive) == 0:
        raise ValueError("cannot search an empty archive")
    if k < 0:
        raise ValueError("k must be non-negative")
    matrix = archive.packed_matrix()
    dist = hamming_distances(np.asarray(query.bits, dtype=np.uint8), matrix)
    n = len(archive)
    key = dist * n + archive._id_rank
    if exclude_id is not None:
        key[[i for i, e in enumerate(archive.entries) if e.id == exclude_id]] = np.iinfo(np.int64).max
        n_valid = n - int(exclude_id in archive._ids)
    else:
        n_valid = n
    k = min(k, n_valid)
    if k == 0:
        return RetrievalResult(None, [])
    top = np.argpartition(key, k - 1)[:k] if k < n else np.arange(n)
    top = top[np.argsort(key[top], kind="stable")][:k]
    hits = [
        Hit(archive.entries[i].id, 1.0 - int(dist[i]) / archive.n_bits, archive.entries[i].irma_code)
        for i in top
    ]
    return RetrievalResult(None, hits)


def archive_to_bytes(archive):
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, METHODS.index(archive.config.method),
        *archive.config.header_fields(), archive.n_bits, len(archive),
    )
    parts = [header]
    for e in archive.entries:
        ident = e.id.encode("utf-8")
        code = (e.irma_code or "").encode("ascii")
        if len(ident) > 0xFFFF or len(code) > 0xFF:
            raise ValueError(f"entry {e.id!r}: id or IRMA code too long")
        parts.append(struct.pack("<H", len(ident)) + ident)
        parts.append(struct.pack("<B", len(code)) + code)
        parts.append(np.asarray(e.bits, dtype=np.uint8).tobytes())
    payload = b"".join(parts)
    return payload + _CRC.pack(zlib.crc32(payload))


def archive_from_bytes(data):
    data = bytes(data)
    if len(data) < _HEADER.size + _CRC.size:
        raise ArchiveFormatError("truncated archive header")
    magic, version, method, *rest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ArchiveFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ArchiveFormatError(f"unsupported archive version {version}")
    payload, (crc,) = data[:-_CRC.size], _CRC.unpack(data[-_CRC.size:])
    if zlib.crc32(payload) != crc:
        raise ArchiveFormatError("checksum mismatch")
    if method >= len(METHODS):
        raise ArchiveFormatError(f"unknown method tag {method}")
    fields, n_bits, count = rest[:9], rest[9], rest[10]
    config = CodeConfig(METHODS[method], *fields)
    nbytes = (n_bits + 7) // 8

    pos = _HEADER.size
    end = len(payload)

    def take(n):
        nonlocal pos
        if pos + n > end:
            raise ArchiveFormatError("truncated archive entry")
        chunk = payload[pos:pos + n]
        pos += n
        return chunk

    entries = []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", take(2))
        try:
            ident = take(id_len).decode("utf-8")
            (code_len,) = struct.unpack("<B", take(1))
            code = take(code_len).decode("ascii") or None
        except UnicodeDecodeError as exc:
            raise ArchiveFormatError(f"undecodable entry text: {exc}") from exc
        bits = np.frombuffer(take(nbytes), dtype=np.uint8).copy()
        if n_bits % 8 and bits[-1] >> (n_bits % 8):
            raise ArchiveFormatError(f"entry {ident!r}: non-zero padding bits")
        bits.setflags(write=False)
        entries.append(ArchiveEntry(ident, bits, code))
    if pos != end:
        raise ArchiveFormatError("trailing bytes after last entry")
    try:
        return BarcodeArchive(config, n_bits, entries)
    except ValueError as exc:
        raise ArchiveFormatError(str(exc)) from exc


def save_archive(archive, path):
    Path(path).write_bytes(archive_to_bytes(archive))


def load_archive(path):
    return archive_from_bytes(Path(path).read_bytes())
