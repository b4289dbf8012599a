"""IRMA codes, the hierarchical retrieval error and the suitability score.

An IRMA code ``TTTT-DDD-AAA-BBB`` has four independent axes. For one axis with
truth ``l_1..l_I`` and prediction ``p_1..p_I``::

    raw   = sum_i delta_i / (b_i * i)
    error = 0.25 * raw / sum_i 1 / (b_i * i)

where ``b_i`` is the number of labels seen below the truth prefix
``l_1..l_{i-1}`` and ``delta_i`` is 0 (agree), 0.5 (wildcard) or 1 (wrong).
The first wildcard or disagreement fixes ``delta`` for every later position.
A wildcard in the truth ends the axis: that position and all later ones are
neither scored nor counted in the maximum.
"""
import json
import logging
import re
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .barcode import Barcode
from .index import search

log = logging.getLogger(__name__)

AXES = ("T", "D", "A", "B")
AXIS_LENGTHS = (4, 3, 3, 3)
WILDCARD = "*"
_POSITION = re.compile(r"^[0-9a-z*]+$")


class IrmaCodeError(ValueError):
    pass


@dataclass(frozen=True)
class IrmaCode:
    axes: tuple

    def __str__(self):
        return "-".join(self.axes)

    @property
    def has_wildcard(self):
        return any(WILDCARD in a for a in self.axes)


def parse_irma(text):
    """Parse ``"TTTT-DDD-AAA-BBB"`` (case-insensitive, ``*`` allowed)."""
    parts = str(text).strip().lower().split("-")
    if len(parts) != 4:
        raise IrmaCodeError(f"expected 4 axes in IRMA code {text!r}")
    for name, part, n in zip(AXES, parts, AXIS_LENGTHS):
        if len(part) != n:
            raise IrmaCodeError(f"axis {name} of {text!r} has length {len(part)}, expected {n}")
        if not _POSITION.match(part):
            raise IrmaCodeError(f"illegal character in axis {name} of {text!r}")
    return IrmaCode(tuple(parts))


def _as_code(code):
    return code if isinstance(code, IrmaCode) else parse_irma(code)


class HierarchyStats:
    """Branching factors ``b`` per axis and code prefix."""

    def __init__(self, branches=None):
        self.branches = [dict(b) for b in (branches or [{} for _ in AXES])]
        self._warned = set()

    def __eq__(self, other):
        return isinstance(other, HierarchyStats) and self.branches == other.branches

    def __repr__(self):
        return f"HierarchyStats({[len(b) for b in self.branches]} prefixes)"

    def b(self, axis, prefix):
        b = self.branches[axis].get(prefix)
        if b is None:
            if (axis, prefix) not in self._warned:
                self._warned.add((axis, prefix))
                log.warning("unknown %s-axis prefix %r; using b = 1", AXES[axis], prefix)
            return 1
        return b

    def save(self, path):
        lines = [
            f"{AXES[a]} {prefix or '.'} {b}"
            for a, table in enumerate(self.branches)
            for prefix, b in sorted(table.items())
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_hierarchy(codes):
    """Count distinct next labels below every observed prefix."""
    children = [defaultdict(set) for _ in AXES]
    n = 0
    for code in codes:
        code = _as_code(code)
        if code.has_wildcard:
            raise IrmaCodeError(f"training code {code} contains a wildcard")
        for a, axis in enumerate(code.axes):
            for i, ch in enumerate(axis):
                children[a][axis[:i]].add(ch)
        n += 1
    if n == 0:
        raise ValueError("cannot build a hierarchy from no codes")
    return HierarchyStats([{p: len(s) for p, s in c.items()} for c in children])


def load_hierarchy(path):
    """Read ``<axis> <prefix> <b>`` lines; prefix ``.`` is the axis root."""
    branches = [{} for _ in AXES]
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            axis, prefix, b = line.split()
            a, b = AXES.index(axis.upper()), int(b)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed hierarchy line {line!r}") from exc
        if b < 1:
            raise ValueError(f"{path}:{lineno}: branch count must be >= 1")
        branches[a]["" if prefix == "." else prefix.lower()] = b
    return HierarchyStats(branches)


def axis_error(truth, pred, stats, axis=0):
    """Normalized error of one axis, in [0, 0.25]."""
    if len(truth) != len(pred):
        raise IrmaCodeError(f"axis lengths differ: {truth!r} vs {pred!r}")
    raw = raw_max = 0.0
    delta = 0.0
    for i, (t, p) in enumerate(zip(truth, pred)):
        if t == WILDCARD:
            break
        w = 1.0 / (stats.b(axis, truth[:i]) * (i + 1))
        if delta == 0.0:
            if p == WILDCARD:
                delta = 0.5
            elif p != t:
                delta = 1.0
        raw += w * delta
        raw_max += w
    if raw_max == 0.0:
        return 0.0
    return 0.25 * raw / raw_max


def total_error(truth, pred, stats):
    """Sum of the four axis errors, in [0, 1]."""
    truth, pred = _as_code(truth), _as_code(pred)
    return sum(axis_error(t, p, stats, a) for a, (t, p) in enumerate(zip(truth.axes, pred.axes)))


def suitability(rows):
    """``max(E) * max(L) / (E_k * L_k)`` for each ``(E_total, L_code)`` row."""
    rows = [(float(e), float(n)) for e, n in rows]
    if not rows:
        raise ValueError("no rows to score")
    if any(e <= 0 or n <= 0 for e, n in rows):
        raise ValueError("E_total and L_code must be positive")
    e_max = max(e for e, _ in rows)
    l_max = max(n for _, n in rows)
    return [e_max * l_max / (e * n) for e, n in rows]


class MissingLabelError(ValueError):
    pass


@dataclass
class EvaluationReport:
    label: str
    n_bits: int
    query_ids: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    top_k_errors: dict = field(default_factory=dict)
    mean_time: float = 0.0
    eta: float | None = None

    @property
    def n_queries(self):
        return len(self.errors)

    @property
    def e_total(self):
        return sum(self.errors)

    @property
    def accuracy(self):
        return 1.0 - self.e_total / self.n_queries if self.n_queries else float("nan")

    def to_dict(self):
        d = asdict(self)
        d.update(e_total=self.e_total, accuracy=self.accuracy, n_queries=self.n_queries)
        return d


def evaluate(archive, queries, stats, encoder=None, top_k=(3, 5), label=None):
    """First-hit retrieval error of ``queries`` against ``archive``.

    ``queries`` yields ``(query_id, item, truth)`` where ``item`` is a
    :class:`~rgbarcode.barcode.Barcode` or an image for ``encoder.encode``.
    An archive entry whose id equals the query id is never retrieved.
    ``top_k`` adds best-of-k error totals as extra columns.
    """
    report = EvaluationReport(label or archive.config.label(), archive.n_bits)
    best_of = {k: 0.0 for k in top_k}
    elapsed = 0.0
    depth = max([1, *top_k])
    for qid, item, truth in queries:
        truth = _as_code(truth)
        t0 = time.perf_counter()
        query = item if isinstance(item, Barcode) else encoder.encode(item)
        result = search(query, archive, k=depth, exclude_id=qid)
        elapsed += time.perf_counter() - t0
        if not result.hits:
            raise ValueError("archive has no candidate for query %r" % qid)
        errs = []
        for hit in result.hits:
            if hit.irma_code is None:
                raise MissingLabelError(f"archive entry {hit.id!r} has no IRMA code")
            errs.append(total_error(truth, hit.irma_code, stats))
        report.query_ids.append(qid)
        report.errors.append(errs[0])
        for k in top_k:
            best_of[k] += min(errs[:k])
    report.top_k_errors = {f"top{k}": v for k, v in best_of.items()}
    report.mean_time = elapsed / report.n_queries if report.n_queries else 0.0
    return report


def attach_suitability(reports):
    """Fill ``eta`` on each report from the group's E_total and code length."""
    etas = suitability([(r.e_total, r.n_bits) for r in reports])
    for r, eta in zip(reports, etas):
        r.eta = eta
    return reports


def format_table(reports):
    """Aligned text table with the columns Barcode, E_total, L_code, Time, eta."""
    header = ("Barcode", "E_total", "L_code", "Time", "eta")
    body = [
        (
            r.label,
            f"{r.e_total:.2f}",
            str(r.n_bits),
            f"{r.mean_time:.3f}",
            "" if r.eta is None else f"{r.eta:.2f}",
        )
        for r in reports
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header, *body]]
    return "\n".join(lines) + "\n"


def reports_to_json(reports):
    return json.dumps({"reports": [r.to_dict() for r in reports]}, indent=2)


def read_manifest(path):
    """Parse an ``<image path> [IRMA code]`` manifest.

    Columns are tab-separated, or whitespace-separated when no tab is
    present. Blank lines and ``#`` comments are skipped; relative paths are
    resolved against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t") if "\t" in line else line.split()
        cols = [c.strip() for c in cols if c.strip()]
        if len(cols) > 2:
            raise ValueError(f"{path}:{lineno}: expected at most two columns")
        image = Path(cols[0])
        if not image.is_absolute():
            image = base / image
        code = str(parse_irma(cols[1])) if len(cols) == 2 else None
        records.append((image, code))
    return records
