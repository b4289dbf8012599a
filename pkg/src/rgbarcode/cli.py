"""Command-line interface: ``rgbarcode {encode,search,evaluate,render,inspect}``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data or configuration
mismatch.

Settings are resolved as command-line flags, then the ``--config`` file, then
the method defaults. A config file holds ``key = value`` lines whose keys are
the long flag names with dashes or underscores (``n_scales = 8``); ``#``
starts a comment.
"""
import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from PIL import Image

from .barcode import render_barcode
from .estimators import GRGBCEncoder, GRIBCEncoder, RBCEncoder, encoder_for_config
from .index import (
    ArchiveFormatError,
    BarcodeArchive,
    ConfigMismatchError,
    load_archive,
    save_archive,
    search,
)
from .irma import (
    IrmaCodeError,
    MissingLabelError,
    attach_suitability,
    build_hierarchy,
    evaluate,
    format_table,
    load_hierarchy,
    read_manifest,
    reports_to_json,
)
from .radon import radon_transform
from .raster import SUPPORTED_SUFFIXES, ImageLoadError, load_image, normalize

log = logging.getLogger("rgbarcode")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3
THREADS_ENV = "RGBC_THREADS"

ENCODER_CLASSES = {"RBC": RBCEncoder, "GRIBC": GRIBCEncoder, "GRGBC": GRGBCEncoder}

# option name -> type, for both flags and config-file keys
RUN_OPTIONS = {
    "method": str,
    "n_scales": int,
    "n_orientations": int,
    "win_rows": int,
    "win_cols": int,
    "f_max": float,
    "gamma": float,
    "eta": float,
    "phi": float,
    "image_side": int,
    "n_angles": int,
    "radon_side": int,
    "d1": int,
    "d2": int,
    "bins_per_angle": int,
    "downsample_mode": str,
    "conv_method": str,
}
BANK_OPTIONS = ("f_max", "gamma", "eta", "phi", "downsample_mode")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config_file(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in RUN_OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = RUN_OPTIONS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def resolve_settings(args):
    """Merge flags over config-file values; unset keys fall back to method defaults."""
    settings = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in RUN_OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if "method" in settings:
        settings["method"] = settings["method"].upper()
    return settings


def build_encoder(settings, threads):
    method = settings.get("method", "GRGBC")
    if method not in ENCODER_CLASSES:
        raise UsageError(f"unknown method {method!r}")
    cls = ENCODER_CLASSES[method]
    accepted = cls().get_params()
    params = {k: v for k, v in settings.items() if k in accepted}
    if method == "RBC" and "n_angles" not in params:
        params["n_angles"] = 4
    params["n_jobs"] = threads
    try:
        return cls(**params).fit()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def encoder_from_archive(archive, settings, threads):
    runtime = {k: settings[k] for k in BANK_OPTIONS if k in settings}
    config = archive.config
    if runtime:
        config = replace(config, **runtime)
    extra = {"n_jobs": threads}
    if config.method != "RBC" and "conv_method" in settings:
        extra["conv_method"] = settings["conv_method"]
    return encoder_for_config(config, **extra).fit()


def thread_count(args):
    if args.threads is not None:
        n = args.threads
    else:
        try:
            n = int(os.environ.get(THREADS_ENV, "1"))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer")
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def collect_inputs(path):
    """``[(id, image path, irma code or None)]`` from a manifest file or a directory."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.rglob("*") if p.suffix.lower() in SUPPORTED_SUFFIXES)
        return [(p.relative_to(path).as_posix(), p, None) for p in files]
    records = read_manifest(path)
    base = path.parent
    out = []
    for image, code in records:
        try:
            ident = image.relative_to(base).as_posix()
        except ValueError:
            ident = image.as_posix()
        out.append((ident, image, code))
    return out


def _encode_one(encoder, path):
    t0 = time.perf_counter()
    try:
        code = encoder.encode(load_image(path))
    except (ImageLoadError, OSError, ValueError) as exc:
        return None, str(exc), time.perf_counter() - t0
    return code, None, time.perf_counter() - t0


def encode_paths(encoder, paths, threads):
    if threads > 1 and len(paths) > 1:
        return Parallel(n_jobs=threads)(delayed(_encode_one)(encoder, p) for p in paths)
    return [_encode_one(encoder, p) for p in paths]


def cmd_encode(args):
    settings = resolve_settings(args)
    threads = thread_count(args)
    encoder = build_encoder(settings, threads)
    inputs = collect_inputs(args.input)
    if not inputs:
        log.error("no input images in %s", args.input)
        return EXIT_DATA
    archive = BarcodeArchive(encoder.config_)
    skipped = []
    results = encode_paths(encoder, [p for _, p, _ in inputs], threads)
    for i, ((ident, path, irma), (code, err, dt)) in enumerate(zip(inputs, results), 1):
        if code is None:
            log.warning("skipping %s: %s", path, err)
            skipped.append(f"{path}\t{err}")
            continue
        archive.add(ident, code, irma)
        print(f"[{i}/{len(inputs)}] {ident} {dt:.3f}s", file=sys.stderr)
    if skipped:
        Path(str(args.output) + ".skipped.txt").write_text("\n".join(skipped) + "\n", encoding="utf-8")
    if not len(archive):
        log.error("every input image failed to encode")
        return EXIT_IO
    save_archive(archive, args.output)
    print(f"wrote {len(archive)} x {archive.n_bits} bits to {args.output}", file=sys.stderr)
    return EXIT_OK


def _check_method(settings, archive):
    method = settings.get("method")
    if method and method != archive.config.method:
        raise ConfigMismatchError(f"--method {method} but archive holds {archive.config.method} codes")


def cmd_search(args):
    settings = resolve_settings(args)
    archive = load_archive(args.archive)
    _check_method(settings, archive)
    encoder = encoder_from_archive(archive, settings, 1)
    query = encoder.encode(load_image(args.query))
    result = search(query, archive, k=args.k, exclude_id=args.exclude_id)
    result.query_id = str(args.query)
    if args.format == "json":
        print(json.dumps(result.to_dict(), indent=2))
    else:
        for rank, hit in enumerate(result.hits, 1):
            print(f"{rank:>4}  {hit.similarity:.6f}  {hit.irma_code or '-':<16}  {hit.id}")
    return EXIT_OK


def cmd_evaluate(args):
    settings = resolve_settings(args)
    threads = thread_count(args)
    queries = collect_inputs(args.manifest)
    if not queries:
        log.error("empty test manifest %s", args.manifest)
        return EXIT_DATA
    if any(code is None for _, _, code in queries):
        log.error("every test manifest line needs an IRMA code")
        return EXIT_DATA
    archives = [load_archive(p) for p in args.archive]
    for archive in archives:
        _check_method(settings, archive)
    if args.hierarchy:
        stats = load_hierarchy(args.hierarchy)
    else:
        codes = [e.irma_code for a in archives[:1] for e in a.entries if e.irma_code]
        stats = build_hierarchy(codes)
    reports = []
    for archive in archives:
        encoder = encoder_from_archive(archive, settings, threads)
        results = encode_paths(encoder, [p for _, p, _ in queries], threads)
        items = []
        for (ident, path, code), (bc, err, _) in zip(queries, results):
            if bc is None:
                raise ImageLoadError(f"cannot encode test image {path}: {err}")
            items.append((ident, bc, code))
        report = evaluate(archive, items, stats, top_k=tuple(args.top_k))
        report.mean_time += sum(r[2] for r in results) / len(results)
        reports.append(report)
    if len(reports) > 1:
        attach_suitability(reports)
    if args.output:
        out = Path(args.output)
        out.with_suffix(".json").write_text(reports_to_json(reports) + "\n", encoding="utf-8")
        out.with_suffix(".txt").write_text(format_table(reports), encoding="utf-8")
    sys.stdout.write(reports_to_json(reports) + "\n" if args.format == "json" else format_table(reports))
    return EXIT_OK


def cmd_render(args):
    settings = resolve_settings(args)
    if args.archive:
        if not args.id:
            raise UsageError("--id is required with --archive")
        archive = load_archive(args.archive)
        try:
            code = archive.barcode(args.id)
        except KeyError:
            raise ConfigMismatchError(f"no entry {args.id!r} in {args.archive}")
        render_barcode(code, args.output, row_height=args.row_height)
    elif args.image:
        img = load_image(args.image)
        if args.sinogram:
            side = settings.get("image_side", 128)
            sino = radon_transform(normalize(img, side, side), range(180)).values
            peak = sino.max()
            scaled = sino / peak if peak > 0 else sino
            Image.fromarray(np.round(scaled * 255).astype(np.uint8)).save(args.output, format="PNG")
        else:
            encoder = build_encoder(settings, 1)
            render_barcode(encoder.encode(img), args.output, row_height=args.row_height)
    else:
        raise UsageError("render needs --archive/--id or --image")
    print(f"wrote {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_inspect(args):
    archive = load_archive(args.archive)
    cfg = archive.config
    names = ("n_scales", "n_orientations", "win_rows", "win_cols", "image_side",
             "n_angles", "d1", "d2", "bins_per_angle")
    info = {
        "method": cfg.method,
        "label": cfg.label(),
        "config": dict(zip(names, cfg.header_fields())),
        "n_bits": archive.n_bits,
        "n_entries": len(archive),
        "entries": [{"id": e.id, "irma_code": e.irma_code} for e in archive.entries[: args.limit]],
    }
    if args.format == "json":
        print(json.dumps(info, indent=2))
    else:
        print(f"{info['label']}  n_bits={archive.n_bits}  entries={len(archive)}")
        for k, v in info["config"].items():
            print(f"  {k:<15} {v}")
        for e in info["entries"]:
            print(f"  {e['id']}  {e['irma_code'] or '-'}")
    return EXIT_OK


def _add_run_options(p):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--method", type=str.upper, choices=sorted(ENCODER_CLASSES))
    g = p.add_argument_group("barcode parameters")
    for key, typ in RUN_OPTIONS.items():
        if key == "method":
            continue
        g.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)


def make_parser():
    parser = _Parser(prog="rgbarcode", description="Radon/Gabor image barcodes and Hamming retrieval.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode images into a barcode archive")
    p.add_argument("input", help="manifest file (path [IRMA code]) or image directory")
    p.add_argument("-o", "--output", required=True, help="archive file to write")
    p.add_argument("--threads", type=int)
    _add_run_options(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("search", help="find the archive entries closest to an image")
    p.add_argument("--archive", required=True)
    p.add_argument("query", help="query image")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--exclude-id", help="never return the entry with this id")
    p.add_argument("--format", choices=("json", "table"), default="json")
    _add_run_options(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="IRMA first-hit error of a test manifest")
    p.add_argument("--archive", required=True, action="append", help="repeat to compare methods")
    p.add_argument("--manifest", required=True, help="test manifest with IRMA codes")
    p.add_argument("--hierarchy", help="prefix branching table; default: count training codes")
    p.add_argument("-o", "--output", help="write <output>.json and <output>.txt")
    p.add_argument("--top-k", type=int, nargs="*", default=[3, 5])
    p.add_argument("--threads", type=int)
    p.add_argument("--format", choices=("json", "table"), default="table")
    _add_run_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="write a barcode or sinogram as a PNG")
    p.add_argument("--archive")
    p.add_argument("--id")
    p.add_argument("--image")
    p.add_argument("--sinogram", action="store_true", help="render the image's sinogram instead")
    p.add_argument("--row-height", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    _add_run_options(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("inspect", help="show an archive header and entries")
    p.add_argument("archive")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rgbarcode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigMismatchError, ArchiveFormatError, IrmaCodeError, MissingLabelError) as exc:
        print(f"rgbarcode: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"rgbarcode: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"rgbarcode: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
