"""Radon/Gabor binary image barcodes with Hamming retrieval and IRMA evaluation."""
from .barcode import (
    Barcode,
    CodeConfig,
    binarize_median,
    code_length,
    gribc_config,
    gribc_encode,
    grgbc_config,
    grgbc_encode,
    rbc_config,
    rbc_encode,
    render_barcode,
)
from .estimators import GRGBCEncoder, GRIBCEncoder, HammingRetriever, RBCEncoder
from .gabor import GaborBankConfig, build_bank, downsample, filter_magnitude
from .index import (
    ArchiveFormatError,
    BarcodeArchive,
    ConfigMismatchError,
    hamming_similarity,
    load_archive,
    save_archive,
    search,
)
from .irma import (
    EvaluationReport,
    HierarchyStats,
    IrmaCode,
    axis_error,
    build_hierarchy,
    evaluate,
    parse_irma,
    suitability,
    total_error,
)
from .radon import Sinogram, projection_bin_count, radon_transform
from .raster import load_image, normalize

__version__ = "0.1.0"
