"""ConvNet feature extractor for multi-view object retrieval.

Trains a small VGG-style classifier on labeled object views and exports
L2-normalized fc6/fc7 activations as binary feature files plus a
manifest, the input format of the retrieval engine.
"""

from .data import ObjectImages, augment, fit_with_padding, load_image, load_manifest, preprocess
from .errors import (
    ExtractionFailedError,
    FormatError,
    ManifestError,
    MvxError,
    ShapeAssemblyError,
    UnknownLabelError,
    UnreadableImageError,
)
from .extraction import EXTRACT_LAYERS, Extraction, extract, write_extraction
from .mvf import features_from_bytes, features_to_bytes, write_atomic
from .network import ConvNet, NetworkSpec, build_network, layer_census
from .training import EpochStats, TrainConfig, load_model, save_model, train

__version__ = "0.1.0"

__all__ = [
    "ConvNet",
    "EXTRACT_LAYERS",
    "EpochStats",
    "Extraction",
    "ExtractionFailedError",
    "FormatError",
    "ManifestError",
    "MvxError",
    "NetworkSpec",
    "ObjectImages",
    "ShapeAssemblyError",
    "TrainConfig",
    "UnknownLabelError",
    "UnreadableImageError",
    "augment",
    "build_network",
    "extract",
    "features_from_bytes",
    "features_to_bytes",
    "fit_with_padding",
    "layer_census",
    "load_image",
    "load_manifest",
    "load_model",
    "preprocess",
    "save_model",
    "train",
    "write_atomic",
    "write_extraction",
    "__version__",
]
