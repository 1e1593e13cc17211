"""Image manifests, preprocessing, and training-time augmentation.

The manifest is the same JSON shape the retrieval side uses, with image
paths as views:

    {"objects": [{"id": ..., "category": ..., "views": [path, ...]}, ...]}

A top-level "dim" key is tolerated and ignored on input (the retrieval
side requires it; image manifests have no meaningful dimension until
extraction). View paths are resolved relative to the manifest file.

Preprocessing resizes the longest side to the target and pads the rest
with mid-gray so content is never stretched; training augmentation adds
a random Gaussian blur and horizontal flips.
"""

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch
from PIL import Image, ImageFilter, ImageOps

from .errors import ManifestError, UnreadableImageError

PAD_COLOR = (128, 128, 128)
BLUR_SIGMA_MAX = 2.0
FLIP_PROBABILITY = 0.5


@dataclass(frozen=True)
class ObjectImages:
    object_id: str
    category: str
    views: tuple


def load_manifest(path) -> list:
    """Load and validate an image manifest into ObjectImages entries."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text("utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest {path} does not exist") from None
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest {path} is not valid JSON: {e}") from None
    if not isinstance(raw, dict) or not isinstance(raw.get("objects"), list):
        raise ManifestError(f"manifest {path} must be an object with an 'objects' list")
    base = path.parent
    entries = []
    seen = set()
    for i, obj in enumerate(raw["objects"]):
        try:
            object_id, category, views = obj["id"], obj["category"], obj["views"]
        except (TypeError, KeyError) as e:
            raise ManifestError(f"object #{i} is missing field {e}") from None
        if object_id in seen:
            raise ManifestError(f"duplicate object id {object_id!r}")
        seen.add(object_id)
        if not views:
            raise ManifestError(f"object {object_id!r} has no views")
        entries.append(
            ObjectImages(object_id, category, tuple(str(base / v) for v in views))
        )
    if not entries:
        raise ManifestError(f"manifest {path} contains no objects")
    return entries


def load_image(path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, ValueError) as e:
        raise UnreadableImageError(f"cannot read image {path}: {e}") from None


def fit_with_padding(image: Image.Image, side: int) -> Image.Image:
    """Scale the longest side to ``side`` and center on a gray canvas."""
    width, height = image.size
    scale = side / max(width, height)
    new_size = (max(1, round(width * scale)), max(1, round(height * scale)))
    resized = image.resize(new_size, Image.Resampling.BILINEAR)
    canvas = Image.new("RGB", (side, side), PAD_COLOR)
    canvas.paste(resized, ((side - new_size[0]) // 2, (side - new_size[1]) // 2))
    return canvas


def to_tensor(image: Image.Image) -> torch.Tensor:
    """HxWx3 uint8 image to 3xHxW float tensor in [0, 1]."""
    raw = torch.frombuffer(bytearray(image.tobytes()), dtype=torch.uint8)
    chw = raw.reshape(image.size[1], image.size[0], 3).permute(2, 0, 1)
    return chw.to(torch.float32) / 255.0


def preprocess(image: Image.Image, side: int) -> torch.Tensor:
    return to_tensor(fit_with_padding(image, side))


def augment(image: Image.Image, rng: random.Random) -> Image.Image:
    """Training-only augmentation; draw order is blur sigma, then flip."""
    sigma = rng.uniform(0.0, BLUR_SIGMA_MAX)
    out = image.filter(ImageFilter.GaussianBlur(radius=sigma))
    if rng.random() < FLIP_PROBABILITY:
        out = ImageOps.mirror(out)
    return out
