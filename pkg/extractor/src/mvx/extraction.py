"""Feature extraction: one unit-norm descriptor per image.

Images run through the model in eval mode; the chosen fully connected
activation (fc6 or fc7) is L2-normalized and written as one feature
record per view, grouped by object in manifest order. Unreadable images
and dead (all-zero) activations are collected as failures and dropped
from the output (objects losing every view are dropped too); extraction
aborts only when no image at all survives. Output files are written
atomically.
"""

import json
import math
from dataclasses import dataclass

import torch

from .data import load_image, load_manifest, preprocess
from .errors import ExtractionFailedError, UnreadableImageError
from .mvf import features_to_bytes, write_atomic
from .network import ConvNet

EXTRACT_LAYERS = ("fc6", "fc7")
_BATCH = 16


@dataclass(frozen=True)
class Extraction:
    dim: int
    records: list            # (object_index, vector) pairs, manifest order
    objects: list            # surviving manifest entries, views filtered
    failures: list           # (path, reason) pairs


def extract(model: ConvNet, manifest_path, layer: str = "fc7") -> Extraction:
    if layer not in EXTRACT_LAYERS:
        raise ValueError(f"unknown layer {layer!r}, expected one of {EXTRACT_LAYERS}")
    entries = load_manifest(manifest_path)
    side = model.spec.input_side

    failures = []
    loaded = []
    for entry in entries:
        for path in entry.views:
            try:
                loaded.append((entry, path, preprocess(load_image(path), side)))
            except UnreadableImageError as e:
                failures.append((path, str(e)))
    if not loaded:
        raise ExtractionFailedError(
            f"all {len(failures)} images failed to extract; first: {failures[0][1]}"
        )

    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(loaded), _BATCH):
            batch = torch.stack([tensor for _, _, tensor in loaded[start : start + _BATCH]])
            outputs.append(model.activations(batch, layer))
    activations = torch.cat(outputs)

    survivors = {}
    for (entry, path, _), raw in zip(loaded, activations):
        vector = raw.tolist()
        norm = math.sqrt(sum(x * x for x in vector))
        if norm == 0.0:
            failures.append((path, f"zero {layer} activation for {path}"))
            continue
        survivors.setdefault(entry, []).append((path, [x / norm for x in vector]))
    if not survivors:
        raise ExtractionFailedError(
            f"all {len(failures)} images failed to extract; first: {failures[0][1]}"
        )

    records = []
    objects = []
    for object_index, (entry, rows) in enumerate(survivors.items()):
        for _, vector in rows:
            records.append((object_index, vector))
        objects.append(
            {
                "id": entry.object_id,
                "category": entry.category,
                "views": [path for path, _ in rows],
            }
        )
    return Extraction(int(activations.shape[1]), records, objects, failures)


def write_extraction(result: Extraction, features_path, manifest_path) -> None:
    """Write the MVF1 payload and its manifest, both atomically."""
    manifest = {"dim": result.dim, "objects": result.objects}
    write_atomic(features_path, features_to_bytes(result.dim, result.records))
    write_atomic(
        manifest_path, (json.dumps(manifest, indent=2) + "\n").encode("utf-8")
    )
