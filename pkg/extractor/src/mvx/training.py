"""Training loop: Adam on categorical cross-entropy, with augmentation.

Labels are the sorted distinct categories of the manifest unless an
explicit class list is given; the model's output width must match.
Augmentation (random blur and flip) applies to training batches only;
the per-epoch accuracy in the log is measured on clean images in eval
mode.
"""

import random
from dataclasses import dataclass

import torch
from torch import nn

from .data import augment, load_image, load_manifest, preprocess
from .errors import ShapeAssemblyError, UnknownLabelError
from .network import ConvNet, NetworkSpec, build_network


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    seed: int = 0
    learning_rate: float = 1e-3
    batch_size: int = 8


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def _labeled_images(entries, classes):
    class_index = {name: i for i, name in enumerate(classes)}
    samples = []
    for entry in entries:
        if entry.category not in class_index:
            raise UnknownLabelError(
                f"object {entry.object_id!r} has label {entry.category!r}, "
                f"which is not in the class set {sorted(classes)}"
            )
        for path in entry.views:
            samples.append((path, class_index[entry.category]))
    return samples


def train(model: ConvNet, manifest_path, config: TrainConfig, classes=None):
    """Train in place; returns the per-epoch loss/accuracy log."""
    entries = load_manifest(manifest_path)
    if classes is None:
        classes = sorted({entry.category for entry in entries})
    classes = list(classes)
    if len(classes) != model.spec.num_classes:
        raise ShapeAssemblyError(
            f"model expects {model.spec.num_classes} classes, label set has {len(classes)}",
            layer_index=-1,
        )
    samples = _labeled_images(entries, classes)
    images = [load_image(path) for path, _ in samples]
    labels = torch.tensor([label for _, label in samples], dtype=torch.long)
    side = model.spec.input_side

    log = []
    if config.epochs == 0:
        return log

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    criterion = nn.CrossEntropyLoss()
    clean = torch.stack([preprocess(img, side) for img in images])

    for epoch in range(config.epochs):
        model.train()
        order = list(range(len(images)))
        rng.shuffle(order)
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            chunk = order[start : start + config.batch_size]
            batch = torch.stack([preprocess(augment(images[i], rng), side) for i in chunk])
            optimizer.zero_grad()
            loss = criterion(model(batch), labels[chunk])
            loss.backward()
            optimizer.step()
            total_loss += loss.item() * len(chunk)
        model.eval()
        with torch.no_grad():
            predictions = model(clean).argmax(dim=1)
        accuracy = (predictions == labels).to(torch.float32).mean().item()
        log.append(EpochStats(epoch, total_loss / len(order), accuracy))
    return log


def save_model(model: ConvNet, classes, path) -> None:
    torch.save(
        {
            "spec": {
                "input_side": model.spec.input_side,
                "block_channels": tuple(model.spec.block_channels),
                "fc_widths": tuple(model.spec.fc_widths),
                "num_classes": model.spec.num_classes,
            },
            "classes": list(classes),
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_model(path):
    """Load a saved model; returns (model in eval mode, class list)."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    spec = NetworkSpec(
        input_side=payload["spec"]["input_side"],
        block_channels=tuple(payload["spec"]["block_channels"]),
        fc_widths=tuple(payload["spec"]["fc_widths"]),
        num_classes=payload["spec"]["num_classes"],
    )
    model = build_network(spec)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload["classes"]
