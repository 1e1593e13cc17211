"""Convolutional network for view classification and feature extraction.

Five blocks of two 3x3 convolutions followed by one 2x2 max pool, then
three fully connected layers. With the default 256x256x3 input and
channel widths 16/32/64/128/128 the feature map entering the FC stage is
8x8x128, and the two hidden FC layers (fc6, fc7) are 1024 wide. Those
two activations, L2-normalized, are the image descriptors the retrieval
side consumes.
"""

from dataclasses import dataclass

import torch
from torch import nn

from .errors import ShapeAssemblyError

# two convolutions per block; pooling halves the spatial side
CONVS_PER_BLOCK = 2
POOL_FACTOR = 2


@dataclass(frozen=True)
class NetworkSpec:
    input_side: int = 256
    block_channels: tuple = (16, 32, 64, 128, 128)
    fc_widths: tuple = (1024, 1024)
    num_classes: int = 45

    def __post_init__(self):
        if self.input_side < 1:
            raise ShapeAssemblyError(f"input side {self.input_side} must be positive", 0)
        if not self.block_channels:
            raise ShapeAssemblyError("at least one convolution block required", 0)
        layer = 0
        for width in self.block_channels:
            layer += CONVS_PER_BLOCK
            if width < 1:
                raise ShapeAssemblyError(f"channel width {width} must be positive", layer - 1)
        side = self.input_side
        layer = 0
        for i, _ in enumerate(self.block_channels):
            layer += CONVS_PER_BLOCK + 1
            if side % POOL_FACTOR != 0:
                raise ShapeAssemblyError(
                    f"spatial side {side} entering pool {i} is not divisible by {POOL_FACTOR}",
                    layer - 1,
                )
            side //= POOL_FACTOR
        for j, width in enumerate(self.fc_widths):
            if width < 1:
                raise ShapeAssemblyError(f"fc width {width} must be positive", layer + j)
        if self.num_classes < 1:
            raise ShapeAssemblyError(
                f"num_classes {self.num_classes} must be positive", layer + len(self.fc_widths)
            )

    @property
    def final_side(self) -> int:
        return self.input_side // POOL_FACTOR ** len(self.block_channels)

    @property
    def flat_features(self) -> int:
        return self.final_side * self.final_side * self.block_channels[-1]


class ConvNet(nn.Module):
    """The network plus named access to its fc6/fc7 activations."""

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        blocks = []
        in_channels = 3
        for width in spec.block_channels:
            blocks += [
                nn.Conv2d(in_channels, width, kernel_size=3, padding=1),
                nn.ReLU(inplace=True),
                nn.Conv2d(width, width, kernel_size=3, padding=1),
                nn.ReLU(inplace=True),
                nn.MaxPool2d(kernel_size=POOL_FACTOR, stride=POOL_FACTOR),
            ]
            in_channels = width
        self.features = nn.Sequential(*blocks)
        self.fc6 = nn.Linear(spec.flat_features, spec.fc_widths[0])
        self.fc7 = nn.Linear(spec.fc_widths[0], spec.fc_widths[1])
        self.fc8 = nn.Linear(spec.fc_widths[1], spec.num_classes)
        self.relu = nn.ReLU(inplace=True)

    def convolutional_features(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        hidden = self.activations(x, "fc7")
        return self.fc8(hidden)

    def activations(self, x: torch.Tensor, layer: str) -> torch.Tensor:
        """Post-ReLU output of fc6 or fc7 for a batch of images."""
        if layer not in ("fc6", "fc7"):
            raise ValueError(f"unknown layer {layer!r}, expected 'fc6' or 'fc7'")
        flat = torch.flatten(self.features(x), start_dim=1)
        hidden = self.relu(self.fc6(flat))
        if layer == "fc6":
            return hidden
        return self.relu(self.fc7(hidden))


def build_network(spec: NetworkSpec = NetworkSpec()) -> ConvNet:
    return ConvNet(spec)


def layer_census(model: nn.Module) -> dict:
    """Count convolutional, pooling, and fully connected layers."""
    counts = {"conv": 0, "pool": 0, "fc": 0}
    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            counts["conv"] += 1
        elif isinstance(module, nn.MaxPool2d):
            counts["pool"] += 1
        elif isinstance(module, nn.Linear):
            counts["fc"] += 1
    return counts
