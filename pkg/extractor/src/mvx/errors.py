"""Exception types shared across the package."""


class MvxError(Exception):
    """Base class for all errors raised by this package."""


class ShapeAssemblyError(MvxError):
    """Network layers cannot be assembled into consistent shapes.

    ``layer_index`` is the position of the offending layer in forward
    order (convolutions and pools counted together).
    """

    def __init__(self, message: str, layer_index: int):
        super().__init__(f"{message} (layer {layer_index})")
        self.layer_index = layer_index


class ManifestError(MvxError):
    """An image manifest is malformed."""


class UnknownLabelError(MvxError):
    """An image carries a category outside the model's label set."""


class UnreadableImageError(MvxError):
    """An image file could not be opened or decoded."""


class ExtractionFailedError(MvxError):
    """Every image in the manifest failed to extract."""


class FormatError(MvxError):
    """A binary feature file is corrupt or has an unexpected layout."""
