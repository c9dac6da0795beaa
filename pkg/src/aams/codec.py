"""VGG-19 encoder (through relu4_1) and the mirrored decoder."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .tensor_core import as_tensor, avg_pool2d, conv2d, upsample_nearest
from .transforms import adain
from .weights import DECODER_LAYERS, ENCODER_LAYERS, FEATURE_CHANNELS

TAP_LAYERS = ("relu1_1", "relu2_1", "relu3_1", "relu4_1")

# decoder layer -> encoder tap whose statistics are imposed on its input
SKIP_CONNECTIONS = {"inv_conv3_2": "relu3_1", "inv_conv2_2": "relu2_1", "inv_conv1_2": "relu1_1"}


@dataclass(frozen=True)
class EncoderTaps:
    relu1_1: np.ndarray
    relu2_1: np.ndarray
    relu3_1: np.ndarray
    relu4_1: np.ndarray

    def __iter__(self):
        return iter((self.relu1_1, self.relu2_1, self.relu3_1, self.relu4_1))


def _conv(x, bundle, name):
    return conv2d(
        x,
        bundle[f"{name}.weight"],
        bundle[f"{name}.bias"],
        stride=1,
        padding="reflection-same",
        activation="relu",
    )


def encode(image, bundle):
    """Run the encoder on a (3, H, W) image in [0, 1]; H and W divisible by 8."""
    image = as_tensor(image, "image")
    c, h, w = image.shape
    if c != 3:
        raise DimensionError(f"image must have 3 channels, got {c}")
    if h % 8 or w % 8:
        raise DimensionError(f"image dims {h}x{w} must be divisible by 8")
    if image.min() < 0 or image.max() > 1:
        raise ValidationError("image values must lie in [0, 1]")
    taps = {}
    x = image
    for layer in ENCODER_LAYERS:
        if layer == "pool":
            x = avg_pool2d(x)
            continue
        name = layer[0]
        x = _conv(x, bundle, name)
        if name.endswith("_1"):
            taps["relu" + name[4:]] = x
    return EncoderTaps(**taps)


def _run_decoder(feature, bundle, style_taps=None, capture=None):
    feature = as_tensor(feature, "feature")
    if feature.shape[0] != FEATURE_CHANNELS:
        raise DimensionError(f"decoder expects {FEATURE_CHANNELS} channels, got {feature.shape[0]}")
    x = feature
    for layer in DECODER_LAYERS:
        if layer == "up":
            x = upsample_nearest(x)
            continue
        name = layer[0]
        tap = SKIP_CONNECTIONS.get(name)
        if tap is not None:
            if capture is not None:
                capture[tap] = x
            if style_taps is not None:
                x = adain(x, getattr(style_taps, tap))
        x = _conv(x, bundle, name)
    return np.clip(x, 0.0, 1.0)


def decode(feature, bundle, style_taps=None):
    """Decode a 512-channel bottleneck feature into a (3, 8h, 8w) image in [0, 1].

    With ``style_taps``, the features entering inv_conv3_2, inv_conv2_2 and
    inv_conv1_2 are first renormalized (AdaIN) to the statistics of the
    style's relu3_1, relu2_1 and relu1_1 taps.  Only channel counts must
    agree; the style image may have a different size.
    """
    if style_taps is not None:
        for tap, expected in (("relu1_1", 64), ("relu2_1", 128), ("relu3_1", 256)):
            got = np.asarray(getattr(style_taps, tap)).shape[0]
            if got != expected:
                raise DimensionError(f"style tap {tap} has {got} channels, expected {expected}")
    return _run_decoder(feature, bundle, style_taps)


def decoder_skip_inputs(feature, bundle):
    """Features arriving at the three skip-connection points on the plain path."""
    captured = {}
    _run_decoder(feature, bundle, capture=captured)
    return captured
