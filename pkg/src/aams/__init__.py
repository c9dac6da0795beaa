"""Attention-aware multi-stroke style transfer, forward pass only."""

from .attention import AttentionParams, attention_energy, attention_feature, attention_output
from .codec import EncoderTaps, decode, encode
from .errors import (
    AamsError,
    ConfigurationError,
    DimensionError,
    FormatError,
    NumericalError,
    ValidationError,
)
from .fusion import attention_filter, fuse, kmeans_1d, stroke_weight_maps
from .metrics import LossWeights, saliency_metrics
from .pipeline import RenderReport, StylizeConfig, reconstruct, stylize, sweep
from .swap import StrokeSet, build_stroke_set, multi_scale_swap, style_swap
from .transforms import adain, color, whiten
from .weights import WeightBundle, load_weights, random_bundle, save_weights

__version__ = "0.1.0"
