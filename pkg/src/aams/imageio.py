"""PNG read/write for RGB images and grayscale attention maps."""

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError
from .fusion import attention_to_uint8
from .pipeline import fit_image


def read_rgb(path):
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, UnidentifiedImageError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc


def load_image(path, max_side=512):
    """Read an image file as a (3, H, W) float32 tensor ready for the encoder."""
    return fit_image(read_rgb(path), max_side)


def to_uint8(image):
    img = np.asarray(image, dtype=np.float64)
    return np.clip(np.rint(255.0 * img), 0, 255).astype(np.uint8).transpose(1, 2, 0)


def save_image(path, image):
    Image.fromarray(to_uint8(image), mode="RGB").save(path, format="PNG")


def save_attention_map(path, attention_map):
    Image.fromarray(attention_to_uint8(attention_map), mode="L").save(path, format="PNG")


def read_gray(path):
    """Single-channel float64 grid from any image file (values 0..255)."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.float64)
    except (OSError, UnidentifiedImageError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc
