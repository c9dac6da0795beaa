"""The AAMS-W1 weight bundle: layer table, binary format, random init.

File layout (little-endian, no padding)::

    magic "AAMSW1\\0\\0" | u32 version=1 | u32 len + utf-8 pixel tag
    u32 record count | records...
    record: u32 len + utf-8 name | u8 rank | rank x u32 dims | prod(dims) x f32

Kernels are stored for cross-correlation (no flip), shape
(out_ch, in_ch, kh, kw).
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"AAMSW1\0\0"
VERSION = 1
PIXEL_CONVENTION = "rgb01"  # RGB in [0, 1], no mean subtraction

# (name, in_ch, out_ch); "pool"/"up" mark resolution changes
ENCODER_LAYERS = (
    ("conv1_1", 3, 64),
    ("conv1_2", 64, 64),
    "pool",
    ("conv2_1", 64, 128),
    ("conv2_2", 128, 128),
    "pool",
    ("conv3_1", 128, 256),
    ("conv3_2", 256, 256),
    ("conv3_3", 256, 256),
    ("conv3_4", 256, 256),
    "pool",
    ("conv4_1", 256, 512),
)

DECODER_LAYERS = (
    ("inv_conv4_1", 512, 256),
    "up",
    ("inv_conv3_4", 256, 256),
    ("inv_conv3_3", 256, 256),
    ("inv_conv3_2", 256, 256),
    ("inv_conv3_1", 256, 128),
    "up",
    ("inv_conv2_2", 128, 128),
    ("inv_conv2_1", 128, 64),
    "up",
    ("inv_conv1_2", 64, 64),
    ("inv_conv1_1", 64, 3),
)

FEATURE_CHANNELS = 512


def required_shapes():
    """Every layer name the engine needs, mapped to its exact shape."""
    shapes = {}
    for layer in ENCODER_LAYERS + DECODER_LAYERS:
        if isinstance(layer, str):
            continue
        name, cin, cout = layer
        shapes[f"{name}.weight"] = (cout, cin, 3, 3)
        shapes[f"{name}.bias"] = (cout,)
    c = FEATURE_CHANNELS
    shapes["theta_h.weight"] = (c, c, 1, 1)
    shapes["theta_u.weight"] = (c // 2, c, 1, 1)
    shapes["theta_g.weight"] = (c // 2, c, 1, 1)
    return shapes


@dataclass(frozen=True)
class WeightBundle:
    entries: dict
    pixel_convention: str = PIXEL_CONVENTION
    version: int = VERSION
    meta: dict = field(default_factory=dict, compare=False)

    def __getitem__(self, name):
        return self.entries[name]

    def __contains__(self, name):
        return name in self.entries


def validate_bundle(bundle):
    """Raise ``ValidationError`` naming every missing, mis-shaped or non-finite entry."""
    missing, misshaped, bad = [], [], []
    for name, shape in required_shapes().items():
        if name not in bundle.entries:
            missing.append(name)
        elif tuple(bundle.entries[name].shape) != shape:
            misshaped.append(name)
    for name, arr in bundle.entries.items():
        if not np.all(np.isfinite(arr)):
            bad.append(name)
    problems = []
    if missing:
        problems.append("missing: " + ", ".join(missing))
    if misshaped:
        problems.append(
            "wrong shape: "
            + ", ".join(f"{n} {tuple(bundle.entries[n].shape)} != {required_shapes()[n]}" for n in misshaped)
        )
    if bad:
        problems.append("non-finite values: " + ", ".join(bad))
    if problems:
        raise ValidationError("invalid weight bundle; " + "; ".join(problems), names=missing + misshaped + bad)
    return bundle


def save_weights(bundle):
    """Serialize a bundle to AAMS-W1 bytes (entries in insertion order)."""
    tag = bundle.pixel_convention.encode("utf-8")
    parts = [MAGIC, struct.pack("<II", bundle.version, len(tag)), tag, struct.pack("<I", len(bundle.entries))]
    for name, arr in bundle.entries.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f4")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0
        self.record = None

    def take(self, n, what):
        if self.pos + n > len(self.data):
            where = f"record {self.record}" if self.record is not None else "header"
            raise FormatError(f"truncated weight file: {where} ends inside {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def load_weights(data, validate=True):
    """Parse AAMS-W1 bytes into a ``WeightBundle``."""
    r = _Reader(data)
    if bytes(r.take(len(MAGIC), "magic")) != MAGIC:
        raise FormatError("not an AAMS-W1 weight file (bad magic)")
    version = r.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported weight format version {version}")
    try:
        tag = bytes(r.take(r.u32("pixel tag length"), "pixel tag")).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("pixel convention tag is not valid UTF-8") from exc
    count = r.u32("record count")
    entries = {}
    for index in range(count):
        r.record = index
        try:
            name = bytes(r.take(r.u32("name length"), "name")).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"record {index}: name is not valid UTF-8") from exc
        rank = r.take(1, "rank")[0]
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, "dims"))
        n = int(np.prod(dims, dtype=np.int64))
        values = np.frombuffer(r.take(4 * n, "values"), dtype="<f4").astype(np.float32)
        if name in entries:
            raise FormatError(f"record {index}: duplicate layer name {name!r}")
        entries[name] = values.reshape(dims)
    if r.pos != len(r.data):
        raise FormatError(f"{len(r.data) - r.pos} trailing bytes after record {count - 1}")
    bundle = WeightBundle(entries=entries, pixel_convention=tag, version=version)
    return validate_bundle(bundle) if validate else bundle


def read_weights(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read weights {path}: {exc}") from exc
    return load_weights(data)


def write_weights(path, bundle):
    Path(path).write_bytes(save_weights(bundle))


def random_bundle(seed=0, attention_scale=0.02):
    """He-initialised bundle with zero biases, for tests and smoke runs."""
    rng = np.random.default_rng(seed)
    entries = {}
    for name, shape in required_shapes().items():
        if name.endswith(".bias"):
            entries[name] = np.zeros(shape, dtype=np.float32)
        elif name.startswith("theta_"):
            entries[name] = (attention_scale * rng.standard_normal(shape)).astype(np.float32)
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            entries[name] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(np.float32)
    return WeightBundle(entries=entries)
