"""End-to-end stylization, reconstruction and parameter sweeps."""

import contextlib
import hashlib
import itertools
import logging
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from . import _threads
from .attention import MAX_LOCATIONS, AttentionParams, attention_feature, attention_output
from .codec import decode, encode
from .errors import ConfigurationError, FormatError, ValidationError
from .fusion import attention_filter, fuse, kmeans_1d, stroke_weight_maps
from .metrics import LossRecord, LossWeights, attention_sparse_loss, content_loss, total_loss, tv_loss
from .swap import build_stroke_set, multi_scale_swap
from .tensor_core import DTYPE, as_tensor
from .transforms import color, whiten
from .weights import PIXEL_CONVENTION

log = logging.getLogger(__name__)

STAGES = ("encode", "attention", "whiten", "swaps", "fusion", "color", "decode")


def default_betas(strokes):
    """Evenly spaced scales k/K for k = 1..K (gives 0.5, 1.0 for K = 2)."""
    return tuple(k / strokes for k in range(1, strokes + 1))


@dataclass(frozen=True)
class StylizeConfig:
    strokes: int = 2
    betas: tuple = (0.5, 1.0)
    gamma: float = 50.0
    sigma: float = 1.0
    patch: int = 3
    max_side: int = 512
    energy_scale: float = 1.0
    emit_attention: str = None
    output_path: str = None
    weight_path: str = None

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not isinstance(self.strokes, (int, np.integer)) or self.strokes < 0:
            raise ConfigurationError(f"stroke count must be a non-negative integer, got {self.strokes!r}")
        if len(self.betas) != self.strokes:
            raise ConfigurationError(f"{len(self.betas)} betas given for {self.strokes} strokes")
        if any(not b > 0 for b in self.betas):
            raise ConfigurationError(f"betas must be positive, got {self.betas}")
        if not self.gamma >= 0:
            raise ConfigurationError(f"gamma must be non-negative, got {self.gamma}")
        if not self.sigma >= 0:
            raise ConfigurationError(f"sigma must be non-negative, got {self.sigma}")
        if not isinstance(self.patch, (int, np.integer)) or self.patch < 1 or self.patch % 2 == 0:
            raise ConfigurationError(f"patch must be an odd positive integer, got {self.patch!r}")
        if self.max_side < 8:
            raise ConfigurationError(f"max_side must be at least 8, got {self.max_side}")

    @classmethod
    def for_strokes(cls, strokes, **kw):
        return cls(strokes=strokes, betas=kw.pop("betas", None) or default_betas(strokes), **kw)


@dataclass
class RenderReport:
    durations: dict = field(default_factory=lambda: {s: 0.0 for s in STAGES})
    total: float = 0.0
    strokes: int = 0
    input_dims: tuple = ()
    fallback: bool = False

    CSV_HEADER = "strokes,height,width," + ",".join(STAGES) + ",total"

    def csv_row(self, prefix=()):
        h, w = self.input_dims[-2:]
        cells = [*prefix, self.strokes, h, w, *(f"{self.durations[s]:.6f}" for s in STAGES), f"{self.total:.6f}"]
        return ",".join(str(c) for c in cells)


def _stage_timer(report):
    @contextlib.contextmanager
    def timed(stage):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            report.durations[stage] += time.perf_counter() - t0

    return timed


@dataclass(frozen=True)
class StyleEntry:
    taps: object
    white: np.ndarray
    stats: object


class StyleCache:
    """Per-style-image encoder taps and whitening results, keyed by image content."""

    def __init__(self, capacity=8):
        self.capacity = capacity
        self._entries = OrderedDict()
        self._lock = threading.Lock()

    @staticmethod
    def key(style, bundle):
        digest = hashlib.sha1(np.ascontiguousarray(style).tobytes())
        digest.update(repr(style.shape).encode())
        return id(bundle), digest.hexdigest()

    def get(self, style, bundle):
        k = self.key(style, bundle)
        with self._lock:
            entry = self._entries.get(k)
            if entry is not None:
                self._entries.move_to_end(k)
            return entry

    def put(self, style, bundle, entry):
        k = self.key(style, bundle)
        with self._lock:
            self._entries[k] = entry
            self._entries.move_to_end(k)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)


def check_convention(bundle):
    if bundle.pixel_convention != PIXEL_CONVENTION:
        raise FormatError(
            f"weights expect pixel convention {bundle.pixel_convention!r}, engine uses {PIXEL_CONVENTION!r}"
        )


def _untimed(stage):
    return contextlib.nullcontext()


def prepare_style(style, bundle, cache=None, timed=_untimed):
    """Encode and whiten the style image, reusing ``cache`` when possible."""
    style = as_tensor(style, "style image")
    if cache is not None:
        entry = cache.get(style, bundle)
        if entry is not None:
            return entry
    with timed("encode"):
        taps = encode(style, bundle)
    with timed("whiten"):
        white, stats = whiten(taps.relu4_1)
    entry = StyleEntry(taps, white, stats)
    if cache is not None:
        cache.put(style, bundle, entry)
    return entry


@dataclass(frozen=True)
class StylizeTrace:
    """Every intermediate of one stylize call."""

    image: np.ndarray
    report: RenderReport
    attention_map: np.ndarray
    attention: np.ndarray
    content_white: np.ndarray
    strokes: object
    clusters: object
    weights: np.ndarray
    fused: np.ndarray
    colored: np.ndarray
    config: StylizeConfig


def stylize_trace(content, style, bundle, cfg=StylizeConfig(), cache=None):
    check_convention(bundle)
    content = as_tensor(content, "content image")
    report = RenderReport(input_dims=content.shape, strokes=cfg.strokes + 1)
    timed = _stage_timer(report)
    t_start = time.perf_counter()
    with _threads.limited() as n_threads:
        with timed("encode"):
            f_c = encode(content, bundle).relu4_1
        style_entry = prepare_style(style, bundle, cache, timed)

        with timed("attention"):
            params = AttentionParams.from_bundle(bundle)
            a_c = attention_feature(f_c, params, energy_scale=cfg.energy_scale, max_locations=MAX_LOCATIONS)
            amap = attention_filter(a_c, cfg.sigma)

        with timed("whiten"):
            f_c_white, _ = whiten(f_c)

        strokes_k = cfg.strokes
        betas = cfg.betas
        distinct = len(np.unique(amap))
        if strokes_k + 1 > distinct:
            log.warning(
                "attention map has %d distinct values, too few for %d strokes; falling back to a single stroke",
                distinct,
                strokes_k + 1,
            )
            strokes_k, betas = 0, ()
            report.fallback = True
            report.strokes = 1

        with timed("swaps"):
            swapped = multi_scale_swap(f_c_white, style_entry.white, betas, cfg.patch, workers=n_threads)

        with timed("fusion"):
            strokes = build_stroke_set(f_c_white, swapped, betas)
            clusters = kmeans_1d(amap, strokes_k + 1)
            weights = stroke_weight_maps(amap, clusters, cfg.gamma)
            fused = fuse(strokes, weights)

        with timed("color"):
            colored = color(fused, style_entry.stats)

        with timed("decode"):
            image = decode(colored, bundle, style_entry.taps)
    report.total = time.perf_counter() - t_start
    return StylizeTrace(image, report, amap, a_c, f_c_white, strokes, clusters, weights, fused, colored, cfg)


def stylize(content, style, bundle, cfg=StylizeConfig(), cache=None):
    """Stylize ``content`` with ``style``; returns ``(image, report, attention_map)``."""
    t = stylize_trace(content, style, bundle, cfg, cache)
    return t.image, t.report, t.attention_map


def reconstruct(image, bundle, weights=LossWeights(), energy_scale=1.0):
    """Autoencoder pass through the attention module; returns ``(image, LossRecord)``."""
    check_convention(bundle)
    image = as_tensor(image, "image")
    with _threads.limited():
        f = encode(image, bundle).relu4_1
        a = attention_feature(f, AttentionParams.from_bundle(bundle), energy_scale=energy_scale)
        o, _ = attention_output(f, a)
        out = decode(o, bundle)
        l_con = content_loss(out, image, bundle, weights)
    l_att = attention_sparse_loss(a)
    l_tv = tv_loss(out)
    return out, LossRecord(l_con, l_att, l_tv, total_loss(l_con, l_att, l_tv, weights))


@dataclass(frozen=True)
class SweepCell:
    strokes: int
    gamma: float
    sigma: float
    trace: StylizeTrace


@dataclass(frozen=True)
class SweepResult:
    cells: tuple
    montage: np.ndarray
    rows: tuple  # (strokes, sigma) per montage row
    columns: tuple  # gamma per montage column

    CSV_HEADER = "cell,gamma,sigma," + RenderReport.CSV_HEADER

    def csv(self):
        lines = [self.CSV_HEADER]
        for i, c in enumerate(self.cells):
            lines.append(c.trace.report.csv_row(prefix=(i, c.gamma, c.sigma)))
        return "\n".join(lines) + "\n"


def montage(rows):
    """Tile a list of rows of equally sized (3, H, W) images."""
    return np.concatenate([np.concatenate(list(r), axis=2) for r in rows], axis=1).astype(DTYPE)


def sweep(content, style, bundle, gammas=(50.0,), strokes_list=(2,), sigmas=(1.0,), base=StylizeConfig()):
    """One stylize call per (strokes, sigma, gamma) cell.

    Montage rows are (strokes, sigma) combinations and columns are gammas.
    The style is prepared once up front, so every cell is timed on equal
    footing.
    """
    gammas, strokes_list, sigmas = list(gammas), list(strokes_list), list(sigmas)
    if not gammas or not strokes_list or not sigmas:
        raise ConfigurationError("sweep grid must contain at least one value per axis")
    cache = StyleCache()
    with _threads.limited():
        prepare_style(style, bundle, cache)
    cells, rows = [], []
    row_keys = list(itertools.product(strokes_list, sigmas))
    for k, sigma in row_keys:
        row = []
        for gamma in gammas:
            cfg = replace(base, strokes=k, betas=default_betas(k), gamma=gamma, sigma=sigma)
            trace = stylize_trace(content, style, bundle, cfg, cache)
            cells.append(SweepCell(k, gamma, sigma, trace))
            row.append(trace.image)
        rows.append(row)
    return SweepResult(tuple(cells), montage(rows), tuple(row_keys), tuple(gammas))


def fit_image(rgb, max_side=512):
    """uint8 (H, W, 3) -> float32 (3, H', W') in [0, 1], max side <= max_side, dims multiple of 8."""
    from PIL import Image

    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValidationError(f"expected an RGB image, got array of shape {rgb.shape}")
    h, w = rgb.shape[:2]
    scale = min(1.0, max_side / max(h, w))
    if scale < 1.0:
        size = (max(1, round(w * scale)), max(1, round(h * scale)))
        rgb = np.asarray(Image.fromarray(rgb.astype(np.uint8)).resize(size, Image.BILINEAR))
        h, w = rgb.shape[:2]
    h8, w8 = h - h % 8, w - w % 8
    if h8 < 8 or w8 < 8:
        raise ValidationError(f"image {h}x{w} is too small (needs at least 8x8)")
    top, left = (h - h8) // 2, (w - w8) // 2
    rgb = rgb[top : top + h8, left : left + w8]
    return np.ascontiguousarray(rgb.transpose(2, 0, 1), dtype=np.float32) / np.float32(255.0)
