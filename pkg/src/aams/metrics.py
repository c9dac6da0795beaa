"""Forward-only losses of the reconstruction objective and saliency-consistency scores."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .tensor_core import as_tensor

KL_EPS = 1e-12
SALIENCY_KEYS = ("auc_judd", "sim", "nss", "cc", "kl")


@dataclass(frozen=True)
class LossWeights:
    lambda_con: float = 1.0
    lambda_p: float = 10.0
    lambda_att: float = 6.0
    lambda_tv: float = 10.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value >= 0:
                raise ValidationError(f"{name} must be non-negative, got {value}")


def _mse(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.mean((a - b) ** 2))


def content_loss(reconstruction, original, bundle, weights=LossWeights(), encoder=None):
    """Perceptual loss over the encoder taps plus ``lambda_p`` x pixel loss.

    Both terms are mean squared differences.  ``encoder(image, bundle)`` must
    return an iterable of feature maps; it defaults to the VGG encoder
    (relu1_1 .. relu4_1).
    """
    reconstruction = as_tensor(reconstruction, "reconstruction")
    original = as_tensor(original, "original")
    if reconstruction.shape != original.shape:
        raise DimensionError(f"image shapes differ: {reconstruction.shape} vs {original.shape}")
    if encoder is None:
        from .codec import encode as encoder
    perceptual = sum(_mse(a, b) for a, b in zip(encoder(reconstruction, bundle), encoder(original, bundle)))
    return perceptual + weights.lambda_p * _mse(reconstruction, original)


def attention_sparse_loss(a):
    """Mean absolute value of the attention feature (L1 norm / element count)."""
    return float(np.mean(np.abs(np.asarray(a, dtype=np.float64))))


def tv_loss(image):
    """Anisotropic squared total variation.

    Vertical and horizontal squared neighbour differences are each averaged
    over the positions where they exist; a direction with no pairs adds 0.
    """
    x = as_tensor(image, "image").astype(np.float64)
    _, h, w = x.shape
    if h * w < 2:
        raise ValidationError(f"total variation needs at least two pixels, got {h}x{w}")
    tv = 0.0
    if h > 1:
        tv += float(np.mean((x[:, 1:, :] - x[:, :-1, :]) ** 2))
    if w > 1:
        tv += float(np.mean((x[:, :, 1:] - x[:, :, :-1]) ** 2))
    return tv


def total_loss(content, attention, tv, weights=LossWeights()):
    return weights.lambda_con * content + weights.lambda_att * attention + weights.lambda_tv * tv


@dataclass(frozen=True)
class LossRecord:
    content: float
    attention: float
    tv: float
    total: float

    CSV_HEADER = "content,attention,tv,total"

    def csv_row(self):
        return f"{self.content!r},{self.attention!r},{self.tv!r},{self.total!r}"


@dataclass(frozen=True)
class SaliencyScores:
    auc_judd: float
    sim: float
    nss: float
    cc: float
    kl: float

    CSV_HEADER = ",".join(SALIENCY_KEYS)

    def record(self):
        return " ".join(f"{k}={getattr(self, k):.6f}" for k in SALIENCY_KEYS)

    def csv_row(self):
        return ",".join(repr(float(getattr(self, k))) for k in SALIENCY_KEYS)


def _grid(m, name):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 3 and m.shape[0] == 1:
        m = m[0]
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a single-channel grid, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or m.min() < 0:
        raise ValidationError(f"{name} must be finite and non-negative")
    return m


def _as_distribution(m):
    s = m.sum()
    return m / s if s > 0 else None


def default_fixations(content_saliency):
    """Top-decile pixels of the content saliency map."""
    return content_saliency >= np.percentile(content_saliency, 90)


def cc(a, b):
    a, b = a.ravel(), b.ravel()
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def sim(a, b):
    p, q = _as_distribution(a), _as_distribution(b)
    if p is None or q is None:
        return 0.0
    return float(np.minimum(p, q).sum())


def kl(stylized, content):
    p, q = _as_distribution(stylized), _as_distribution(content)
    if p is None or q is None:
        return 0.0
    mask = q > 0
    return float(np.sum(q[mask] * np.log(q[mask] / (p[mask] + KL_EPS))))


def nss(stylized, fixations):
    sd = stylized.std()
    if sd == 0:
        return 0.0
    z = (stylized - stylized.mean()) / sd
    return float(z[fixations].mean())


def auc_judd(stylized, fixations):
    """ROC area with fixated pixels as positives and all other pixels as negatives.

    Thresholds sweep the stylized scores found at fixations (highest first).
    """
    scores = stylized.ravel()
    fix = fixations.ravel()
    n_fix = int(fix.sum())
    n_neg = scores.size - n_fix
    if n_neg == 0:
        return 0.0
    thresholds = np.sort(scores[fix])[::-1]
    all_sorted = np.sort(scores)
    above = scores.size - np.searchsorted(all_sorted, thresholds, side="left")
    tp = np.concatenate([[0.0], np.arange(1, n_fix + 1) / n_fix, [1.0]])
    fp = np.concatenate([[0.0], (above - np.arange(1, n_fix + 1)) / n_neg, [1.0]])
    return float(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1]) / 2.0))


def saliency_metrics(content_saliency, stylized_saliency, fixations=None):
    """Five consistency scores between the content and stylized saliency maps.

    Without an explicit fixation mask, the top decile of the content map is
    used.  Degenerate (flat or all-zero) maps score 0 instead of NaN.
    """
    content = _grid(content_saliency, "content saliency")
    stylized = _grid(stylized_saliency, "stylized saliency")
    if content.shape != stylized.shape:
        raise DimensionError(f"saliency maps differ in shape: {content.shape} vs {stylized.shape}")
    if fixations is None:
        fixations = default_fixations(content)
    fixations = np.asarray(fixations).astype(bool)
    if fixations.shape != content.shape:
        raise DimensionError(f"fixation mask {fixations.shape} does not match maps {content.shape}")
    if not fixations.any():
        raise ValidationError("fixation mask is empty")
    scores = SaliencyScores(
        auc_judd=auc_judd(stylized, fixations),
        sim=sim(stylized, content),
        nss=nss(stylized, fixations),
        cc=cc(stylized, content),
        kl=kl(stylized, content),
    )
    for k in SALIENCY_KEYS:
        if not math.isfinite(getattr(scores, k)):
            raise ValidationError(f"{k} evaluated to a non-finite value")
    return scores
