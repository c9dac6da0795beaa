"""Whitening / coloring transforms and adaptive instance normalization."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .tensor_core import DTYPE, as_tensor, sym_eig

EIG_EPS = 1e-8
ADAIN_EPS = 1e-5


@dataclass(frozen=True)
class FeatureStats:
    """Channel mean and covariance of a feature map, with its eigensystem.

    ``values``/``vectors`` hold only the retained components (eigenvalue above
    ``EIG_EPS``); ``rank`` is their count.
    """

    mean: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int

    @property
    def values(self):
        return self.eigenvalues[: self.rank]

    @property
    def vectors(self):
        return self.eigenvectors[:, : self.rank]


def feature_stats(f, method="lapack"):
    f = as_tensor(f, "feature")
    c, h, w = f.shape
    n = h * w
    if n < 2:
        raise ValidationError(f"whitening needs at least 2 locations, got {h}x{w}")
    flat = f.reshape(c, n).astype(np.float64)
    mean = flat.mean(axis=1)
    centered = flat - mean[:, None]
    cov = centered @ centered.T / (n - 1)
    values, vectors = sym_eig(cov, method=method)
    rank = int(np.count_nonzero(values > EIG_EPS))
    return FeatureStats(mean, cov, values, vectors, rank)


def whiten(f, method="lapack"):
    """Decorrelate channels: returns ``(f_hat, stats)``.

    Components whose eigenvalue is at most ``EIG_EPS`` are dropped, so a
    constant feature whitens to all zeros.
    """
    f = as_tensor(f, "feature")
    stats = feature_stats(f, method=method)
    c, h, w = f.shape
    centered = f.reshape(c, -1).astype(np.float64) - stats.mean[:, None]
    e = stats.vectors
    out = e @ ((e.T @ centered) / np.sqrt(stats.values)[:, None])
    return out.reshape(c, h, w).astype(DTYPE), stats


def color(f_hat, stats):
    """Impose ``stats``' covariance and mean on a whitened feature."""
    f_hat = as_tensor(f_hat, "whitened feature")
    c, h, w = f_hat.shape
    if c != stats.mean.shape[0]:
        raise DimensionError(f"feature has {c} channels, style stats have {stats.mean.shape[0]}")
    flat = f_hat.reshape(c, -1).astype(np.float64)
    e = stats.vectors
    out = e @ ((e.T @ flat) * np.sqrt(stats.values)[:, None]) + stats.mean[:, None]
    return out.reshape(c, h, w).astype(DTYPE)


def channel_mean_std(f):
    flat = f.reshape(f.shape[0], -1).astype(np.float64)
    return flat.mean(axis=1), flat.std(axis=1)


def adain(content_feat, style_feat, eps=ADAIN_EPS):
    """Match per-channel mean and (population) std of content to style."""
    content_feat = as_tensor(content_feat, "content feature")
    style_feat = as_tensor(style_feat, "style feature")
    if content_feat.shape[0] != style_feat.shape[0]:
        raise DimensionError(
            f"adain channel mismatch: content {content_feat.shape[0]}, style {style_feat.shape[0]}"
        )
    mu_c, sd_c = channel_mean_std(content_feat)
    mu_s, sd_s = channel_mean_std(style_feat)
    x = content_feat.astype(np.float64)
    out = sd_s[:, None, None] * (x - mu_c[:, None, None]) / (sd_c[:, None, None] + eps) + mu_s[:, None, None]
    return out.astype(DTYPE)
