"""Patch-based style swap at one or several style scales.

Matching is a valid cross-correlation of the content with unit-norm style
patches followed by an argmax over patches (lowest index wins ties); the
swapped feature is rebuilt by pasting the raw winning patches and averaging
where they overlap.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _threads
from .errors import ConfigurationError, DimensionError, ValidationError
from .tensor_core import DTYPE, as_tensor, resize_bilinear, resized_shape

ZERO_NORM = 1e-12


def _check_patch(patch):
    if not isinstance(patch, (int, np.integer)) or patch < 1 or patch % 2 == 0:
        raise ConfigurationError(f"patch size must be an odd positive integer, got {patch!r}")


def extract_patches(f, patch):
    """All stride-1 ``patch`` x ``patch`` blocks, shape (count, C, p, p), row-major order."""
    c, h, w = f.shape
    win = sliding_window_view(f, (patch, patch), axis=(1, 2))  # (C, h', w', p, p)
    return np.ascontiguousarray(win.transpose(1, 2, 0, 3, 4)).reshape(-1, c, patch, patch)


@dataclass(frozen=True)
class PatchBank:
    patches: np.ndarray  # (M, C, p, p), raw
    normalized: np.ndarray  # (M, C*p*p), unit Frobenius norm; zero rows where zero_norm
    zero_norm: np.ndarray  # (M,) bool

    @classmethod
    def from_feature(cls, f, patch):
        patches = extract_patches(f, patch)
        flat = patches.reshape(len(patches), -1).astype(np.float64)
        norms = np.linalg.norm(flat, axis=1)
        zero = norms <= ZERO_NORM
        normalized = np.zeros_like(flat)
        normalized[~zero] = flat[~zero] / norms[~zero, None]
        return cls(patches, normalized, zero)

    def __len__(self):
        return len(self.patches)


def _validate_pair(content, style, patch):
    _check_patch(patch)
    content = as_tensor(content, "content feature")
    style = as_tensor(style, "style feature")
    if content.shape[0] != style.shape[0]:
        raise DimensionError(f"channel mismatch: content {content.shape[0]}, style {style.shape[0]}")
    if min(style.shape[1:]) < patch:
        raise ValidationError(f"style feature {style.shape[1:]} is smaller than the {patch}x{patch} patch")
    if min(content.shape[1:]) < patch:
        raise ValidationError(f"content feature {content.shape[1:]} is smaller than the {patch}x{patch} patch")
    return content, style


def swap_indices(content, style, patch=3, bank=None):
    """Winning style-patch index for each content patch location, shape (H-p+1, W-p+1)."""
    content, style = _validate_pair(content, style, patch)
    bank = PatchBank.from_feature(style, patch) if bank is None else bank
    if bank.zero_norm.all():
        raise ValidationError("every style patch has zero norm")
    c, h, w = content.shape
    cols = extract_patches(content, patch).reshape((h - patch + 1) * (w - patch + 1), -1)
    scores = bank.normalized @ cols.astype(np.float64).T  # (M, L)
    scores[bank.zero_norm] = -np.inf
    return np.argmax(scores, axis=0).reshape(h - patch + 1, w - patch + 1)


def reconstruct(patches, indices, shape):
    """Paste ``patches[indices]`` at every location and average the overlaps."""
    c, h, w = shape
    p = patches.shape[-1]
    ho, wo = indices.shape
    chosen = patches[indices.reshape(-1)].astype(np.float64)  # (L, C, p, p)
    chosen = chosen.reshape(ho, wo, c, p, p).transpose(2, 3, 4, 0, 1)  # (C, p, p, ho, wo)
    acc = np.zeros((c, h, w))
    cover = np.zeros((h, w))
    for i in range(p):
        for j in range(p):
            acc[:, i : i + ho, j : j + wo] += chosen[:, i, j]
            cover[i : i + ho, j : j + wo] += 1.0
    return (acc / cover).astype(DTYPE)


def style_swap(content_white, style_white, patch=3):
    content_white, style_white = _validate_pair(content_white, style_white, patch)
    bank = PatchBank.from_feature(style_white, patch)
    idx = swap_indices(content_white, style_white, patch, bank=bank)
    return reconstruct(bank.patches, idx, content_white.shape)


def multi_scale_swap(content_white, style_white, betas, patch=3, workers=None):
    """Style-swap the content against the style resized by each ``beta``.

    Results come back in the order of ``betas``; each scale is independent
    and they run concurrently up to ``workers`` threads.
    """
    _check_patch(patch)
    style_white = as_tensor(style_white, "style feature")
    _, h, w = style_white.shape
    for beta in betas:
        if not beta > 0:
            raise ConfigurationError(f"scale coefficient must be positive, got {beta}")
        hs, ws = resized_shape(h, w, beta)
        if min(hs, ws) < patch:
            raise ConfigurationError(
                f"beta={beta} shrinks the {h}x{w} style feature to {hs}x{ws}, smaller than the {patch}x{patch} patch"
            )

    def one(beta):
        return style_swap(content_white, resize_bilinear(style_white, beta), patch)

    workers = _threads.thread_count() if workers is None else workers
    if workers <= 1 or len(betas) <= 1:
        return [one(b) for b in betas]
    with ThreadPoolExecutor(max_workers=min(workers, len(betas))) as pool:
        return list(pool.map(one, betas))


@dataclass(frozen=True)
class StrokeSet:
    """Stroke 0 is the whitened content; strokes 1..K are swaps by ascending beta."""

    strokes: tuple
    betas: tuple

    def __len__(self):
        return len(self.strokes)


def build_stroke_set(content_white, swapped, betas):
    content_white = as_tensor(content_white, "content feature")
    if len(swapped) != len(betas):
        raise DimensionError(f"{len(swapped)} swapped features for {len(betas)} betas")
    for s in swapped:
        if np.shape(s) != content_white.shape:
            raise DimensionError(f"swapped feature {np.shape(s)} differs from content {content_white.shape}")
    order = sorted(range(len(betas)), key=lambda i: betas[i])
    strokes = (content_white,) + tuple(as_tensor(swapped[i]) for i in order)
    return StrokeSet(strokes, tuple(float(betas[i]) for i in order))
