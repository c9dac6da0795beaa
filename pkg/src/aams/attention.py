"""Self-attention over the bottleneck feature map.

For a feature ``f`` with N = H*W locations, each 1x1 projection produces an
N x C' matrix (row i = location i).  The energy ``e = U G^T`` is turned into
row-stochastic weights ``alpha = softmax_rows(e)`` and the attention feature is
``alpha @ V`` reshaped back to (C, H, W).  The module output is
``O = A * f + f``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .tensor_core import DTYPE, as_tensor, softmax_rows

MAX_LOCATIONS = 64 * 64


@dataclass(frozen=True)
class AttentionParams:
    """Bias-free 1x1 projections stored as (out_ch, in_ch) matrices."""

    theta_h: np.ndarray
    theta_u: np.ndarray
    theta_g: np.ndarray

    def __post_init__(self):
        h, u, g = (np.asarray(m) for m in (self.theta_h, self.theta_u, self.theta_g))
        if h.ndim != 2 or u.ndim != 2 or g.ndim != 2:
            raise DimensionError("attention projections must be 2-D matrices")
        c = h.shape[1]
        if h.shape != (c, c):
            raise DimensionError(f"theta_h must be {c}x{c}, got {h.shape}")
        if u.shape != g.shape or u.shape[1] != c:
            raise DimensionError(f"theta_u {u.shape} and theta_g {g.shape} must match and read {c} channels")

    @property
    def channels(self):
        return self.theta_h.shape[1]

    @classmethod
    def from_bundle(cls, bundle):
        def mat(name):
            w = bundle[f"{name}.weight"]
            return np.asarray(w, dtype=np.float64).reshape(w.shape[0], w.shape[1])

        return cls(mat("theta_h"), mat("theta_u"), mat("theta_g"))


def _flatten(f, params, max_locations):
    f = as_tensor(f, "feature")
    c, h, w = f.shape
    if c != params.channels:
        raise DimensionError(f"feature has {c} channels, attention expects {params.channels}")
    if h * w > max_locations:
        raise ValidationError(
            f"attention over {h * w} locations exceeds the cap of {max_locations}; use a smaller input"
        )
    return f.reshape(c, h * w).astype(np.float64)


def attention_energy(f, params, energy_scale=1.0, max_locations=MAX_LOCATIONS):
    """N x N compatibility matrix ``flat(f*theta_u) @ flat(f*theta_g)^T``."""
    x = _flatten(f, params, max_locations)
    u = params.theta_u @ x
    g = params.theta_g @ x
    return energy_scale * (u.T @ g)


def attention_weights(f, params, energy_scale=1.0, max_locations=MAX_LOCATIONS):
    return softmax_rows(attention_energy(f, params, energy_scale, max_locations))


def attention_feature(f, params, energy_scale=1.0, max_locations=MAX_LOCATIONS):
    """Attention feature map, same (C, H, W) dims as ``f``."""
    f = as_tensor(f, "feature")
    x = _flatten(f, params, max_locations)
    alpha = softmax_rows(energy_scale * ((params.theta_u @ x).T @ (params.theta_g @ x)))
    values = (params.theta_h @ x).T
    a = alpha @ values
    return np.ascontiguousarray(a.T).reshape(f.shape).astype(DTYPE)


def attention_output(f, a):
    """Return ``(o, r)`` with residual ``r = a * f`` and output ``o = r + f``."""
    f = as_tensor(f, "feature")
    a = as_tensor(a, "attention feature")
    if f.shape != a.shape:
        raise DimensionError(f"feature {f.shape} and attention {a.shape} differ in shape")
    r = a * f
    return r + f, r
