"""Dense tensor helpers and the numerical kernels the pipeline is built from.

A *tensor* here is a ``float32`` ndarray of shape ``(C, H, W)`` (channel-major,
rows then columns).  A *matrix* is a 2-D ``float64`` ndarray.  Kernels never
modify their inputs.
"""

import math

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigurationError, DimensionError, NumericalError, ValidationError

DTYPE = np.float32

PADDING_MODES = ("reflection-same", "zero-same", "valid")
ACTIVATIONS = ("relu", "none")


def as_tensor(x, name="tensor"):
    """Return ``x`` as a finite float32 (C, H, W) array."""
    arr = np.asarray(x)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise DimensionError(f"{name} must have shape (C, H, W) with positive sizes, got {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=DTYPE)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def _finite(out, op):
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"{op} produced non-finite values")
    return out


def conv2d(x, kernel, bias=None, stride=1, padding="reflection-same", activation="none"):
    """2-D cross-correlation (no kernel flip) of a (C, H, W) tensor.

    ``kernel`` has shape (out_ch, in_ch, kh, kw).  The sum over kernel taps is
    accumulated tap by tap in a fixed order, so the result does not depend on
    how many BLAS threads are in use.
    """
    x = as_tensor(x, "conv2d input")
    kernel = np.asarray(kernel, dtype=DTYPE)
    if kernel.ndim != 4:
        raise DimensionError(f"conv2d kernel must be 4-D, got shape {kernel.shape}")
    out_ch, in_ch, kh, kw = kernel.shape
    if in_ch != x.shape[0]:
        raise DimensionError(f"conv2d kernel expects {in_ch} input channels, input has {x.shape[0]}")
    if stride < 1:
        raise ConfigurationError(f"stride must be positive, got {stride}")
    if padding not in PADDING_MODES:
        raise ConfigurationError(f"unknown padding {padding!r}")
    if activation not in ACTIVATIONS:
        raise ConfigurationError(f"unknown activation {activation!r}")

    if padding == "valid":
        xp = x
    else:
        if kh % 2 == 0 or kw % 2 == 0:
            raise ConfigurationError(f"same padding needs odd kernel sizes, got {kh}x{kw}")
        pad = ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2))
        xp = np.pad(x, pad, mode="reflect" if padding == "reflection-same" else "constant")

    c, hp, wp = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise DimensionError(f"input {x.shape[1:]} is smaller than kernel {kh}x{kw}")

    taps = np.ascontiguousarray(kernel.transpose(2, 3, 0, 1))
    out = np.zeros((out_ch, ho * wo), dtype=DTYPE)
    for i in range(kh):
        for j in range(kw):
            window = xp[:, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride]
            out += taps[i, j] @ window.reshape(c, ho * wo)
    out = out.reshape(out_ch, ho, wo)
    if bias is not None:
        bias = np.asarray(bias, dtype=DTYPE).reshape(-1)
        if bias.shape[0] != out_ch:
            raise DimensionError(f"bias has {bias.shape[0]} entries, kernel has {out_ch} outputs")
        out += bias[:, None, None]
    if activation == "relu":
        np.maximum(out, 0, out=out)
    return _finite(out, "conv2d")


def avg_pool2d(x, k=2, s=2):
    """2x2 stride-2 average pooling."""
    x = as_tensor(x, "avg_pool2d input")
    if k != 2 or s != 2:
        raise ConfigurationError("only 2x2 stride-2 pooling is supported")
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"avg_pool2d needs even spatial dims, got {h}x{w}")
    b = x.reshape(c, h // 2, 2, w // 2, 2)
    # pairwise sums keep pool(upsample(t)) == t bit for bit
    return ((b[:, :, 0, :, 0] + b[:, :, 0, :, 1]) + (b[:, :, 1, :, 0] + b[:, :, 1, :, 1])) * DTYPE(0.25)


def upsample_nearest(x, factor=2):
    x = as_tensor(x, "upsample input")
    if factor != 2:
        raise ConfigurationError("only x2 nearest upsampling is supported")
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _bilinear_axis(n_in, n_out):
    """Source indices and weights along one axis (half-pixel centers)."""
    ratio = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * ratio - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def resized_shape(h, w, beta):
    return int(math.floor(beta * h + 0.5)), int(math.floor(beta * w + 0.5))


def resize_bilinear(x, beta):
    """Rescale spatial dims by ``beta`` (output size ``round(beta * H)``).

    Sample positions follow the half-pixel-center convention and are clamped
    at the borders, so ``beta == 1`` reproduces the input exactly.
    """
    x = as_tensor(x, "resize input")
    if not beta > 0:
        raise ConfigurationError(f"scale must be positive, got {beta}")
    c, h, w = x.shape
    ho, wo = resized_shape(h, w, beta)
    if ho < 1 or wo < 1:
        raise ConfigurationError(f"scale {beta} maps {h}x{w} to an empty {ho}x{wo} grid")
    y0, y1, wy = _bilinear_axis(h, ho)
    x0, x1, wx = _bilinear_axis(w, wo)
    xd = x.astype(np.float64)
    rows = xd[:, y0, :] * (1.0 - wy)[None, :, None] + xd[:, y1, :] * wy[None, :, None]
    out = rows[:, :, x0] * (1.0 - wx) + rows[:, :, x1] * wx
    return out.astype(DTYPE)


def gaussian_kernel1d(sigma):
    radius = int(math.ceil(3 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()


def blur2d(grid, sigma):
    """Separable Gaussian blur of a 2-D float64 grid with reflection padding."""
    grid = np.asarray(grid, dtype=np.float64)
    if sigma < 0:
        raise ConfigurationError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return grid.copy()
    g = gaussian_kernel1d(sigma)
    r = len(g) // 2
    h, w = grid.shape
    p = np.pad(grid, ((r, r), (0, 0)), mode="reflect")
    tmp = np.zeros((h, w))
    for i, gi in enumerate(g):
        tmp += gi * p[i : i + h]
    p = np.pad(tmp, ((0, 0), (r, r)), mode="reflect")
    out = np.zeros((h, w))
    for j, gj in enumerate(g):
        out += gj * p[:, j : j + w]
    return out


def gaussian_blur(x, sigma):
    """Blur every channel of a tensor; kernel radius is ``ceil(3 * sigma)``."""
    x = as_tensor(x, "gaussian_blur input")
    if sigma < 0:
        raise ConfigurationError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return x.copy()
    return np.stack([blur2d(ch, sigma) for ch in x]).astype(DTYPE)


def softmax_rows(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"softmax_rows expects a matrix, got shape {m.shape}")
    z = np.exp(m - m.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def check_symmetric(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains non-finite values")
    gap = np.abs(m - m.T)
    if np.any(gap > 1e-5 * np.maximum(1.0, np.abs(m))):
        raise DimensionError("matrix is not symmetric")
    return m


def _jacobi(a, tol, max_sweeps):
    """Cyclic Jacobi rotations on a copy of ``a``; returns (diag, V) with A V = V diag."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        # explicit off-diagonal norm; subtracting the diagonal from the full norm cancels badly
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                rp, rq = a[p].copy(), a[q].copy()
                a[p] = c * rp - s * rq
                a[q] = s * rp + c * rq
                a[:, p] = a[p]
                a[:, q] = a[q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NumericalError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def sym_eig(m, tol=1e-10, max_sweeps=100, method="lapack"):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in descending
    order and eigenvectors as orthonormal columns.  ``method="jacobi"`` runs
    cyclic Jacobi rotations until the off-diagonal Frobenius norm drops to
    ``tol * ||m||_F``; ``"lapack"`` delegates to ``numpy.linalg.eigh``, which
    is what the pipeline uses for its 512x512 covariances.
    """
    m = check_symmetric(m)
    m = 0.5 * (m + m.T)
    if method == "jacobi":
        values, vectors = _jacobi(m, tol, max_sweeps)
    elif method == "lapack":
        # threaded LAPACK eigensolvers return thread-count dependent bits; pin to one
        try:
            with threadpool_limits(limits=1):
                values, vectors = np.linalg.eigh(m)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    else:
        raise ConfigurationError(f"unknown eigensolver {method!r}")
    order = np.argsort(-values, kind="stable")
    return values[order], np.ascontiguousarray(vectors[:, order])
