"""Slow, direct reference computations used only by the tests.

Everything here is written with explicit loops in float64 and shares no code
with the package under test.
"""

import itertools
import math

import numpy as np


def reflect_index(i, n):
    if n == 1:
        return 0
    while i < 0 or i >= n:
        if i < 0:
            i = -i
        if i >= n:
            i = 2 * (n - 1) - i
    return i


def conv2d_naive(x, kernel, bias=None, stride=1, padding="reflection-same", relu=False):
    c, h, w = x.shape
    oc, ic, kh, kw = kernel.shape
    if padding == "valid":
        ph = pw = 0
    else:
        ph, pw = kh // 2, kw // 2
    ho = (h + 2 * ph - kh) // stride + 1
    wo = (w + 2 * pw - kw) // stride + 1
    out = np.zeros((oc, ho, wo))
    for o in range(oc):
        for y in range(ho):
            for xx in range(wo):
                acc = 0.0
                for ci in range(ic):
                    for dy in range(kh):
                        for dx in range(kw):
                            sy = y * stride + dy - ph
                            sx = xx * stride + dx - pw
                            if padding == "reflection-same":
                                sy, sx = reflect_index(sy, h), reflect_index(sx, w)
                            elif not (0 <= sy < h and 0 <= sx < w):
                                continue
                            acc += float(kernel[o, ci, dy, dx]) * float(x[ci, sy, sx])
                if bias is not None:
                    acc += float(bias[o])
                out[o, y, xx] = max(acc, 0.0) if relu else acc
    return out


def block_mean(x):
    c, h, w = x.shape
    out = np.zeros((c, h // 2, w // 2))
    for ci in range(c):
        for y in range(h // 2):
            for xx in range(w // 2):
                s = 0.0
                for dy in range(2):
                    for dx in range(2):
                        s += float(x[ci, 2 * y + dy, 2 * xx + dx])
                out[ci, y, xx] = s / 4.0
    return out


def upsample_index(x):
    c, h, w = x.shape
    out = np.zeros((c, 2 * h, 2 * w))
    for ci in range(c):
        for y in range(2 * h):
            for xx in range(2 * w):
                out[ci, y, xx] = x[ci, y // 2, xx // 2]
    return out


def bilinear_direct(x, out_h, out_w):
    """Half-pixel-center bilinear resampling, one output sample at a time."""
    c, h, w = x.shape
    out = np.zeros((c, out_h, out_w))
    for y in range(out_h):
        sy = min(max((y + 0.5) * h / out_h - 0.5, 0.0), h - 1.0)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for xx in range(out_w):
            sx = min(max((xx + 0.5) * w / out_w - 0.5, 0.0), w - 1.0)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            for ci in range(c):
                top = (1 - fx) * x[ci, y0, x0] + fx * x[ci, y0, x1]
                bot = (1 - fx) * x[ci, y1, x0] + fx * x[ci, y1, x1]
                out[ci, y, xx] = (1 - fy) * top + fy * bot
    return out


def gaussian_kernel2d(sigma):
    r = int(math.ceil(3 * sigma))
    k = np.zeros((2 * r + 1, 2 * r + 1))
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            k[dy + r, dx + r] = math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma))
    return k / k.sum()


def gaussian_blur_direct(grid, sigma):
    """Non-separable 2-D Gaussian filter with reflected borders."""
    if sigma == 0:
        return np.array(grid, dtype=np.float64)
    k = gaussian_kernel2d(sigma)
    r = k.shape[0] // 2
    h, w = grid.shape
    out = np.zeros((h, w))
    for y in range(h):
        for xx in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    acc += k[dy + r, dx + r] * grid[reflect_index(y + dy, h), reflect_index(xx + dx, w)]
            out[y, xx] = acc
    return out


def softmax_mp(row):
    import mpmath

    mpmath.mp.dps = 50
    vals = [mpmath.mpf(float(v)) for v in row]
    m = max(vals)
    ex = [mpmath.e ** (v - m) for v in vals]
    s = sum(ex)
    return np.array([float(e / s) for e in ex])


def attention_direct(f, th, tu, tg):
    """Energies, weights and attention feature by explicit per-location loops."""
    c, h, w = f.shape
    n = h * w
    loc = [f[:, i // w, i % w].astype(np.float64) for i in range(n)]

    def proj(theta, v):
        return [sum(theta[o, ci] * v[ci] for ci in range(c)) for o in range(theta.shape[0])]

    u = [proj(tu, v) for v in loc]
    g = [proj(tg, v) for v in loc]
    hv = [proj(th, v) for v in loc]
    e = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            e[i, j] = sum(a * b for a, b in zip(u[i], g[j]))
    alpha = np.zeros((n, n))
    for i in range(n):
        m = max(e[i])
        ex = [math.exp(v - m) for v in e[i]]
        s = sum(ex)
        alpha[i] = [v / s for v in ex]
    a = np.zeros((c, h, w))
    for i in range(n):
        for ch in range(c):
            a[ch, i // w, i % w] = sum(alpha[i, j] * hv[j][ch] for j in range(n))
    return e, alpha, a


def patch_match_exhaustive(content, style, p):
    """For every content location, index of the style patch maximising <c, s>/|s|."""
    c, h, w = content.shape
    _, hs, ws = style.shape
    spatches = []
    for y in range(hs - p + 1):
        for xx in range(ws - p + 1):
            spatches.append(style[:, y : y + p, xx : xx + p].astype(np.float64).ravel())
    idx = np.zeros((h - p + 1, w - p + 1), dtype=int)
    for y in range(h - p + 1):
        for xx in range(w - p + 1):
            cp = content[:, y : y + p, xx : xx + p].astype(np.float64).ravel()
            best, best_i = -math.inf, -1
            for i, sp in enumerate(spatches):
                norm = math.sqrt(float(np.dot(sp, sp)))
                if norm == 0:
                    continue
                score = float(np.dot(cp, sp)) / norm
                if score > best:
                    best, best_i = score, i
            idx[y, xx] = best_i
    return idx, spatches


def overlap_average(spatches, idx, shape, p):
    c, h, w = shape
    acc = np.zeros((c, h, w))
    cnt = np.zeros((h, w))
    for y in range(idx.shape[0]):
        for xx in range(idx.shape[1]):
            acc[:, y : y + p, xx : xx + p] += spatches[idx[y, xx]].reshape(c, p, p)
            cnt[y : y + p, xx : xx + p] += 1
    return acc / cnt


def kmeans_brute_force(values, k):
    """Minimum within-cluster squared error over every contiguous split of the sorted values."""
    x = sorted(float(v) for v in values)
    n = len(x)

    def sse(seg):
        m = sum(seg) / len(seg)
        return sum((v - m) ** 2 for v in seg)

    best = math.inf
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0,) + cuts + (n,)
        best = min(best, sum(sse(x[a:b]) for a, b in zip(bounds[:-1], bounds[1:])))
    return best


def kmeans_dp(values, k):
    """Textbook O(k n^2) dynamic program for optimal 1-D k-means."""
    x = sorted(float(v) for v in values)
    n = len(x)

    def sse(a, b):
        seg = x[a:b]
        m = sum(seg) / len(seg)
        return sum((v - m) ** 2 for v in seg)

    d = [[math.inf] * (n + 1) for _ in range(k + 1)]
    d[0][0] = 0.0
    for c in range(1, k + 1):
        for j in range(c, n + 1):
            d[c][j] = min(d[c - 1][i] + sse(i, j) for i in range(c - 1, j))
    return d[k][n]


def weights_direct(value, centers, gamma):
    """Stroke weights at a single pixel straight from the exponential formula."""
    logits = [gamma * (1 - abs(value - m)) for m in centers]
    top = max(logits)
    ex = [math.exp(v - top) for v in logits]
    s = sum(ex)
    return [v / s for v in ex]


def tv_direct(img):
    c, h, w = img.shape
    vert = [(img[ci, y + 1, xx] - img[ci, y, xx]) ** 2 for ci in range(c) for y in range(h - 1) for xx in range(w)]
    horz = [(img[ci, y, xx + 1] - img[ci, y, xx]) ** 2 for ci in range(c) for y in range(h) for xx in range(w - 1)]
    return (sum(vert) / len(vert) if vert else 0.0) + (sum(horz) / len(horz) if horz else 0.0)


def mse_direct(a, b):
    a, b = np.asarray(a, np.float64).ravel(), np.asarray(b, np.float64).ravel()
    return sum((float(u) - float(v)) ** 2 for u, v in zip(a, b)) / len(a)


def saliency_direct(content, stylized, fix):
    """Textbook definitions of AUC-Judd, SIM, NSS, CC and KL, pixel by pixel."""
    c = [float(v) for v in np.ravel(content)]
    s = [float(v) for v in np.ravel(stylized)]
    f = [bool(v) for v in np.ravel(fix)]
    n = len(c)

    def mean(v):
        return sum(v) / len(v)

    def std(v):
        m = mean(v)
        return math.sqrt(sum((x - m) ** 2 for x in v) / len(v))

    ms, mc, ss, sc = mean(s), mean(c), std(s), std(c)
    cc = 0.0 if ss == 0 or sc == 0 else sum((a - ms) * (b - mc) for a, b in zip(s, c)) / n / (ss * sc)
    nss = 0.0 if ss == 0 else mean([(a - ms) / ss for a, keep in zip(s, f) if keep])
    ps, pc = sum(s), sum(c)
    p = [v / ps for v in s]
    q = [v / pc for v in c]
    sim = sum(min(a, b) for a, b in zip(p, q))
    kl = sum(b * math.log(b / (a + 1e-12)) for a, b in zip(p, q) if b > 0)

    # Judd: thresholds at the fixated scores, negatives are all non-fixated pixels
    fixated = sorted((a for a, keep in zip(s, f) if keep), reverse=True)
    n_fix, n_neg = len(fixated), n - len(fixated)
    tp, fp = [0.0], [0.0]
    for i, t in enumerate(fixated, start=1):
        above = sum(1 for a in s if a >= t)
        tp.append(i / n_fix)
        fp.append((above - i) / n_neg)
    tp.append(1.0)
    fp.append(1.0)
    auc = sum((fp[i + 1] - fp[i]) * (tp[i + 1] + tp[i]) / 2 for i in range(len(tp) - 1))
    return {"auc_judd": auc, "sim": sim, "nss": nss, "cc": cc, "kl": kl}
