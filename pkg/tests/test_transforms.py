import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aams.errors import DimensionError, ValidationError
from aams.transforms import EIG_EPS, FeatureStats, adain, channel_mean_std, color, feature_stats, whiten


def covariance_direct(f):
    """Sample covariance of flattened channels by explicit sums."""
    c = f.shape[0]
    x = f.reshape(c, -1).astype(np.float64)
    n = x.shape[1]
    mean = [sum(row) / n for row in x]
    cov = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            cov[i, j] = sum((x[i, k] - mean[i]) * (x[j, k] - mean[j]) for k in range(n)) / (n - 1)
    return cov


def full_rank_feature(r, c=8, h=6, w=6):
    mix = r.standard_normal((c, c))
    return (mix @ r.standard_normal((c, h * w)) + r.standard_normal((c, 1))).reshape(c, h, w).astype(np.float32)


class TestWhiten:
    def test_covariance_oracle(self, rng):
        f = full_rank_feature(rng)
        np.testing.assert_allclose(feature_stats(f).covariance, covariance_direct(f), atol=1e-9)

    def test_identity_covariance_input(self, rng):
        # orthonormal rows scaled so the sample covariance is exactly I
        q, _ = np.linalg.qr(rng.standard_normal((36, 4)))
        z = q.T - q.T.mean(axis=1, keepdims=True)
        z, _ = np.linalg.qr(z.T)
        f = (z.T * np.sqrt(35)).reshape(4, 6, 6).astype(np.float32)
        centered = f - f.mean(axis=(1, 2), keepdims=True)
        np.testing.assert_allclose(covariance_direct(f), np.eye(4), atol=1e-5)
        np.testing.assert_allclose(whiten(f)[0], centered, atol=1e-4)

    def test_constant_feature(self):
        out, stats = whiten(np.full((3, 4, 4), 2.5, np.float32))
        assert stats.rank == 0
        assert not out.any()

    def test_white_covariance(self, rng):
        f = full_rank_feature(rng)
        out, stats = whiten(f)
        assert stats.rank == 8
        np.testing.assert_allclose(covariance_direct(out), np.eye(8), atol=1e-4)

    def test_rank_deficient(self, rng):
        base = rng.standard_normal((3, 36))
        f = np.vstack([base, base[:1] + base[1:2]]).reshape(4, 6, 6).astype(np.float32)
        out, stats = whiten(f)
        assert stats.rank == 3
        cov = covariance_direct(out)
        vals = np.linalg.eigvalsh(cov)
        np.testing.assert_allclose(np.sort(vals)[1:], 1.0, atol=1e-4)
        assert abs(np.sort(vals)[0]) < 1e-4

    def test_single_location_rejected(self):
        with pytest.raises(ValidationError):
            whiten(np.zeros((2, 1, 1), np.float32))

    def test_jacobi_matches_lapack(self, rng):
        f = full_rank_feature(rng)
        np.testing.assert_allclose(whiten(f, method="jacobi")[0], whiten(f)[0], atol=1e-4)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_mean_zero(self, seed):
        out, _ = whiten(full_rank_feature(np.random.default_rng(seed), c=5, h=4, w=5))
        assert np.abs(out.reshape(5, -1).mean(axis=1)).max() <= 1e-5

    def test_stats_retained_components(self, rng):
        stats = feature_stats(full_rank_feature(rng, c=4))
        assert isinstance(stats, FeatureStats)
        assert np.all(stats.values > EIG_EPS)
        assert stats.vectors.shape == (4, stats.rank)
        np.testing.assert_allclose(stats.covariance, stats.covariance.T)


class TestColor:
    def test_round_trip_fifty(self):
        r = np.random.default_rng(17)
        for _ in range(50):
            f = full_rank_feature(r)
            f_hat, stats = whiten(f)
            back = color(f_hat, stats)
            assert np.linalg.norm(back - f) / np.linalg.norm(f) <= 1e-3

    def test_identity_stats(self, rng):
        stats = FeatureStats(np.zeros(3), np.eye(3), np.ones(3), np.eye(3), 3)
        f = rng.standard_normal((3, 4, 4)).astype(np.float32)
        np.testing.assert_allclose(color(f, stats), f, atol=1e-6)

    def test_zero_input_gives_mean(self, rng):
        stats = feature_stats(full_rank_feature(rng))
        out = color(np.zeros((8, 6, 6), np.float32), stats)
        np.testing.assert_allclose(out, np.broadcast_to(stats.mean[:, None, None], out.shape), atol=1e-5)

    def test_matches_style_covariance(self, rng):
        content = full_rank_feature(rng, c=4, h=40, w=40)
        style = full_rank_feature(rng, c=4, h=40, w=40)
        out = color(whiten(content)[0], feature_stats(style))
        np.testing.assert_allclose(covariance_direct(out), feature_stats(style).covariance, atol=1e-3)

    def test_channel_mismatch(self, rng):
        with pytest.raises(DimensionError):
            color(np.zeros((3, 2, 2), np.float32), feature_stats(full_rank_feature(rng, c=4)))


class TestAdain:
    def test_self(self, rng):
        f = rng.standard_normal((4, 5, 5)).astype(np.float32)
        np.testing.assert_allclose(adain(f, f), f, atol=1e-3)

    def test_flat_channel_gets_style_mean(self, rng):
        c = rng.standard_normal((2, 4, 4)).astype(np.float32)
        c[1] = 3.0
        s = rng.standard_normal((2, 5, 5)).astype(np.float32)
        out = adain(c, s)
        np.testing.assert_allclose(out[1], s[1].mean(), atol=1e-6)

    def test_statistics_match_style(self, rng):
        c = (rng.standard_normal((5, 8, 8)) * 2 + 1).astype(np.float32)
        s = (rng.standard_normal((5, 6, 7)) * 0.5 - 3).astype(np.float32)
        out = adain(c, s).astype(np.float64)
        for ch in range(5):
            xs = [float(v) for v in s[ch].ravel()]
            mu = sum(xs) / len(xs)
            sd = (sum((v - mu) ** 2 for v in xs) / len(xs)) ** 0.5
            assert abs(out[ch].mean() - mu) <= 1e-4
            assert abs(out[ch].std() - sd) <= 1e-4

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_idempotent(self, seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal((3, 5, 5)).astype(np.float32)
        s = (r.standard_normal((3, 4, 6)) * 3).astype(np.float32)
        once = adain(x, s)
        twice = adain(once, s)
        for a, b in zip(channel_mean_std(twice), channel_mean_std(once)):
            np.testing.assert_allclose(a, b, atol=1e-4)

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            adain(np.zeros((2, 2, 2), np.float32), np.zeros((3, 2, 2), np.float32))
