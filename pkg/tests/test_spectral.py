import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ambientid.spectral import Spectrum, dft, dft_direct, frequency_grid, idft, psd
from ambientid.timeseries import ChannelSeries


def series(x, dt=0.02):
    x = np.atleast_2d(x)
    if x.shape[0] == 1:
        x = np.vstack([x, np.zeros_like(x)])
    return ChannelSeries(dt, x)


def parseval_gap(ts):
    X = dft(ts).coeffs
    lhs = np.sum(ts.samples**2, axis=1)
    rhs = (np.abs(X[:, 0]) ** 2 + 2 * np.sum(np.abs(X[:, 1:]) ** 2, axis=1)) / ts.n
    return np.max(np.abs(lhs - rhs) / np.maximum(lhs, 1e-300))


def test_constant_series_is_dc_only():
    K, c = 10, 0.7
    X = dft(series(np.full(2 * K + 1, c))).coeffs[0]
    assert X[0].real == pytest.approx((2 * K + 1) * c, rel=1e-14)
    assert np.max(np.abs(X[1:])) < 1e-12


def test_single_tone():
    K, k0 = 50, 7
    n = 2 * K + 1
    X = dft(series(np.cos(2 * np.pi * k0 * np.arange(n) / n))).coeffs[0]
    assert X[k0] == pytest.approx(n / 2, abs=1e-10)
    others = np.delete(X, k0)
    assert np.max(np.abs(others)) < 1e-10


def test_parseval_random():
    rng = np.random.default_rng(1)
    ts = ChannelSeries(0.02, rng.standard_normal((2, 2001)))
    assert parseval_gap(ts) < 1e-10


def test_fast_path_matches_direct_transform():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(401)
    fast = dft(series(x)).coeffs[0]
    assert np.allclose(fast, dft_direct(x), rtol=0, atol=1e-10 * np.abs(fast).max())


def test_round_trip():
    rng = np.random.default_rng(3)
    ts = ChannelSeries(0.01, rng.standard_normal((2, 1001)))
    back = idft(dft(ts))
    assert np.max(np.abs(back.samples - ts.samples)) < 1e-10
    assert back.dt == ts.dt


def test_zero_spectrum_inverts_to_zero():
    g = frequency_grid(8, 0.1)
    assert np.all(idft(Spectrum(g, np.zeros((2, 9), complex))).samples == 0)


def test_single_bin_inverts_to_cosine():
    K, k0 = 20, 3
    n = 2 * K + 1
    coeffs = np.zeros((2, K + 1), complex)
    coeffs[0, k0] = n / 2
    x = idft(Spectrum(frequency_grid(K, 0.1), coeffs)).samples[0]
    assert np.allclose(x, np.cos(2 * np.pi * k0 * np.arange(n) / n), atol=1e-12)


def test_white_noise_psd_level():
    sigma, dt = 0.3, 0.02
    rng = np.random.default_rng(4)
    ts = ChannelSeries(dt, sigma * rng.standard_normal((2, 2001)))
    p = psd(dft(ts), 0)
    assert np.mean(p[1:]) == pytest.approx(2 * sigma**2 * dt, rel=0.1)


def test_white_noise_bin_variance_and_independence():
    # per-bin real/imag variance N sigma^2 / 2, uncorrelated, for k >= 1
    sigma, n, reps = 0.5, 21, 40000
    rng = np.random.default_rng(5)
    X = np.fft.rfft(sigma * rng.standard_normal((reps, n)), axis=1)[:, 1:]
    z = X / (sigma * np.sqrt(n / 2))
    assert np.allclose(z.real.var(axis=0), 1.0, atol=0.05)
    assert np.allclose(z.imag.var(axis=0), 1.0, atol=0.05)
    assert np.max(np.abs(np.mean(z.real * z.imag, axis=0))) < 0.05
    c = np.corrcoef(np.hstack([z.real, z.imag]).T)
    assert np.max(np.abs(c - np.eye(c.shape[0]))) < 0.05


def test_zero_series_zero_psd():
    ts = ChannelSeries(0.1, np.zeros((2, 11)))
    assert np.all(psd(dft(ts), 1) == 0)


def test_psd_rejects_bad_channel():
    ts = ChannelSeries(0.1, np.zeros((2, 11)))
    with pytest.raises(IndexError):
        psd(dft(ts), 2)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-10, 10), seed=st.integers(0, 2**32 - 1))
def test_psd_homogeneity(a, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, 101))
    p1 = psd(dft(ChannelSeries(0.1, x)), 0)
    p2 = psd(dft(ChannelSeries(0.1, a * x)), 0)
    assert np.allclose(p2, a * a * p1, rtol=1e-12, atol=1e-300)


@settings(max_examples=50, deadline=None)
@given(
    K=st.integers(1, 300),
    dt=st.floats(1e-3, 1.0),
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-6, 1e6),
)
def test_parseval_and_round_trip_property(K, dt, seed, scale):
    rng = np.random.default_rng(seed)
    ts = ChannelSeries(dt, scale * rng.standard_normal((2, 2 * K + 1)))
    assert parseval_gap(ts) < 1e-10
    back = idft(dft(ts)).samples
    assert np.max(np.abs(back - ts.samples)) <= 1e-10 * np.max(np.abs(ts.samples))


@settings(max_examples=30, deadline=None)
@given(
    u=arrays(np.float64, (2, 31), elements=st.floats(-1e3, 1e3)),
    v=arrays(np.float64, (2, 31), elements=st.floats(-1e3, 1e3)),
    a=st.floats(-5, 5),
    b=st.floats(-5, 5),
)
def test_dft_linearity(u, v, a, b):
    lhs = dft(ChannelSeries(1.0, a * u + b * v)).coeffs
    rhs = a * dft(ChannelSeries(1.0, u)).coeffs + b * dft(ChannelSeries(1.0, v)).coeffs
    scale = max(1.0, np.abs(a * u).sum() + np.abs(b * v).sum())
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


@settings(max_examples=50, deadline=None)
@given(K=st.integers(1, 5000), dt=st.floats(1e-4, 10.0))
def test_grid_formula(K, dt):
    g = frequency_grid(K, dt)
    k = np.arange(K + 1)
    assert np.array_equal(g.omegas, 2.0 * np.pi * k / ((2 * K + 1) * dt))
    assert g.K == K
    assert g.active[0] == 1 and g.active[-1] == K


def test_spectrum_shape_checked():
    with pytest.raises(ValueError):
        Spectrum(frequency_grid(4, 0.1), np.zeros((2, 4), complex))


def test_channel_series_validation():
    with pytest.raises(ValueError):
        ChannelSeries(0.1, np.zeros((2, 10)))
    with pytest.raises(ValueError):
        ChannelSeries(-0.1, np.zeros((2, 11)))
    with pytest.raises(ValueError):
        ChannelSeries(0.1, np.full((2, 11), np.nan))
    with pytest.raises(ValueError):
        ChannelSeries(0.1, np.zeros((3, 11)))


def test_channel_series_is_read_only():
    ts = ChannelSeries(0.1, np.zeros((2, 11)))
    with pytest.raises(ValueError):
        ts.samples[0, 0] = 1.0
    assert ts.K == 5
    assert np.allclose(ts.t, 0.1 * np.arange(11))
