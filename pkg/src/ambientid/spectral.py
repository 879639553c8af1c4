"""DFT on odd-length series, frequency grids and one-sided PSD.

Forward transform is unnormalized, ``X_k = sum_n x_n exp(-2j pi k n / N)`` with
``N = 2K + 1``, keeping the ``K + 1`` nonnegative bins.  White noise of std
``sigma`` therefore has per-bin real and imaginary variance ``N sigma^2 / 2``
for ``k >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import ChannelSeries


@dataclass(frozen=True)
class FreqGrid:
    omegas: np.ndarray
    dt: float
    n_samples: int
    dc_excluded: bool = True

    @property
    def K(self) -> int:
        return self.omegas.shape[0] - 1

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / (self.n_samples * self.dt)

    @property
    def active(self) -> np.ndarray:
        """Bin indices used for inference."""
        start = 1 if self.dc_excluded else 0
        return np.arange(start, self.K + 1)


def frequency_grid(K: int, dt: float, dc_excluded: bool = True) -> FreqGrid:
    n = 2 * K + 1
    omegas = 2.0 * np.pi * np.arange(K + 1) / (n * dt)
    return FreqGrid(omegas, float(dt), n, dc_excluded)


@dataclass(frozen=True)
class Spectrum:
    grid: FreqGrid
    coeffs: np.ndarray  # (2, K + 1) complex

    def __post_init__(self):
        if self.coeffs.shape != (2, self.grid.K + 1):
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid with K={self.grid.K}"
            )


def dft(ts: ChannelSeries) -> Spectrum:
    coeffs = np.fft.rfft(ts.samples, axis=1)
    return Spectrum(frequency_grid(ts.K, ts.dt), coeffs)


def dft_direct(x: np.ndarray) -> np.ndarray:
    """O(N^2) reference transform of a real 1-D array of odd length."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    k = np.arange((n - 1) // 2 + 1)[:, None]
    m = np.arange(n)[None, :]
    # reduce k*m mod n first so the phase stays accurate for large n
    return np.exp(-2j * np.pi * ((k * m) % n) / n) @ x


def idft(sp: Spectrum, labels=("ch1", "ch2")) -> ChannelSeries:
    x = np.fft.irfft(sp.coeffs, n=sp.grid.n_samples, axis=1)
    return ChannelSeries(sp.grid.dt, x, labels)


def psd(sp: Spectrum, channel: int) -> np.ndarray:
    """One-sided PSD ``|X_k|^2 dt / N``, doubled for ``k >= 1``."""
    if channel not in (0, 1):
        raise IndexError(f"channel must be 0 or 1, got {channel}")
    return psd_of(sp.coeffs[channel], sp.grid)


def psd_of(coeffs: np.ndarray, grid: FreqGrid) -> np.ndarray:
    """PSD of an arbitrary coefficient row on ``grid``."""
    out = np.abs(coeffs) ** 2 * grid.dt / grid.n_samples
    out[..., 1:] *= 2.0
    return out
