from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelSeries:
    """Uniformly sampled two-channel real series with odd length ``2K + 1``."""

    dt: float
    samples: np.ndarray
    labels: tuple[str, str] = ("ch1", "ch2")

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 2 or x.shape[0] != 2:
            raise ValueError(f"samples must have shape (2, N), got {x.shape}")
        n = x.shape[1]
        if n < 3 or n % 2 == 0:
            raise ValueError(f"sample count must be odd and >= 3, got {n}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def K(self) -> int:
        return (self.n - 1) // 2

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def replace(self, samples) -> "ChannelSeries":
        return ChannelSeries(self.dt, samples, self.labels)
