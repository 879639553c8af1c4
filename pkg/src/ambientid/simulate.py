"""Synthetic ambient data: white-noise inputs, linear output synthesis,
measurement noise at a prescribed SNR, and nonlinear time-domain simulators
used as small-signal oracles.

Random streams use numpy's PCG64.  Child seeds for scenarios are derived from
a root seed with :func:`child_seed` (splitmix64 finalizer), which is portable
and independent of how many other children were drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StateBlowup, ZeroSignal
from .model import GenParams, MotorParams, gen_steady_state, motor_pe, motor_steady_state
from .spectral import dft, idft
from .timeseries import ChannelSeries

_MASK64 = (1 << 64) - 1

DEFAULT_DT = 0.02
DEFAULT_K = 1000
DEFAULT_SIGMA_U = 0.01
DEFAULT_TAU = 0.02


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def child_seed(root: int, *path: int) -> int:
    """Seed for the stream addressed by ``path`` under ``root``."""
    s = splitmix64(int(root) & _MASK64)
    for p in path:
        s = splitmix64(s ^ (int(p) & _MASK64))
    return s


@dataclass(frozen=True)
class NoiseSpec:
    snr: float
    rng_seed: int

    def __post_init__(self):
        if not self.snr > 0:
            raise ValueError(f"snr must be positive, got {self.snr}")


@dataclass(frozen=True)
class MotorState:
    omega_m: np.ndarray
    z: np.ndarray
    sigma: np.ndarray
    pe: np.ndarray


def ambient_input(K: int, dt: float, sigma_u: float, seed: int, labels=("V", "theta")) -> ChannelSeries:
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not sigma_u > 0:
        raise ValueError(f"sigma_u must be positive, got {sigma_u}")
    rng = np.random.default_rng(seed)
    return ChannelSeries(dt, sigma_u * rng.standard_normal((2, 2 * K + 1)), labels)


def synthesize_output(model, theta, u: ChannelSeries) -> ChannelSeries:
    """Pass ``u`` through ``Y(omega, theta)`` bin by bin; the DC bin is zeroed."""
    sp = dft(u)
    Y = model.matrix(np.asarray(theta, dtype=float), sp.grid.omegas[1:])
    out = np.zeros_like(sp.coeffs)
    out[:, 1:] = np.einsum("kij,jk->ik", Y, sp.coeffs[:, 1:])
    sp_y = type(sp)(sp.grid, out)
    return idft(sp_y, labels=getattr(model, "outputs", ("ch1", "ch2")))


def add_noise(ts: ChannelSeries, spec: NoiseSpec) -> tuple[ChannelSeries, np.ndarray]:
    """Add white Gaussian noise with per-channel std ``RMS(channel) / snr``."""
    rms = np.sqrt(np.mean(ts.samples**2, axis=1))
    if np.any(rms < 1e-15):
        raise ZeroSignal(f"channel RMS {rms.min():.3g} too small to set an SNR")
    sigma = rms / spec.snr
    rng = np.random.default_rng(spec.rng_seed)
    noisy = ts.samples + sigma[:, None] * rng.standard_normal(ts.samples.shape)
    return ts.replace(noisy), sigma


# --------------------------------------------------------------------------
# nonlinear simulators


def _rk4(f, x, dt, u0, u1):
    um = tuple(0.5 * (a + b) for a, b in zip(u0, u1))
    k1 = f(x, u0)
    k2 = f(tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k1)), um)
    k3 = f(tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k2)), um)
    k4 = f(tuple(xi + dt * ki for xi, ki in zip(x, k3)), u1)
    return tuple(xi + dt / 6.0 * (a + 2 * b + 2 * c + d) for xi, a, b, c, d in zip(x, k1, k2, k3, k4))


def simulate_motor_nonlinear(p: MotorParams, v_mag, v_phase, tau: float = DEFAULT_TAU, dt: float = 1e-3):
    """Integrate the per-unit induction-motor model with fixed-step RK4.

    ``v_mag`` and ``v_phase`` are sampled every ``dt`` (linear interpolation
    at RK4 half steps).  The electrical frequency comes from the filtered
    derivative of the voltage phase.  Returns the d-q current perturbation
    (relative to the steady current) and the state trace.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    v_mag = np.asarray(v_mag, dtype=float)
    v_phase = np.asarray(v_phase, dtype=float)
    n = v_mag.shape[0]
    R, X, H, pm, we0 = p.R, p.X, p.H, p.pm, p.we0
    sigma0 = motor_steady_state(p)
    inv_tau = 1.0 / tau
    k_mech = we0 / (2.0 * H)

    def rhs(x, u):
        wm, z = x
        U, th = u
        we = we0 + (z + th) * inv_tau
        sg = 1.0 - wm / we
        pe = sg * R * U * U / (R * R + sg * sg * X * X)
        return (k_mech * (we0 / we * pe - pm), -(z + th) * inv_tau)

    wm = np.empty(n)
    z = np.empty(n)
    x = ((1.0 - sigma0) * we0, -v_phase[0])
    wm[0], z[0] = x
    for i in range(n - 1):
        x = _rk4(rhs, x, dt, (v_mag[i], v_phase[i]), (v_mag[i + 1], v_phase[i + 1]))
        wm[i + 1], z[i + 1] = x
        we = we0 + (x[1] + v_phase[i + 1]) * inv_tau
        if not abs(1.0 - x[0] / we) <= 1.0:
            raise StateBlowup(f"slip left [-1, 1] at step {i + 1}")

    we = we0 + (z + v_phase) * inv_tau
    sigma = 1.0 - wm / we
    V = v_mag * np.exp(1j * v_phase)
    I = V * sigma / (R + 1j * sigma * X)
    I0 = p.V0 * sigma0 / (R + 1j * sigma0 * X)
    dI = I - I0
    pe = motor_pe(sigma, R, X, v_mag)
    states = MotorState(omega_m=wm, z=z, sigma=sigma, pe=pe)
    currents = np.vstack([dI.real, dI.imag])
    if n % 2 == 1 and n >= 3:
        return ChannelSeries(dt, currents, ("i_d", "i_q")), states
    return currents, states


def simulate_gen_nonlinear(p: GenParams, Pm: float, v_mag, v_phase, dt: float = 5e-3):
    """Integrate the classical swing model with fixed-step RK4.

    Starts at the equilibrium for the first input sample and returns the
    polar current perturbation ``(dI, dphi)`` plus ``(delta, w)`` traces.
    """
    v_mag = np.asarray(v_mag, dtype=float)
    v_phase = np.asarray(v_phase, dtype=float)
    n = v_mag.shape[0]
    D, E, M, X = p.D, p.E_prime, p.M, p.Xd_prime
    op = gen_steady_state(p, float(v_mag[0]), float(v_phase[0]), Pm)

    def rhs(x, u):
        d, w = x
        V, th = u
        return (w, (Pm - D * w - E * V * math.sin(d - th) / X) / M)

    delta = np.empty(n)
    w = np.empty(n)
    x = (op.delta0, 0.0)
    delta[0], w[0] = x
    for i in range(n - 1):
        x = _rk4(rhs, x, dt, (v_mag[i], v_phase[i]), (v_mag[i + 1], v_phase[i + 1]))
        delta[i + 1], w[i + 1] = x

    I = (E * np.exp(1j * delta) - v_mag * np.exp(1j * v_phase)) / (1j * X)
    dI = np.abs(I) - abs(op.I0)
    dphi = np.unwrap(np.angle(I)) - np.angle(op.I0)
    currents = np.vstack([dI, dphi])
    return currents, (delta, w)


def sine_probe(simulator, base, channel: int, freq_hz: float, amplitude: float = 1e-4,
               dt: float = 1e-3, settle: float = 2.0, periods: int = 2, scale=(1.0, 1.0)):
    """Complex small-signal response of a nonlinear simulator to one input channel.

    ``simulator(v_mag, v_phase, dt)`` returns a ``(2, n)`` perturbation array
    (or a ChannelSeries).  ``base`` is the steady ``(V0, theta0)``.  The
    input on ``channel`` becomes ``base + amplitude sin(2 pi f t)``; the output
    is projected onto ``exp(j 2 pi f t)`` over an integer number of periods
    after ``settle`` seconds.  ``scale`` converts the raw input perturbation
    into the model's input units (e.g. ``V0`` for a phase-to-``v_q`` probe).
    Returns the 2-vector ``Y[:, channel]`` estimate.
    """
    period = 1.0 / freq_hz
    per_period = max(int(round(period / dt)), 8)
    dt = period / per_period
    n_settle = int(math.ceil(settle / period)) * per_period
    n = n_settle + periods * per_period + 1
    t = np.arange(n) * dt
    w = 2.0 * math.pi * freq_hz
    probe = amplitude * np.sin(w * t)
    v = [np.full(n, base[0], dtype=float), np.full(n, base[1], dtype=float)]
    v[channel] = v[channel] + probe
    out = simulator(v[0], v[1], dt)
    if isinstance(out, tuple):
        out = out[0]
    if isinstance(out, ChannelSeries):
        out = out.samples
    win = slice(n_settle, n - 1)
    phasor = np.exp(-1j * w * t[win])
    c_in = 2.0 / (periods * per_period) * np.sum(probe[win] * phasor) * scale[channel]
    c_out = 2.0 / (periods * per_period) * (out[:, win] @ phasor)
    return c_out / c_in
