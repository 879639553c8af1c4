"""Small-signal admittance models of a synchronous generator and an induction motor.

Both models map terminal-voltage fluctuations to terminal-current fluctuations
through a 2x2 complex matrix ``Y(omega, theta)``.  The generator uses polar
channels ``(V, theta) -> (I, phi)``; the motor uses rectangular d-q channels
``(v_d, v_q) -> (i_d, i_q)`` in the frame of the steady voltage phasor.

Generator
---------
Classical second-order model with the four uncertain parameters
``D, E', M, X'd``::

    M dw/dt = Pm - D w - E' V sin(delta - theta) / X'd
    d delta/dt = w
    Ibar = (E' exp(j delta) - V exp(j theta)) / (j X'd)

Linearizing the swing equation gives

    (M s^2 + D s + Ks) d_delta = -Kv dV + Ks d_theta,
    Ks = E' V0 cos(delta0 - theta0) / X'd,   Kv = E' sin(delta0 - theta0) / X'd

and the complex current perturbation per input is ``A + B / den(s)`` with
complex constants ``A, B`` and the real polynomial ``den = M s^2 + D s + Ks``.
Projecting onto the steady current phasor ``I0`` yields real-coefficient
transfers::

    dI   = Re(conj(I0) dIbar) / |I0|
    dphi = Im(conj(I0) dIbar) / |I0|^2

so ``Y_row(s) = Re/Im(conj(I0) A)/n + Re/Im(conj(I0) B)/(n den(s))``.

Motor
-----
Induction machine ``I = V / (R/sigma + jX)`` with per-unit mechanics
``(2H/we0) dwm/dt = (we0/we) pe - pm``.  The slip response is

    beta(s) dsigma = -2 we0 pe0 v_d / V0 + (2H (1 - sigma0) s^2 + pe0 s) v_q / V0
    beta(s) = 2 H we0 s + we0 pe0 (R^2 - sigma0^2 X^2) / (sigma0 (R^2 + sigma0^2 X^2))

and the current perturbation is
``(v_d + j v_q) sigma0 / (R + j sigma0 X) + V0 R / (R + j sigma0 X)^2 dsigma``.
With ``V0 = 1`` and ``pe0 = 1`` this reduces to the closed forms in
:func:`motor_admittance_unit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, SingularFrequency

POLE_TOL = 1e-14
WE0_50HZ = 2.0 * math.pi * 50.0


@dataclass(frozen=True)
class ParamVec:
    """Named, ordered parameter vector."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape[0] != len(self.names):
            raise ValueError(f"{len(self.names)} names but {values.shape[0]} values")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", values)

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    @classmethod
    def from_dict(cls, names, mapping) -> "ParamVec":
        return cls(tuple(names), np.array([float(mapping[n]) for n in names]))

    def __len__(self):
        return len(self.names)


@dataclass(frozen=True)
class GenParams:
    D: float
    E_prime: float
    M: float
    Xd_prime: float

    def __post_init__(self):
        if not (self.E_prime > 0 and self.M > 0 and self.Xd_prime > 0 and self.D >= 0):
            raise ValueError(f"invalid generator parameters {self}")

    def to_array(self) -> np.ndarray:
        return np.array([self.D, self.E_prime, self.M, self.Xd_prime])


@dataclass(frozen=True)
class GenOperatingPoint:
    V0: float
    theta0: float
    delta0: float
    Pm: float
    I0: complex


@dataclass(frozen=True)
class MotorParams:
    H: float = 0.5
    R: float = 0.08
    X: float = 0.2
    pm: float = 0.5
    V0: float = 1.0
    we0: float = WE0_50HZ

    def __post_init__(self):
        for name in ("H", "R", "X", "V0", "we0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"motor parameter {name} must be positive")
        if self.pm < 0:
            raise ValueError("motor parameter pm must be non-negative")

    @property
    def pe_max(self) -> float:
        """Peak electrical power over slip, reached at sigma = R/X."""
        return self.V0**2 / (2.0 * self.X)


@dataclass(frozen=True)
class AdmittanceEval:
    """2x2 complex admittance over a frequency grid, shape ``(K, 2, 2)``."""

    omega: np.ndarray
    Y: np.ndarray
    inputs: tuple[str, str] = ("u1", "u2")
    outputs: tuple[str, str] = ("y1", "y2")

    @property
    def Y11(self):
        return self.Y[..., 0, 0]

    @property
    def Y12(self):
        return self.Y[..., 0, 1]

    @property
    def Y21(self):
        return self.Y[..., 1, 0]

    @property
    def Y22(self):
        return self.Y[..., 1, 1]


# --------------------------------------------------------------------------
# generator


def gen_steady_state(p: GenParams, V0: float, theta0: float, Pm: float) -> GenOperatingPoint:
    ratio = Pm * p.Xd_prime / (p.E_prime * V0)
    if not abs(ratio) < 1.0:
        raise Infeasible(f"no generator equilibrium: Pm*Xd'/(E'V0) = {ratio:.6g}")
    delta0 = theta0 + math.asin(ratio)
    I0 = (p.E_prime * np.exp(1j * delta0) - V0 * np.exp(1j * theta0)) / (1j * p.Xd_prime)
    return GenOperatingPoint(V0=V0, theta0=theta0, delta0=delta0, Pm=Pm, I0=complex(I0))


def _gen_matrix(D, E, M, X, V0, theta0, Pm, omega):
    """Vectorized generator admittance.

    Parameter arrays broadcast against each other (shape ``P``); ``omega`` has
    shape ``(K,)``.  Returns ``Y`` of shape ``P + (K, 2, 2)`` plus a boolean
    mask of shape ``P`` flagging infeasible parameter sets and a mask of shape
    ``P + (K,)`` flagging pole hits.  Invalid entries are NaN.
    """
    D, E, M, X = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (D, E, M, X)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = Pm * X / (E * V0)
        infeasible = ~(np.abs(ratio) < 1.0) | ~(X > 0) | ~(E > 0)
        delta0 = theta0 + np.arcsin(np.where(infeasible, 0.0, ratio))
        e_d = np.exp(1j * delta0)
        e_t = np.exp(1j * theta0)
        I0 = (E * e_d - V0 * e_t) / (1j * X)
        absI = np.abs(I0)
        infeasible |= ~(absI > 1e-12)

        Ks = E * V0 * np.cos(delta0 - theta0) / X
        Kv = E * np.sin(delta0 - theta0) / X
        # dIbar = A + B/den per input channel (V, theta)
        A_v = -e_t / (1j * X)
        B_v = -E * e_d * Kv / X
        A_t = -V0 * e_t / X + 0j
        B_t = E * e_d * Ks / X

        c = np.conj(I0)
        n1 = np.where(infeasible, 1.0, absI)
        n2 = n1 * n1

        s = 1j * np.asarray(omega, dtype=float)
        ex = (...,) + (None,)
        den = M[ex] * s**2 + D[ex] * s + Ks[ex]
        pole = np.abs(den) < POLE_TOL
        den = np.where(pole, np.nan, den)

        Y = np.empty(D.shape + (s.shape[0], 2, 2), dtype=complex)
        for col, (A, B) in enumerate(((A_v, B_v), (A_t, B_t))):
            cA, cB = c * A, c * B
            Y[..., 0, col] = (cA.real / n1)[ex] + (cB.real / n1)[ex] / den
            Y[..., 1, col] = (cA.imag / n2)[ex] + (cB.imag / n2)[ex] / den
    Y[infeasible] = np.nan
    return Y, infeasible, pole


def gen_admittance(p: GenParams, op: GenOperatingPoint, omega) -> AdmittanceEval:
    """Admittance from ``(dV, dtheta)`` to ``(dI, dphi)`` at angular frequencies ``omega``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if abs(op.I0) <= 1e-12:
        raise Infeasible("current phase is undefined at zero steady current")
    Y, infeasible, pole = _gen_matrix(
        p.D, p.E_prime, p.M, p.Xd_prime, op.V0, op.theta0, op.Pm, omega
    )
    if infeasible:
        raise Infeasible("operating point inconsistent with parameters")
    if pole.any():
        raise SingularFrequency(f"swing-mode pole at omega={omega[pole][0]:.6g}")
    return AdmittanceEval(omega, Y, inputs=("V", "theta"), outputs=("I", "phi"))


# --------------------------------------------------------------------------
# induction motor


def motor_pe(sigma, R, X, V):
    """Electrical power drawn at slip ``sigma``."""
    return sigma * R * V**2 / (R**2 + sigma**2 * X**2)


def motor_steady_state(p: MotorParams, tol: float = 1e-12) -> float:
    """Stable-branch slip solving ``Pe(sigma) = pm`` by bisection on ``(0, R/X)``."""
    if p.pm == 0.0:
        return 0.0
    hi = p.R / p.X
    if not p.pm < motor_pe(hi, p.R, p.X, p.V0):
        raise Infeasible(f"pm={p.pm} exceeds peak motor power {p.pe_max:.6g}")
    lo = 0.0
    # Pe is increasing on (0, R/X)
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if motor_pe(mid, p.R, p.X, p.V0) < p.pm:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def motor_steady_power(p: MotorParams, sigma0: float | None = None) -> complex:
    """Steady ``P + jQ = V0 conj(I0)`` in the units of ``p``."""
    if sigma0 is None:
        sigma0 = motor_steady_state(p)
    I0 = p.V0 * sigma0 / (p.R + 1j * sigma0 * p.X)
    return complex(p.V0 * np.conj(I0))


def _slip_vec(R, X, pm, V0, n_iter=60):
    """Vectorized stable-branch slip; NaN where no operating point exists."""
    hi = R / X
    feasible = pm < motor_pe(hi, R, X, V0)
    lo = np.zeros_like(hi)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = motor_pe(mid, R, X, V0) < pm
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.where(feasible, 0.5 * (lo + hi), np.nan)


def _motor_matrix(H, R, X, pm, V0, we0, omega, tau=None, sigma0=None):
    H, R, X = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (H, R, X)))
    with np.errstate(divide="ignore", invalid="ignore"):
        if sigma0 is None:
            sigma0 = _slip_vec(np.where(X > 0, R, np.nan), X, pm, V0)
    infeasible = ~np.isfinite(sigma0) | ~(sigma0 > 0) | ~(H > 0) | ~(R > 0)
    sg = np.where(infeasible, 1.0, sigma0)
    z2 = R**2 + sg**2 * X**2
    pe0 = sg * R * V0**2 / z2
    k = sg / (R + 1j * sg * X)  # (P - jQ)/V0^2
    c = V0 * R / (R + 1j * sg * X) ** 2  # current per unit slip
    a = pe0 * (R**2 - sg**2 * X**2) / (sg * z2)

    ex = (...,) + (None,)
    s = 1j * np.asarray(omega, dtype=float)
    s_f = s if tau is None else s / (tau * s + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = we0 * (2.0 * H[ex] * s + a[ex])
        pole = np.abs(beta) < POLE_TOL
        beta = np.where(pole, np.nan, beta)
        ds_dvd = -2.0 * we0 * pe0[ex] / (V0 * beta)
        ds_dvq = (2.0 * H[ex] * (1.0 - sg[ex]) * s + pe0[ex]) * s_f / (V0 * beta)

    Y = np.empty(H.shape + (s.shape[0], 2, 2), dtype=complex)
    Y[..., 0, 0] = k.real[ex] + c.real[ex] * ds_dvd
    Y[..., 0, 1] = -k.imag[ex] + c.real[ex] * ds_dvq
    Y[..., 1, 0] = k.imag[ex] + c.imag[ex] * ds_dvd
    Y[..., 1, 1] = k.real[ex] + c.imag[ex] * ds_dvq
    Y[infeasible] = np.nan
    return Y, infeasible, pole


def motor_admittance(p: MotorParams, omega, tau: float | None = None) -> AdmittanceEval:
    """Admittance from ``(v_d, v_q)`` to ``(i_d, i_q)``.

    ``tau`` replaces the exact frequency derivative ``s`` by the filtered
    derivative ``s / (tau s + 1)`` used by the nonlinear simulator; ``None``
    gives the ideal small-signal model.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    sigma0 = motor_steady_state(p)
    if sigma0 == 0.0:
        raise Infeasible("admittance undefined at zero slip (no load)")
    Y, _, pole = _motor_matrix(p.H, p.R, p.X, p.pm, p.V0, p.we0, omega, tau, np.array(sigma0))
    if pole.any():
        raise SingularFrequency(f"slip-dynamics pole at omega={omega[pole][0]:.6g}")
    return AdmittanceEval(omega, Y, inputs=("v_d", "v_q"), outputs=("i_d", "i_q"))


def motor_admittance_unit(H, R, X, sigma0, we0, q_e0, omega):
    """Closed-form entries for the ``V0 = 1, pe0 = 1`` per-unit choice.

    Only meaningful when ``sigma0 R / (R^2 + sigma0^2 X^2) == 1``.
    """
    s = 1j * np.asarray(omega, dtype=float)
    d = R**2 - sigma0**2 * X**2
    beta = 2 * H * we0 * s + we0 * d / (sigma0 * (R**2 + sigma0**2 * X**2))
    mech = 2 * H * (1 - sigma0) * s**2 + s
    Y = np.empty(s.shape + (2, 2), dtype=complex)
    Y[..., 0, 0] = 1 - 2 * we0 * d / (sigma0**2 * R * beta)
    Y[..., 0, 1] = q_e0 + mech * d / (sigma0**2 * R * beta)
    Y[..., 1, 0] = -q_e0 + 4 * we0 * X / (sigma0 * beta)
    Y[..., 1, 1] = 1 - 2 * X * mech / (sigma0 * beta)
    return Y


# --------------------------------------------------------------------------
# models used by inference


@dataclass(frozen=True)
class GeneratorModel:
    """Generator admittance as a function of ``theta = (D, E', M, X'd)``.

    The terminal voltage ``V0, theta0`` and mechanical power ``Pm`` are the
    measured operating conditions; the rotor angle and steady current are
    recomputed from each candidate ``theta``.
    """

    V0: float = 1.0
    theta0: float = 0.0
    Pm: float = 0.5
    param_names: tuple[str, ...] = field(default=("D", "E_prime", "M", "Xd_prime"), init=False)
    inputs: tuple[str, str] = field(default=("V", "theta"), init=False)
    outputs: tuple[str, str] = field(default=("I", "phi"), init=False)

    def matrix(self, theta, omega, strict: bool = True) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        Y, infeasible, pole = _gen_matrix(
            theta[..., 0], theta[..., 1], theta[..., 2], theta[..., 3],
            self.V0, self.theta0, self.Pm, np.asarray(omega, dtype=float),
        )
        if strict:
            if np.any(infeasible):
                raise Infeasible("no generator equilibrium for these parameters")
            if np.any(pole):
                raise SingularFrequency("swing-mode pole on the frequency grid")
        return Y

    def operating_point(self, theta) -> GenOperatingPoint:
        return gen_steady_state(GenParams(*np.asarray(theta, dtype=float)), self.V0, self.theta0, self.Pm)


@dataclass(frozen=True)
class MotorModel:
    """Motor admittance as a function of ``theta = (H, R, X)``."""

    pm: float = 0.5
    V0: float = 1.0
    we0: float = WE0_50HZ
    tau: float | None = None
    param_names: tuple[str, ...] = field(default=("H", "R", "X"), init=False)
    inputs: tuple[str, str] = field(default=("v_d", "v_q"), init=False)
    outputs: tuple[str, str] = field(default=("i_d", "i_q"), init=False)

    def matrix(self, theta, omega, strict: bool = True) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        Y, infeasible, pole = _motor_matrix(
            theta[..., 0], theta[..., 1], theta[..., 2],
            self.pm, self.V0, self.we0, np.asarray(omega, dtype=float), self.tau,
        )
        if strict:
            if np.any(infeasible):
                raise Infeasible("no motor operating point for these parameters")
            if np.any(pole):
                raise SingularFrequency("slip-dynamics pole on the frequency grid")
        return Y

    def params(self, theta) -> MotorParams:
        H, R, X = (float(v) for v in theta)
        return MotorParams(H=H, R=R, X=X, pm=self.pm, V0=self.V0, we0=self.we0)


GEN_TRUE = np.array([0.25, 1.0, 1.0, 0.01])
MOTOR_TRUE = np.array([0.5, 0.08, 0.2])


def make_model(name: str, **kwargs):
    if name == "generator":
        return GeneratorModel(**kwargs)
    if name == "motor":
        return MotorModel(**kwargs)
    raise ValueError(f"unknown model {name!r}")
