"""Frequency-domain MAP objective.

Spectra are whitened channelwise by ``sigma * sqrt(N / 2)`` so that the DFT of
the measurement noise has unit variance in each real and imaginary part.  In
whitened units the admittance becomes ``Yw = S_y^-1 Y S_u`` and the noise term
``q = eta - Yw eps`` has per-bin covariance ``I + B B^T``, where ``B`` is the
real 4x4 representation of ``Yw`` acting on ``[x1_r, x1_i, x2_r, x2_i]``.
Bins are independent, so the misfit is a sum of 4x4 quadratic forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteObjective
from .model import ParamVec
from .spectral import Spectrum


@dataclass(frozen=True)
class Prior:
    mean: ParamVec
    variances: np.ndarray

    def __post_init__(self):
        var = np.asarray(self.variances, dtype=float).reshape(-1)
        if var.shape[0] != len(self.mean):
            raise ValueError("prior variance dimension does not match the mean")
        if not np.all(var > 0):
            raise ValueError("prior variances must be positive")
        object.__setattr__(self, "variances", var)

    def penalty(self, theta) -> np.ndarray:
        d = np.asarray(theta, dtype=float) - self.mean.values
        return np.sum(d * d / self.variances, axis=-1)


@dataclass(frozen=True)
class ObjectiveValue:
    total: float
    misfit: float
    prior_penalty: float


@dataclass(frozen=True)
class PosteriorProblem:
    u_spectrum: Spectrum
    y_spectrum: Spectrum
    model: object
    noise_std_u: np.ndarray
    noise_std_y: np.ndarray
    prior: Prior
    active: np.ndarray | None = None
    # derived, whitened data on the active bins
    _omega: np.ndarray = field(init=False, repr=False)
    _uw: np.ndarray = field(init=False, repr=False)
    _yw: np.ndarray = field(init=False, repr=False)
    _scale: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        gu, gy = self.u_spectrum.grid, self.y_spectrum.grid
        if gu.n_samples != gy.n_samples or gu.dt != gy.dt:
            raise ValueError("input and output spectra must share one frequency grid")
        su = np.broadcast_to(np.asarray(self.noise_std_u, dtype=float), (2,)).copy()
        sy = np.broadcast_to(np.asarray(self.noise_std_y, dtype=float), (2,)).copy()
        if not (np.all(su > 0) and np.all(sy > 0)):
            raise ValueError("noise stds must be positive")
        active = gu.active if self.active is None else np.asarray(self.active, dtype=int)
        if np.any(active < 1) or np.any(active > gu.K):
            raise ValueError("active bins must lie in 1..K (DC is never used)")
        active = np.unique(active)
        norm = np.sqrt(gu.n_samples / 2.0)
        object.__setattr__(self, "noise_std_u", su)
        object.__setattr__(self, "noise_std_y", sy)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "_omega", gu.omegas[active])
        object.__setattr__(self, "_uw", (self.u_spectrum.coeffs[:, active] / (su * norm)[:, None]).T)
        object.__setattr__(self, "_yw", (self.y_spectrum.coeffs[:, active] / (sy * norm)[:, None]).T)
        # Yw_ij = Y_ij * su_j / sy_i
        object.__setattr__(self, "_scale", su[None, :] / sy[:, None])

    @property
    def omegas(self) -> np.ndarray:
        return self._omega

    @property
    def n_params(self) -> int:
        return len(self.prior.mean)

    def whitened_admittance(self, theta, strict: bool = True) -> np.ndarray:
        """``Yw`` on the active bins, shape ``theta.shape[:-1] + (n_active, 2, 2)``."""
        return self.model.matrix(theta, self._omega, strict=strict) * self._scale

    def _bin_pos(self, k: int) -> int:
        pos = np.searchsorted(self.active, k)
        if pos >= self.active.shape[0] or self.active[pos] != k:
            raise IndexError(f"bin {k} is not active")
        return int(pos)


def real_block(Y: np.ndarray) -> np.ndarray:
    """Real ``(..., 4, 4)`` representation of complex ``(..., 2, 2)`` matrices.

    Row/column order is ``[1_r, 1_i, 2_r, 2_i]``.
    """
    B = np.empty(Y.shape[:-2] + (4, 4))
    B[..., 0::2, 0::2] = Y.real
    B[..., 0::2, 1::2] = -Y.imag
    B[..., 1::2, 0::2] = Y.imag
    B[..., 1::2, 1::2] = Y.real
    return B


def real_vec(x: np.ndarray) -> np.ndarray:
    """``(..., 2)`` complex -> ``(..., 4)`` real ``[1_r, 1_i, 2_r, 2_i]``."""
    out = np.empty(x.shape[:-1] + (4,))
    out[..., 0::2] = x.real
    out[..., 1::2] = x.imag
    return out


def covariance_from_admittance(Yw: np.ndarray) -> np.ndarray:
    B = real_block(Yw)
    G = B @ np.swapaxes(B, -1, -2)
    G[..., range(4), range(4)] += 1.0
    return G


def residuals(pp: PosteriorProblem, theta, Yw=None) -> np.ndarray:
    """Whitened complex residuals on all active bins, shape ``(..., n_active, 2)``."""
    if Yw is None:
        Yw = pp.whitened_admittance(theta)
    u1, u2 = pp._uw[:, 0], pp._uw[:, 1]
    out = np.empty(Yw.shape[:-1], dtype=complex)
    out[..., 0] = pp._yw[:, 0] - (Yw[..., 0, 0] * u1 + Yw[..., 0, 1] * u2)
    out[..., 1] = pp._yw[:, 1] - (Yw[..., 1, 0] * u1 + Yw[..., 1, 1] * u2)
    return out


def residual(pp: PosteriorProblem, theta, k: int) -> np.ndarray:
    pos = pp._bin_pos(k)
    Yw = pp.model.matrix(np.asarray(theta, dtype=float), pp._omega[pos:pos + 1]) * pp._scale
    return pp._yw[pos] - Yw[0] @ pp._uw[pos]


def noise_covariance(pp: PosteriorProblem, theta, k: int) -> np.ndarray:
    pos = pp._bin_pos(k)
    Yw = pp.model.matrix(np.asarray(theta, dtype=float), pp._omega[pos:pos + 1]) * pp._scale
    return covariance_from_admittance(Yw[0])


def _chol_quad(G: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``r^T G^-1 r`` per leading index via Cholesky and forward substitution."""
    L = np.linalg.cholesky(G)
    z = np.empty_like(r)
    for i in range(4):
        acc = r[..., i]
        for j in range(i):
            acc = acc - L[..., i, j] * z[..., j]
        z[..., i] = acc / L[..., i, i]
    return np.sum(z * z, axis=-1)


def _inv_quad(G: np.ndarray, r: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...ij,...j->...", r, np.linalg.inv(G), r)


def _hermitian_quad(Yw: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``r^H (I + Yw Yw^H)^-1 r`` in closed form.

    Same value as the real 4x4 form: the real representation maps ``Yw^H``
    to ``B^T`` and Hermitian quadratic forms to real ones.
    """
    y11, y12 = Yw[..., 0, 0], Yw[..., 0, 1]
    y21, y22 = Yw[..., 1, 0], Yw[..., 1, 1]
    a11 = 1.0 + _abs2(y11) + _abs2(y12)
    a22 = 1.0 + _abs2(y21) + _abs2(y22)
    a12 = y11 * y21.conj() + y12 * y22.conj()
    det = a11 * a22 - _abs2(a12)
    r1, r2 = r[..., 0], r[..., 1]
    num = a22 * _abs2(r1) + a11 * _abs2(r2) - 2.0 * (r1.conj() * a12 * r2).real
    return num / det


def _abs2(z):
    return z.real * z.real + z.imag * z.imag


METHODS = ("hermitian", "cholesky", "inverse")


def misfit_terms(pp: PosteriorProblem, theta, method: str = "hermitian", strict: bool = True) -> np.ndarray:
    """Per-bin misfit ``r_k^T Gamma_k^-1 r_k``, shape ``(..., n_active)``.

    ``method`` selects the linear algebra: closed-form 2x2 Hermitian solve
    (fast), batched 4x4 Cholesky, or explicit 4x4 inverse.
    """
    Yw = pp.whitened_admittance(theta, strict=strict)
    rc = residuals(pp, theta, Yw)
    if method == "hermitian":
        return _hermitian_quad(Yw, rc)
    r = real_vec(rc)
    G = covariance_from_admittance(Yw)
    if method == "cholesky":
        return _chol_quad(G, r)
    if method == "inverse":
        return _inv_quad(G, r)
    raise ValueError(f"unknown method {method!r}")


def objective(pp: PosteriorProblem, theta, method: str = "hermitian") -> ObjectiveValue:
    theta = np.asarray(theta, dtype=float)
    misfit = float(np.sum(misfit_terms(pp, theta, method)))
    penalty = float(pp.prior.penalty(theta))
    total = misfit + penalty
    if not np.isfinite(total):
        raise NonFiniteObjective(f"objective is {total} at theta={theta}")
    return ObjectiveValue(total=total, misfit=misfit, prior_penalty=penalty)


def objective_batch(pp: PosteriorProblem, thetas) -> np.ndarray:
    """Total objective for a stack of parameter vectors ``(n, d)``.

    Infeasible or singular points evaluate to ``+inf`` instead of raising.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    Yw = pp.whitened_admittance(thetas, strict=False)
    bad = ~np.all(np.isfinite(Yw), axis=(-3, -2, -1))
    Yw = np.where(bad[:, None, None, None], 0.0, Yw)
    misfit = np.sum(_hermitian_quad(Yw, residuals(pp, thetas, Yw)), axis=-1)
    total = misfit + pp.prior.penalty(thetas)
    total[bad | ~np.isfinite(total)] = np.inf
    return total


def log_det(pp: PosteriorProblem, theta) -> float:
    """Sum of per-bin ``log det Gamma_k``; diagnostic only, never optimized."""
    G = covariance_from_admittance(pp.whitened_admittance(np.asarray(theta, dtype=float)))
    return float(np.sum(np.linalg.slogdet(G)[1]))
