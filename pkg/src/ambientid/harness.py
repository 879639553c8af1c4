"""Random-prior scenarios, SNR sweeps and before/after PSD comparison.

Every scenario draws its prior uniformly within +-50% of the true parameters
and uses a prior std of 50% of the true magnitude.  Seeds come from the root
seed and the scenario id only, so the same priors and data realizations are
reused at every SNR and adding SNR points never reshuffles scenarios.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .inference import PosteriorProblem, Prior, objective, objective_batch
from .model import GEN_TRUE, ParamVec, make_model
from .optimize import CEConfig, cross_entropy, quasi_newton
from .simulate import (
    DEFAULT_DT,
    DEFAULT_K,
    DEFAULT_SIGMA_U,
    NoiseSpec,
    add_noise,
    ambient_input,
    child_seed,
    synthesize_output,
)
from .spectral import dft
from .timeseries import ChannelSeries

log = logging.getLogger(__name__)

METHODS = ("ce", "qn")

# stream ids under each scenario
STREAM_PRIOR, STREAM_INPUT, STREAM_NOISE_U, STREAM_NOISE_Y, STREAM_OPT = range(5)


@dataclass(frozen=True)
class Setup:
    """Everything a scenario needs besides its id and SNR."""

    model_name: str = "generator"
    model_kwargs: dict = field(default_factory=dict)
    theta_true: np.ndarray = field(default_factory=lambda: GEN_TRUE.copy())
    dt: float = DEFAULT_DT
    K: int = DEFAULT_K
    sigma_u: float = DEFAULT_SIGMA_U
    prior_spread: float = 0.5
    prior_std_frac: float = 0.5
    bounds_frac: tuple[float, float] = (0.1, 3.0)
    ce: CEConfig = field(default_factory=CEConfig)
    qn_tol: float = 1e-6
    qn_max_iter: int = 200
    qn_h_rel: float = 1e-6
    noise_free_snr: float = 1e3

    @property
    def model(self):
        return make_model(self.model_name, **self.model_kwargs)


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: int
    snr: float | None
    root_seed: int = 0

    def seed(self, stream: int) -> int:
        return child_seed(self.root_seed, self.scenario_id, stream)

    def draw_prior(self, setup: Setup) -> np.ndarray:
        rng = np.random.default_rng(self.seed(STREAM_PRIOR))
        lo, hi = 1.0 - setup.prior_spread, 1.0 + setup.prior_spread
        return setup.theta_true * rng.uniform(lo, hi, size=setup.theta_true.shape)


@dataclass(frozen=True)
class ScenarioResult:
    scenario_id: int
    snr: float
    method: str
    names: tuple[str, ...]
    theta_true: np.ndarray
    theta_prior: np.ndarray
    theta_post: np.ndarray
    objective_final: float
    iterations: int
    termination: str
    n_evals: int
    runtime_s: float


@dataclass(frozen=True)
class SyntheticData:
    u: ChannelSeries
    y: ChannelSeries
    u_meas: ChannelSeries
    y_meas: ChannelSeries
    noise_std_u: np.ndarray
    noise_std_y: np.ndarray


def synthesize(setup: Setup, spec: ScenarioSpec) -> SyntheticData:
    """Clean and noisy input/output series at the true parameters.

    ``spec.snr = None`` gives noise-free measurements; the assumed noise stds
    are then ``RMS / setup.noise_free_snr``.
    """
    model = setup.model
    u = ambient_input(setup.K, setup.dt, setup.sigma_u, spec.seed(STREAM_INPUT), labels=model.inputs)
    y = synthesize_output(model, setup.theta_true, u)
    if spec.snr is None:
        um, ym = u, y
        su = np.sqrt(np.mean(u.samples**2, axis=1)) / setup.noise_free_snr
        sy = np.sqrt(np.mean(y.samples**2, axis=1)) / setup.noise_free_snr
    else:
        um, su = add_noise(u, NoiseSpec(spec.snr, spec.seed(STREAM_NOISE_U)))
        ym, sy = add_noise(y, NoiseSpec(spec.snr, spec.seed(STREAM_NOISE_Y)))
    return SyntheticData(u, y, um, ym, su, sy)


def assemble(model, u_meas, y_meas, noise_std_u, noise_std_y, theta_prior, prior_std) -> PosteriorProblem:
    prior = Prior(ParamVec(model.param_names, np.asarray(theta_prior, dtype=float)),
                  np.asarray(prior_std, dtype=float) ** 2)
    return PosteriorProblem(dft(u_meas), dft(y_meas), model, noise_std_u, noise_std_y, prior)


def build_problem(setup: Setup, spec: ScenarioSpec, theta_prior=None) -> PosteriorProblem:
    """Synthesize data for ``spec`` and assemble its posterior problem."""
    data = synthesize(setup, spec)
    if theta_prior is None:
        theta_prior = spec.draw_prior(setup)
    return assemble(setup.model, data.u_meas, data.y_meas, data.noise_std_u, data.noise_std_y,
                    theta_prior, setup.prior_std_frac * np.abs(setup.theta_true))


def bounds_for(setup: Setup, theta_prior) -> np.ndarray:
    lo, hi = setup.bounds_frac
    a = np.abs(np.asarray(theta_prior, dtype=float))
    return np.column_stack([lo * a, hi * a])


def solve(pp: PosteriorProblem, method: str, setup: Setup, opt_seed: int, theta0=None):
    """Run CE or QN from the prior mean inside the setup's bounds."""
    theta0 = pp.prior.mean.values if theta0 is None else np.asarray(theta0, dtype=float)
    bounds = bounds_for(setup, theta0)
    if method == "ce":
        cfg = CEConfig(
            n_samples=setup.ce.n_samples, n_elite=setup.ce.n_elite, alpha=setup.ce.alpha,
            eps=setup.ce.eps, max_iter=setup.ce.max_iter, seed=opt_seed, bounds=bounds,
        )
        return cross_entropy(lambda th: objective_batch(pp, th), theta0, 0.5 * np.abs(theta0), cfg, batch=True)
    if method == "qn":
        return quasi_newton(
            lambda th: objective(pp, th).total, theta0, bounds,
            tol=setup.qn_tol, max_iter=setup.qn_max_iter, h_rel=setup.qn_h_rel,
        )
    raise ValueError(f"unknown method {method!r}")


def run_scenario(spec: ScenarioSpec, method: str, setup: Setup = Setup()) -> ScenarioResult:
    t0 = time.perf_counter()
    pp = build_problem(setup, spec)
    res = solve(pp, method, setup, spec.seed(STREAM_OPT))
    runtime = time.perf_counter() - t0
    log.info("scenario %d snr=%s %s: %s after %d iterations", spec.scenario_id, spec.snr,
             method, res.termination, res.iterations)
    return ScenarioResult(
        scenario_id=spec.scenario_id,
        snr=float("inf") if spec.snr is None else float(spec.snr),
        method=method,
        names=tuple(pp.prior.mean.names),
        theta_true=np.asarray(setup.theta_true, dtype=float),
        theta_prior=pp.prior.mean.values,
        theta_post=np.asarray(res.theta_post, dtype=float),
        objective_final=float(res.objective_final),
        iterations=res.iterations,
        termination=res.termination,
        n_evals=res.n_evals,
        runtime_s=runtime,
    )


@dataclass(frozen=True)
class AggregateRow:
    snr: float
    method: str
    param: str
    mean: float
    std: float


@dataclass
class SweepReport:
    snrs: list[float]
    methods: list[str]
    n_scenarios: int
    root_seed: int
    rows: list[ScenarioResult]
    aggregates: list[AggregateRow]

    def aggregate(self, snr, method, param) -> AggregateRow:
        for a in self.aggregates:
            if a.snr == snr and a.method == method and a.param == param:
                return a
        raise KeyError((snr, method, param))


def aggregate(rows: list[ScenarioResult]) -> list[AggregateRow]:
    """Mean and unbiased (n - 1) std per (snr, method, parameter)."""
    out = []
    keys = []
    for r in rows:
        if (r.snr, r.method) not in keys:
            keys.append((r.snr, r.method))
    for snr, method in keys:
        est = np.array([r.theta_post for r in rows if r.snr == snr and r.method == method])
        names = next(r.names for r in rows if r.snr == snr and r.method == method)
        std = est.std(axis=0, ddof=1) if est.shape[0] > 1 else np.full(est.shape[1], np.nan)
        for j, name in enumerate(names):
            out.append(AggregateRow(snr, method, name, float(est[:, j].mean()), float(std[j])))
    return out


def _run_cell(args):
    spec, method, setup = args
    return run_scenario(spec, method, setup)


def snr_sweep(snrs, n_scenarios: int, methods=METHODS, setup: Setup = Setup(),
              root_seed: int = 0, workers: int = 1) -> SweepReport:
    if n_scenarios < 2:
        raise ValueError("n_scenarios must be >= 2")
    cells = [
        (ScenarioSpec(i, snr, root_seed), method, setup)
        for snr in snrs
        for i in range(n_scenarios)
        for method in methods
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    return SweepReport(
        snrs=[float(s) for s in snrs], methods=list(methods), n_scenarios=n_scenarios,
        root_seed=root_seed, rows=rows, aggregates=aggregate(rows),
    )


@dataclass(frozen=True)
class PSDReport:
    omega: np.ndarray
    measured: np.ndarray  # (2, n_active)
    predicted_prior: np.ndarray
    predicted_post: np.ndarray

    def misfit(self, which: str, channel: int = 0) -> float:
        """Integrated ``|PSD_pred - PSD_meas|`` over the band."""
        pred = self.predicted_prior if which == "prior" else self.predicted_post
        return psd_misfit(self.omega, pred[channel], self.measured[channel])


def psd_misfit(omega, predicted, measured) -> float:
    omega = np.asarray(omega, dtype=float)
    step = omega[1] - omega[0] if omega.shape[0] > 1 else 1.0
    return float(np.sum(np.abs(np.asarray(predicted) - np.asarray(measured))) * step)


def psd_report(pp: PosteriorProblem, theta_prior, theta_post) -> PSDReport:
    """PSD of measured outputs and of ``Y(theta) u_meas`` for prior and posterior."""
    grid = pp.y_spectrum.grid
    u = pp.u_spectrum.coeffs[:, pp.active]
    # every active bin has k >= 1, so the one-sided factor 2 always applies
    norm = 2.0 * grid.dt / grid.n_samples
    measured = norm * np.abs(pp.y_spectrum.coeffs[:, pp.active]) ** 2
    preds = []
    for theta in (theta_prior, theta_post):
        Y = pp.model.matrix(np.asarray(theta, dtype=float), pp.omegas)
        preds.append(norm * np.abs(np.einsum("kij,jk->ik", Y, u)) ** 2)
    return PSDReport(pp.omegas, measured, preds[0], preds[1])
