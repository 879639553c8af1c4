"""Bayesian identification of power-system component parameters from ambient data."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AmbientIDError,
    ConfigError,
    DataError,
    Infeasible,
    NonFiniteObjective,
    SingularFrequency,
    StateBlowup,
    ZeroSignal,
)
from .harness import ScenarioSpec, Setup, psd_report, run_scenario, snr_sweep  # noqa: E402
from .inference import PosteriorProblem, Prior, objective, objective_batch  # noqa: E402
from .model import GeneratorModel, MotorModel, ParamVec, make_model  # noqa: E402
from .optimize import CEConfig, OptResult, cross_entropy, quasi_newton  # noqa: E402

__all__ = [
    "AmbientIDError", "ConfigError", "DataError", "Infeasible", "NonFiniteObjective",
    "SingularFrequency", "StateBlowup", "ZeroSignal",
    "ScenarioSpec", "Setup", "psd_report", "run_scenario", "snr_sweep",
    "PosteriorProblem", "Prior", "objective", "objective_batch",
    "GeneratorModel", "MotorModel", "ParamVec", "make_model",
    "CEConfig", "OptResult", "cross_entropy", "quasi_newton",
]
