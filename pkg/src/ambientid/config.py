"""Run configuration: JSON loading, defaults and validation.

Every section is optional.  Unknown keys are rejected and every error names
the dotted key that caused it.  The resolved config (defaults filled in) is
echoed into all output metadata.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .harness import Setup
from .model import GEN_TRUE, MOTOR_TRUE, WE0_50HZ
from .optimize import CEConfig

DEFAULTS = {
    "model": "generator",
    "true_params": None,
    "operating_point": None,
    "sampling": {"dt": 0.02, "K": 1000, "sigma_u": 0.01},
    "noise": {"snr": 10.0, "noise_free_snr": 1000.0},
    "seed": 0,
    "prior": {"mean": None, "offset": 0.3, "std_frac": 0.5},
    "bounds": {"lo_frac": 0.1, "hi_frac": 3.0},
    "method": "ce",
    "ce": {"n_samples": 200, "n_elite": 20, "alpha": 0.7, "eps": 1e-4, "max_iter": 200},
    "qn": {"tol": 1e-6, "max_iter": 200, "h_rel": 1e-6},
    "sweep": {"snrs": [1, 2, 5, 10, 20], "n_scenarios": 50, "methods": ["ce", "qn"],
              "workers": 1, "prior_spread": 0.5},
}

MODEL_PARAMS = {
    "generator": ("D", "E_prime", "M", "Xd_prime"),
    "motor": ("H", "R", "X"),
}
MODEL_TRUE = {"generator": GEN_TRUE, "motor": MOTOR_TRUE}
OPERATING_DEFAULTS = {
    "generator": {"V0": 1.0, "theta0": 0.0, "Pm": 0.5},
    "motor": {"pm": 0.5, "V0": 1.0, "we0": WE0_50HZ, "tau": 0.02},
}


@dataclass(frozen=True)
class RunConfig:
    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def param_names(self) -> tuple[str, ...]:
        return MODEL_PARAMS[self.data["model"]]

    @property
    def theta_true(self) -> np.ndarray:
        tp = self.data["true_params"]
        return np.array([tp[n] for n in self.param_names])

    @property
    def model_kwargs(self) -> dict:
        return dict(self.data["operating_point"])

    @property
    def snr(self) -> float | None:
        return self.data["noise"]["snr"]

    def prior_mean(self) -> np.ndarray:
        m = self.data["prior"]["mean"]
        if m is not None:
            return np.array([m[n] for n in self.param_names])
        return self.theta_true * (1.0 + self.data["prior"]["offset"])

    def prior_variances(self) -> np.ndarray:
        return (self.data["prior"]["std_frac"] * np.abs(self.theta_true)) ** 2

    def ce_config(self, seed=None, bounds=None) -> CEConfig:
        c = self.data["ce"]
        return CEConfig(c["n_samples"], c["n_elite"], c["alpha"], c["eps"], c["max_iter"],
                        self.data["seed"] if seed is None else seed, bounds)

    def setup(self) -> Setup:
        s = self.data["sampling"]
        return Setup(
            model_name=self.data["model"],
            model_kwargs=self.model_kwargs,
            theta_true=self.theta_true,
            dt=s["dt"], K=s["K"], sigma_u=s["sigma_u"],
            prior_spread=self.data["sweep"]["prior_spread"],
            prior_std_frac=self.data["prior"]["std_frac"],
            bounds_frac=(self.data["bounds"]["lo_frac"], self.data["bounds"]["hi_frac"]),
            ce=self.ce_config(),
            qn_tol=self.data["qn"]["tol"],
            qn_max_iter=self.data["qn"]["max_iter"],
            qn_h_rel=self.data["qn"]["h_rel"],
            noise_free_snr=self.data["noise"]["noise_free_snr"],
        )


def _merge(base: dict, user: dict, prefix: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in user.items():
        name = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(name, "unknown key")
        if isinstance(base[key], dict) and base[key] is not None:
            if not isinstance(value, dict):
                raise ConfigError(name, "expected an object")
            out[key] = _merge(base[key], value, name + ".")
        else:
            out[key] = value
    return out


def _num(cfg, section, key, *, positive=False, integer=False, minimum=None, allow_none=False):
    name = f"{section}.{key}" if section else key
    v = cfg[section][key] if section else cfg[key]
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    if integer and not float(v).is_integer():
        raise ConfigError(name, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    if positive and not v > 0:
        raise ConfigError(name, f"must be positive, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {v!r}")
    v = int(v) if integer else float(v)
    if section:
        cfg[section][key] = v
    else:
        cfg[key] = v
    return v


def _param_dict(value, names, key) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(key, "expected an object of parameter values")
    for k in value:
        if k not in names:
            raise ConfigError(f"{key}.{k}", "unknown parameter")
    missing = [n for n in names if n not in value]
    if missing:
        raise ConfigError(f"{key}.{missing[0]}", "missing parameter")
    out = {}
    for n in names:
        v = value[n]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key}.{n}", f"expected a finite number, got {v!r}")
        out[n] = float(v)
    return out


def resolve(user: dict) -> RunConfig:
    """Merge ``user`` over the defaults and validate every field."""
    if not isinstance(user, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    cfg = _merge(DEFAULTS, user, "")

    model = cfg["model"]
    if model not in MODEL_PARAMS:
        raise ConfigError("model", f"expected one of {sorted(MODEL_PARAMS)}, got {model!r}")
    names = MODEL_PARAMS[model]

    if cfg["true_params"] is None:
        cfg["true_params"] = dict(zip(names, (float(v) for v in MODEL_TRUE[model])))
    else:
        cfg["true_params"] = _param_dict(cfg["true_params"], names, "true_params")
    for n, v in cfg["true_params"].items():
        if not v > 0 and not (model == "generator" and n == "D" and v == 0):
            raise ConfigError(f"true_params.{n}", f"must be positive, got {v}")

    op = dict(OPERATING_DEFAULTS[model])
    if cfg["operating_point"] is not None:
        if not isinstance(cfg["operating_point"], dict):
            raise ConfigError("operating_point", "expected an object")
        for k, v in cfg["operating_point"].items():
            if k not in op:
                raise ConfigError(f"operating_point.{k}", "unknown key")
            op[k] = v
    cfg["operating_point"] = op
    for k in op:
        _num(cfg, "operating_point", k, allow_none=(k == "tau"))
    if op["V0"] <= 0:
        raise ConfigError("operating_point.V0", "must be positive")
    if model == "motor" and op["tau"] is not None and op["tau"] <= 0:
        raise ConfigError("operating_point.tau", "must be positive or null")

    _num(cfg, "sampling", "dt", positive=True)
    _num(cfg, "sampling", "K", integer=True, minimum=1)
    _num(cfg, "sampling", "sigma_u", positive=True)
    _num(cfg, "noise", "snr", positive=True, allow_none=True)
    _num(cfg, "noise", "noise_free_snr", positive=True)
    _num(cfg, None, "seed", integer=True, minimum=0)

    if cfg["prior"]["mean"] is not None:
        cfg["prior"]["mean"] = _param_dict(cfg["prior"]["mean"], names, "prior.mean")
    _num(cfg, "prior", "offset", minimum=-0.99)
    _num(cfg, "prior", "std_frac", positive=True)

    lo = _num(cfg, "bounds", "lo_frac", minimum=0.0)
    hi = _num(cfg, "bounds", "hi_frac", positive=True)
    if not lo < 1.0 < hi:
        raise ConfigError("bounds", "need lo_frac < 1 < hi_frac so the prior lies inside")

    if cfg["method"] not in ("ce", "qn"):
        raise ConfigError("method", f"expected 'ce' or 'qn', got {cfg['method']!r}")

    n = _num(cfg, "ce", "n_samples", integer=True, minimum=1)
    ne = _num(cfg, "ce", "n_elite", integer=True, minimum=1)
    if ne > n:
        raise ConfigError("ce.n_elite", "must not exceed ce.n_samples")
    a = _num(cfg, "ce", "alpha", positive=True)
    if a > 1:
        raise ConfigError("ce.alpha", "must lie in (0, 1]")
    _num(cfg, "ce", "eps", positive=True)
    _num(cfg, "ce", "max_iter", integer=True, minimum=1)
    _num(cfg, "qn", "tol", positive=True)
    _num(cfg, "qn", "max_iter", integer=True, minimum=1)
    _num(cfg, "qn", "h_rel", positive=True)

    sw = cfg["sweep"]
    if not isinstance(sw["snrs"], list) or not sw["snrs"]:
        raise ConfigError("sweep.snrs", "expected a non-empty list")
    for i, s in enumerate(sw["snrs"]):
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not s > 0 or not math.isfinite(s):
            raise ConfigError(f"sweep.snrs[{i}]", f"must be a positive number, got {s!r}")
    sw["snrs"] = [float(s) for s in sw["snrs"]]
    _num(cfg, "sweep", "n_scenarios", integer=True, minimum=2)
    _num(cfg, "sweep", "workers", integer=True, minimum=1)
    spread = _num(cfg, "sweep", "prior_spread", minimum=0.0)
    if spread >= 1.0:
        raise ConfigError("sweep.prior_spread", "must be < 1 so priors stay positive")
    if not isinstance(sw["methods"], list) or not sw["methods"]:
        raise ConfigError("sweep.methods", "expected a non-empty list")
    for i, m in enumerate(sw["methods"]):
        if m not in ("ce", "qn"):
            raise ConfigError(f"sweep.methods[{i}]", f"expected 'ce' or 'qn', got {m!r}")
    return RunConfig(cfg)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        user = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("--config", f"{path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON ({exc})") from None
    return resolve(user)
