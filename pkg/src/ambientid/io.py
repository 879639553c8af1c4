"""CSV and JSON artifacts with matching readers.

Floats are written with ``repr`` precision so every table round-trips
exactly through its reader.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .timeseries import ChannelSeries

SERIES_HEADER = ("t", "ch1", "ch2")
PSD_HEADER = ("omega_rad_s", "psd_value")
TRACE_HEADER = ("iter", "best_f", "mean_f_elite", "sigma_max")
SUMMARY_HEADER = ("snr", "method", "param", "mean", "std")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _read(path, header=None) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        if header is not None and tuple(reader.fieldnames[: len(header)]) != tuple(header):
            raise DataError(f"{path}: expected header {','.join(header)}")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _floats(rows, key, path) -> np.ndarray:
    try:
        return np.array([float(r[key]) for r in rows])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad value in column {key!r}") from exc


# time series

def write_series(path, ts: ChannelSeries) -> None:
    _write(path, SERIES_HEADER, zip(ts.t, ts.samples[0], ts.samples[1]))


def read_series(path, labels=("ch1", "ch2")) -> ChannelSeries:
    rows = _read(path, SERIES_HEADER)
    t = _floats(rows, "t", path)
    x = np.vstack([_floats(rows, "ch1", path), _floats(rows, "ch2", path)])
    if t.shape[0] < 3 or t.shape[0] % 2 == 0:
        raise DataError(f"{path}: need an odd number of samples >= 3, got {t.shape[0]}")
    dt = t[1] - t[0]
    if not dt > 0 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0.0):
        raise DataError(f"{path}: time column must be uniformly increasing")
    try:
        return ChannelSeries(float(dt), x, labels)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


# PSD tables

def write_psd(path, omega, values) -> None:
    _write(path, PSD_HEADER, zip(omega, values))


def read_psd(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read(path, PSD_HEADER)
    return _floats(rows, "omega_rad_s", path), _floats(rows, "psd_value", path)


# optimizer trace

def write_trace(path, trace) -> None:
    _write(path, TRACE_HEADER, ((r.iter, r.best_f, r.mean_f_elite, r.sigma_max) for r in trace))


def read_trace(path) -> dict[str, np.ndarray]:
    try:
        rows = _read(path, TRACE_HEADER)
    except DataError as exc:
        # a zero-iteration run legitimately has an empty trace
        if "no data rows" in str(exc):
            return {k: np.array([]) for k in TRACE_HEADER}
        raise
    out = {k: _floats(rows, k, path) for k in TRACE_HEADER}
    out["iter"] = out["iter"].astype(int)
    return out


# sweep tables

def write_sweep_summary(path, report) -> None:
    _write(path, SUMMARY_HEADER, ((a.snr, a.method, a.param, a.mean, a.std) for a in report.aggregates))


def read_sweep_summary(path) -> list[dict]:
    rows = _read(path, SUMMARY_HEADER)
    out = []
    for r in rows:
        try:
            out.append({"snr": float(r["snr"]), "method": r["method"], "param": r["param"],
                        "mean": float(r["mean"]), "std": float(r["std"])})
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
    return out


def scenario_header(names) -> tuple[str, ...]:
    return (
        ("snr", "method", "scenario_id", "termination", "iterations", "n_evals", "objective_final", "runtime_s")
        + tuple(f"true_{n}" for n in names)
        + tuple(f"prior_{n}" for n in names)
        + tuple(f"post_{n}" for n in names)
    )


def write_sweep_scenarios(path, report) -> None:
    names = report.rows[0].names
    rows = (
        (r.snr, r.method, r.scenario_id, r.termination, r.iterations, r.n_evals, r.objective_final,
         r.runtime_s, *r.theta_true, *r.theta_prior, *r.theta_post)
        for r in report.rows
    )
    _write(path, scenario_header(names), rows)


def read_sweep_scenarios(path) -> list[dict]:
    rows = _read(path, ("snr", "method", "scenario_id"))
    out = []
    for r in rows:
        rec = {}
        for k, v in r.items():
            if k in ("method", "termination"):
                rec[k] = v
            elif k in ("scenario_id", "iterations", "n_evals"):
                rec[k] = int(v)
            else:
                rec[k] = float(v)
        out.append(rec)
    return out


# JSON

def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no inf/nan
        return x if math.isfinite(x) else None
    return x


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: file not found")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def load_schema(name: str) -> dict:
    """Bundled JSON schema, e.g. ``load_schema("posterior")``."""
    text = resources.files("ambientid").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)
