"""Command-line entry point.

Subcommands ``simulate``, ``infer``, ``sweep`` and ``report``.  Exit codes are
0 on success, 2 on configuration errors and 3 on data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .config import RunConfig, load, resolve
from .errors import AmbientIDError, ConfigError, DataError, Infeasible
from .harness import (
    STREAM_OPT,
    ScenarioSpec,
    assemble,
    psd_misfit,
    psd_report,
    snr_sweep,
    solve,
    synthesize,
)
from .inference import objective
from .plotting import psd_figure, sweep_figure

log = logging.getLogger("ambientid")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _config(args) -> RunConfig:
    cfg = load(args.config) if args.config else resolve({})
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        overrides["method"] = args.method
    if overrides:
        data = dict(cfg.data)
        data.update(overrides)
        # re-validate so flag values obey the same rules as config values
        cfg = resolve(data)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    setup = cfg.setup()
    try:
        data = synthesize(setup, ScenarioSpec(0, cfg.snr, cfg["seed"]))
    except Infeasible as exc:
        raise ConfigError("operating_point", str(exc)) from None
    io.write_series(out / "u.csv", data.u)
    io.write_series(out / "y.csv", data.y)
    io.write_series(out / "u_meas.csv", data.u_meas)
    io.write_series(out / "y_meas.csv", data.y_meas)
    io.write_json(out / "meta.json", {
        "version": __version__,
        "seed": cfg["seed"],
        "snr": cfg.snr,
        "noise_free": cfg.snr is None,
        "n_samples": data.u.n,
        "inputs": list(setup.model.inputs),
        "outputs": list(setup.model.outputs),
        "noise_std_u": data.noise_std_u,
        "noise_std_y": data.noise_std_y,
        "config": cfg.data,
    })
    log.info("wrote 5 files to %s", out)
    return EXIT_OK


def _load_data(data_dir: Path):
    u = io.read_series(data_dir / "u_meas.csv")
    y = io.read_series(data_dir / "y_meas.csv")
    if u.n != y.n:
        raise DataError(f"u_meas.csv has {u.n} rows but y_meas.csv has {y.n}")
    if u.dt != y.dt:
        raise DataError("u_meas.csv and y_meas.csv use different sampling steps")
    meta = io.read_json(data_dir / "meta.json")
    try:
        su = np.asarray(meta["noise_std_u"], dtype=float)
        sy = np.asarray(meta["noise_std_y"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"meta.json: missing or bad noise stds ({exc})") from None
    if su.shape != (2,) or sy.shape != (2,) or not (np.all(su > 0) and np.all(sy > 0)):
        raise DataError("meta.json: noise stds must be two positive numbers per side")
    return u, y, su, sy


def cmd_infer(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    data_dir = Path(args.data_dir) if args.data_dir else out
    u, y, su, sy = _load_data(data_dir)
    setup = cfg.setup()
    model = setup.model
    prior_std = np.sqrt(cfg.prior_variances())
    theta_prior = cfg.prior_mean()
    pp = assemble(model, u, y, su, sy, theta_prior, prior_std)
    method = cfg["method"]

    t0 = time.perf_counter()
    res = solve(pp, method, setup, ScenarioSpec(0, cfg.snr, cfg["seed"]).seed(STREAM_OPT))
    runtime = time.perf_counter() - t0
    names = cfg.param_names
    try:
        obj = objective(pp, res.theta_post)
        decomposition = {"total": obj.total, "misfit": obj.misfit, "prior_penalty": obj.prior_penalty}
    except AmbientIDError:
        decomposition = {"total": None, "misfit": None, "prior_penalty": None}

    io.write_json(out / "posterior.json", {
        "version": __version__,
        "seed": cfg["seed"],
        "method": method,
        "param_names": list(names),
        "theta_post": dict(zip(names, res.theta_post)),
        "theta_prior": dict(zip(names, theta_prior)),
        "prior_std": dict(zip(names, prior_std)),
        "objective": decomposition,
        "termination": res.termination,
        "iterations": res.iterations,
        "n_evals": res.n_evals,
        "sigma_final": dict(zip(names, res.sigma_final)),
        "runtime_s": runtime,
        "noise_std_u": su,
        "noise_std_y": sy,
        "config": cfg.data,
    })
    io.write_trace(out / "trace.csv", res.trace)

    if np.all(np.isfinite(res.theta_post)):
        try:
            rep = psd_report(pp, theta_prior, res.theta_post)
        except AmbientIDError as exc:
            log.warning("PSD tables skipped: %s", exc)
        else:
            for c in (0, 1):
                io.write_psd(out / f"psd_measured_ch{c + 1}.csv", rep.omega, rep.measured[c])
                io.write_psd(out / f"psd_prior_ch{c + 1}.csv", rep.omega, rep.predicted_prior[c])
                io.write_psd(out / f"psd_post_ch{c + 1}.csv", rep.omega, rep.predicted_post[c])
    log.info("%s finished: %s after %d iterations", method, res.termination, res.iterations)
    return EXIT_OK


def render_sweep(summary_csv, scenarios_csv, out_dir) -> list[Path]:
    """One SVG per parameter from the sweep CSVs."""
    rows = io.read_sweep_summary(summary_csv)
    scen = io.read_sweep_scenarios(scenarios_csv)
    params = list(dict.fromkeys(r["param"] for r in rows))
    paths = []
    for p in params:
        key = f"true_{p}"
        if key not in scen[0]:
            raise DataError(f"{scenarios_csv}: missing column {key}")
        paths.append(sweep_figure(p, rows, scen[0][key], Path(out_dir) / f"sweep_{p}.svg"))
    return paths


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _out_dir(args)
    sw = cfg["sweep"]
    workers = args.workers if args.workers is not None else sw["workers"]
    t0 = time.perf_counter()
    report = snr_sweep(sw["snrs"], sw["n_scenarios"], sw["methods"], cfg.setup(),
                       root_seed=cfg["seed"], workers=workers)
    runtime = time.perf_counter() - t0
    io.write_sweep_summary(out / "sweep_summary.csv", report)
    io.write_sweep_scenarios(out / "sweep_scenarios.csv", report)
    io.write_json(out / "sweep_meta.json", {
        "version": __version__,
        "seed": cfg["seed"],
        "snrs": sw["snrs"],
        "methods": sw["methods"],
        "n_scenarios": sw["n_scenarios"],
        "n_rows": len(report.rows),
        "terminations": {t: sum(r.termination == t for r in report.rows)
                         for t in sorted({r.termination for r in report.rows})},
        "runtime_s": runtime,
        "config": cfg.data,
    })
    render_sweep(out / "sweep_summary.csv", out / "sweep_scenarios.csv", out)
    log.info("sweep of %d cells finished in %.1f s", len(report.rows), runtime)
    return EXIT_OK


def cmd_report(args) -> int:
    out = _out_dir(args)
    data_dir = Path(args.data_dir) if args.data_dir else out
    c = args.channel
    omega, meas = io.read_psd(data_dir / f"psd_measured_ch{c}.csv")
    om_prior, prior = io.read_psd(data_dir / f"psd_prior_ch{c}.csv")
    om_post, post = io.read_psd(data_dir / f"psd_post_ch{c}.csv")
    if not (np.array_equal(omega, om_prior) and np.array_equal(omega, om_post)):
        raise DataError("PSD tables use different frequency grids")
    before = psd_misfit(omega, prior, meas)
    after = psd_misfit(omega, post, meas)
    psd_figure(omega, meas, prior, "before inference", out / "psd_before.svg")
    psd_figure(omega, meas, post, "after inference", out / "psd_after.svg")
    seed = args.seed
    if seed is None and (data_dir / "posterior.json").is_file():
        seed = io.read_json(data_dir / "posterior.json").get("seed")
    io.write_json(out / "report.json", {
        "version": __version__,
        "seed": seed,
        "channel": c,
        "n_bins": int(omega.shape[0]),
        "psd_misfit_before": before,
        "psd_misfit_after": after,
    })
    print(f"PSD misfit before={before:.6g} after={after:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ambientid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method=False, data=False):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="root seed (overrides the config)")
        p.add_argument("--out-dir", default="out", help="output directory")
        if method:
            p.add_argument("--method", choices=("ce", "qn"), help="optimizer (overrides the config)")
        if data:
            p.add_argument("--data-dir", help="input directory (defaults to --out-dir)")

    common(sub.add_parser("simulate", help="synthesize input/output series"))
    common(sub.add_parser("infer", help="MAP estimate from measured series"), method=True, data=True)
    p = sub.add_parser("sweep", help="SNR sweep over random-prior scenarios")
    common(p)
    p.add_argument("--workers", type=int, help="worker processes (overrides the config)")
    p = sub.add_parser("report", help="before/after PSD figures")
    p.add_argument("--seed", type=int, help="seed to echo into report.json")
    p.add_argument("--out-dir", default="out", help="output directory")
    p.add_argument("--data-dir", help="directory with psd_*.csv (defaults to --out-dir)")
    p.add_argument("--channel", type=int, choices=(1, 2), default=1,
                   help="output channel to compare (1 = current magnitude)")
    return parser


COMMANDS = {"simulate": cmd_simulate, "infer": cmd_infer, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, AmbientIDError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
