"""Command-line front end.

    ssb-measure spin-relax  [--config F] [--set k=v ...] [--out PATH]
    ssb-measure langevin    ... [--seed U64] [--runs N]
    ssb-measure measure     ... [--z TARGET]
    ssb-measure calibrate   ... [--runs N] [--z TARGET] [--convention mc|paper]
    ssb-measure born        ...

CSV output has a header row, LF line endings and floats written with 17
significant digits.  When ``--out`` names a file, the resolved configuration is
written next to it as ``<out>.config``.

Exit codes: 0 success, 2 configuration error, 3 numerical/domain error.
"""

from __future__ import annotations

import argparse
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import config as cfg
from .ensemble import CalibrationPoint, born_check, calibration_curve
from .errors import ConfigurationError, DegenerateEnsembleError, DomainError, OptimizationError
from .measurement_model import MeasurementParams, TrajectoryRecord, potential, run_batch, spin_projection
from .noise import NoiseSource, derive_seeds
from .order_parameter import (
    LangevinParams,
    integrate_langevin,
    run_langevin_batch,
    tune_noise_for_z,
    variance_profile,
)
from .spin_dynamics import ReservoirCoefficients, SpinDensityMatrix, evolve_analytic, evolve_numeric_path, purity

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

FIG4_PRESETS = {
    "fig4-top": {"z": 10.0, "rho11": 1.0, "rho12_re": 0.0, "rho12_im": 0.0},
    "fig4-middle": {"z": 2.0, "rho11": 0.7, "rho12_re": 0.0, "rho12_im": 0.0},
    "fig4-bottom": {"z": 0.08, "rho11": 1.0, "rho12_re": 0.0, "rho12_im": 0.0},
}


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(stream, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


@contextmanager
def open_out(path: str):
    if path in ("", "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def _sidecar(conf: cfg.RunConfig) -> None:
    out = conf["out"]
    if out not in ("", "-"):
        Path(out + ".config").write_text(conf.dump())


@contextmanager
def _as_config_error():
    """Invalid parameter values from a config are configuration errors, not numerical ones."""
    try:
        yield
    except DomainError as exc:
        raise ConfigurationError(str(exc)) from exc


def _langevin(conf: cfg.RunConfig) -> LangevinParams:
    with _as_config_error():
        return LangevinParams(conf["gamma"], conf["g"], conf["epsilon"])


def _initial_rho(conf: cfg.RunConfig) -> SpinDensityMatrix:
    with _as_config_error():
        rho0 = SpinDensityMatrix.from_populations(conf["rho11"], complex(conf["rho12_re"], conf["rho12_im"]))
        rho0.validate(1e-9)
    return rho0


def _device(conf: cfg.RunConfig, z: float | None = None) -> MeasurementParams:
    """Measurement parameters; a z target (if any) replaces ``epsilon``."""
    z = conf["z"] if z is None else z
    _langevin(conf)
    eps = conf["epsilon"]
    if z is not None:
        eps = tune_noise_for_z(z, conf["gamma"], conf["g"], conf["mu"], conf["B"], conf["convention"])
    return MeasurementParams(
        LangevinParams(conf["gamma"], conf["g"], eps),
        mu=conf["mu"], B=conf["B"], base_rate=conf["base_rate"], c_rate=conf["c_rate"],
        theta=conf["theta"], dt=conf["dt"], t_end=conf["t_end"],
        record_every=conf.values.get("record_every", 1),
    )


def cmd_spin_relax(conf: cfg.RunConfig) -> int:
    rho0 = _initial_rho(conf)
    with _as_config_error():
        coeffs = ReservoirCoefficients(conf["a"], conf["b"], conf["c"], conf["omega"])
    n = conf["n_samples"]
    if n < 1:
        raise ConfigurationError("n_samples must be >= 1")
    times = np.linspace(0.0, conf["t_end"], n) if n > 1 else np.array([0.0])
    numeric = evolve_numeric_path(rho0, coeffs, times, conf["dt"])
    header = ["t"]
    for tag in ("analytic", "numeric"):
        header += [f"{c}_{tag}" for c in ("rho11", "rho22", "re_rho12", "im_rho12", "purity")]

    def cols(r: SpinDensityMatrix):
        return [r.rho11, r.rho22, r.rho12.real, r.rho12.imag, purity(r)]

    rows = [[t] + cols(evolve_analytic(rho0, coeffs, t)) + cols(num) for t, num in zip(times, numeric)]
    with open_out(conf["out"]) as fh:
        write_csv(fh, header, rows)
    return EXIT_OK


def cmd_langevin(conf: cfg.RunConfig) -> int:
    lp = _langevin(conf)
    dt, every = conf["dt"], conf["record_every"]
    n_steps = int(round(conf["t_end"] / dt))
    if n_steps < 1 or every < 1 or conf["runs"] < 1:
        raise ConfigurationError("t_end/dt, record_every and runs must be >= 1")
    seeds = derive_seeds(conf["seed"], conf["runs"])
    rows = []
    for k, seed in enumerate(seeds):
        path = integrate_langevin(conf["phi0"], lp, dt, n_steps, NoiseSource(seed), conf["bias"])
        idx = list(range(0, n_steps + 1, every))
        if idx[-1] != n_steps:
            idx.append(n_steps)
        rows += [(k, i * dt, path[i]) for i in idx]
    with open_out(conf["out"]) as fh:
        write_csv(fh, ("run", "t", "phi"), rows)

    if conf["hist_out"]:
        _langevin_histogram(conf, lp, dt, n_steps)
    return EXIT_OK


def _langevin_histogram(conf: cfg.RunConfig, lp: LangevinParams, dt: float, n_steps: int) -> None:
    """Histogram of phi(t_end) next to the linear-theory Gaussian."""
    seeds = derive_seeds(conf["seed"], conf["hist_runs"], start=conf["runs"])
    final = run_langevin_batch(seeds, lp, dt, n_steps, conf["phi0"], conf["bias"]).final
    t = n_steps * dt
    shift = conf["bias"] / lp.gamma
    mean = (conf["phi0"] + shift) * math.exp(lp.gamma * t) - shift
    var = variance_profile(t, lp, conf["convention"])
    counts, edges = np.histogram(final, bins=conf["hist_bins"])
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[:-1] + edges[1:])
    density = counts / (counts.sum() * width)
    gauss = np.exp(-((centers - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var) if var > 0 else np.zeros_like(centers)
    with open(conf["hist_out"], "w", newline="\n") as fh:
        write_csv(fh, ("phi", "density_empirical", "density_linear_gaussian", "count"),
                  zip(centers, density, gauss, counts))


def cmd_measure(conf: cfg.RunConfig) -> int:
    preset = conf["preset"]
    if preset:
        if preset not in FIG4_PRESETS:
            raise ConfigurationError(f"unknown preset {preset!r}; expected one of {sorted(FIG4_PRESETS)}")
        for key, value in FIG4_PRESETS[preset].items():
            if key not in conf.explicit:
                conf.values[key] = value
    params = _device(conf)
    rho0 = _initial_rho(conf)
    if conf["runs"] < 1:
        raise ConfigurationError("runs must be >= 1")
    seeds = derive_seeds(conf["seed"], conf["runs"])
    starts = [("direct", rho0, 1.0)]
    if conf["mirror"]:
        starts.append(("mirror", rho0.mirrored(), -1.0))

    header = ("run", "start") + TrajectoryRecord.COLUMNS
    with open_out(conf["out"]) as fh:
        fh.write(",".join(header) + "\n")
        for label, start, sign in starts:
            trajs = run_batch(start, params, seeds, noise_sign=sign)
            for k, tr in enumerate(trajs):
                for row in tr.rows():
                    fh.write(",".join([str(k), label] + [fmt(v) for v in row]) + "\n")

    if conf["potential_out"]:
        lp = params.langevin
        half = 1.5 * lp.phi_min
        phis = np.linspace(-half, half, conf["potential_points"])
        s3b = spin_projection(rho0, params.B)
        with open(conf["potential_out"], "w", newline="\n") as fh:
            write_csv(fh, ("phi", "V_biased", "V_unbiased"),
                      zip(phis, potential(phis, lp, params.mu, s3b), potential(phis, lp, params.mu, 0.0)))
    return EXIT_OK


def cmd_calibrate(conf: cfg.RunConfig) -> int:
    n = conf["grid_n"]
    if n < 1:
        raise ConfigurationError("grid_n must be >= 1")
    grid = np.linspace(conf["grid_min"], conf["grid_max"], n) if n > 1 else np.array([conf["grid_min"]])
    zs = conf["z_values"] or [conf["z"]]
    rows = []
    for z in zs:
        params = _device(conf, z)
        pts = calibration_curve(grid, params, conf["runs"], conf["seed"], conf["mode"], conf["convention"], conf["workers"])
        z_label = z if z is not None else math.nan
        rows += [(z_label, params.langevin.epsilon) + p.row() for p in pts]
    with open_out(conf["out"]) as fh:
        write_csv(fh, ("z", "epsilon") + CalibrationPoint.CSV_COLUMNS, rows)
    return EXIT_OK


def cmd_born(conf: cfg.RunConfig) -> int:
    params = _device(conf)
    n, w = conf["grid_n"], conf["grid_half_width"]
    if n < 2 or not 0 < w <= 0.5:
        raise ConfigurationError("born needs grid_n >= 2 and 0 < grid_half_width <= 0.5")
    fit = born_check(params, np.linspace(-w, w, n), conf["convention"])
    report = {"z": conf["z"], "epsilon": params.langevin.epsilon, **fit.report()}
    with open_out(conf["out"]) as fh:
        for k, v in report.items():
            fh.write(f"{k} = {v if isinstance(v, str) else fmt(v)}\n")
    return EXIT_OK


COMMANDS = {
    "spin-relax": cmd_spin_relax,
    "langevin": cmd_langevin,
    "measure": cmd_measure,
    "calibrate": cmd_calibrate,
    "born": cmd_born,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ssb-measure", description="SSB quantum-measurement model simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output CSV path ('-' for stdout)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key (repeatable)")
        p.add_argument("--runs", help="number of trajectories / runs")
        p.add_argument("--z", help="target optimization parameter z (tunes epsilon)")
        p.add_argument("--convention", help="noise-variance convention: mc or paper")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(cfg.parse_assignment(s) for s in args.set)
        for flag in ("seed", "out", "runs", "z", "convention"):
            value = getattr(args, flag)
            if value is not None:
                overrides[flag] = value
        conf = cfg.load(args.command, args.config, [overrides])
        _sidecar(conf)
        return COMMANDS[args.command](conf)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, OptimizationError, DegenerateEnsembleError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
