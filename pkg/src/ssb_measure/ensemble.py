"""Ensemble statistics: outcome frequencies, calibration curves, Born-rule check.

Two empirical modes are available:

``"decoupled"``
    The spin is frozen at its initial value, so phi follows the Langevin
    equation with the constant bias ``mu*<S3>*B`` from phi = 0.  A run is
    classified by the sign of phi the first time ``|phi|`` exceeds
    ``0.9*sqrt(gamma/g)``.  This is the model the closed forms describe.
``"coupled"``
    Full spin/order-parameter dynamics; a run is classified by the phase label
    of its final sample.  The gap to the analytic curve measures back-action.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateEnsembleError, DomainError
from .measurement_model import MeasurementParams, PhaseLabel, lockin_outcome, run_batch
from .noise import derive_seed, derive_seeds
from .order_parameter import (
    Convention,
    bias_from_s3,
    bias_spread,
    delta_max,
    onset_time,
    optimization_z,
    p_plus,
    run_langevin_batch,
)
from .spin_dynamics import SpinDensityMatrix

Mode = Literal["decoupled", "coupled"]
CROSSING_FRACTION = 0.9


def initial_state(spin: float | SpinDensityMatrix) -> SpinDensityMatrix:
    """Explicit state, or the pure x-z state with the requested <S3>."""
    if isinstance(spin, SpinDensityMatrix):
        return spin
    return SpinDensityMatrix.from_s3(float(spin))


@dataclass(frozen=True)
class EnsembleConfig:
    n_runs: int
    master_seed: int
    params: MeasurementParams
    initial_spin: float | SpinDensityMatrix = 0.5
    mode: Mode = "decoupled"
    workers: int = 1
    chunk: int = 4096

    def __post_init__(self):
        if self.n_runs < 1:
            raise ConfigurationError("n_runs must be >= 1")
        if self.mode not in ("decoupled", "coupled"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.workers < 1 or self.chunk < 1:
            raise ConfigurationError("workers and chunk must be >= 1")
        initial_state(self.initial_spin).validate(1e-9)


@dataclass(frozen=True)
class EnsembleResult:
    count_plus: int
    count_minus: int
    count_undecided: int

    @property
    def decided(self) -> int:
        return self.count_plus + self.count_minus

    @property
    def freq_plus(self) -> float:
        return self.count_plus / self.decided

    @property
    def stderr(self) -> float:
        f = self.freq_plus
        return math.sqrt(f * (1.0 - f) / self.decided)


def _count_chunk(config: EnsembleConfig, seeds: Sequence[int]) -> tuple[int, int, int]:
    p = config.params
    lp = p.langevin
    rho0 = initial_state(config.initial_spin)
    if config.mode == "decoupled":
        if lp.g <= 0:
            raise DomainError("decoupled classification needs g > 0")
        batch = run_langevin_batch(
            seeds, lp, p.dt, p.n_steps, phi0=p.phi0,
            bias=p.mu * p.B * rho0.s3, threshold=CROSSING_FRACTION * lp.phi_min,
        )
        s = batch.crossed_sign
        return int(np.sum(s > 0)), int(np.sum(s < 0)), int(np.sum(s == 0))
    plus = minus = undecided = 0
    for traj in run_batch(rho0, p, seeds):
        _, phase = lockin_outcome(traj, lp)
        if phase is PhaseLabel.PLUS:
            plus += 1
        elif phase is PhaseLabel.MINUS:
            minus += 1
        else:
            undecided += 1
    return plus, minus, undecided


def run_ensemble(config: EnsembleConfig) -> EnsembleResult:
    """Run ``n_runs`` independently seeded trajectories and count phase outcomes.

    Run ``i`` is seeded with ``derive_seed(master_seed, i)``; only integer counts
    are accumulated, so the result does not depend on chunking or worker count.
    """
    starts = range(0, config.n_runs, config.chunk)
    jobs = [derive_seeds(config.master_seed, min(config.chunk, config.n_runs - s), s) for s in starts]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(lambda sd: _count_chunk(config, sd), jobs))
    else:
        parts = [_count_chunk(config, sd) for sd in jobs]
    plus, minus, undecided = (sum(col) for col in zip(*parts))
    if plus + minus == 0:
        raise DegenerateEnsembleError(f"all {config.n_runs} runs were undecided")
    return EnsembleResult(plus, minus, undecided)


def analytic_p_plus_at_t0(s3_init: float, params: MeasurementParams, convention: Convention = "mc") -> float:
    """Closed-form probability of the plus phase at the onset time for this bias."""
    lp = params.langevin
    delta = bias_from_s3(s3_init, params.mu, params.B, lp.gamma)
    t0 = onset_time(lp, delta)
    return p_plus(delta, bias_spread(t0, lp, convention))


@dataclass
class CalibrationPoint:
    s3_init: float
    p_plus_analytic: float
    freq_empirical: float = math.nan
    stderr: float = math.nan
    n_decided: int = 0
    n_undecided: int = 0

    @property
    def sigma_analytic(self) -> float:
        """Binomial standard deviation of the frequency if the analytic value were exact."""
        p = self.p_plus_analytic
        return math.sqrt(p * (1.0 - p) / self.n_decided) if self.n_decided else math.nan

    def agrees(self, n_sigma: float = 3.0) -> bool:
        return abs(self.freq_empirical - self.p_plus_analytic) <= n_sigma * self.sigma_analytic

    CSV_COLUMNS = ("s3_init", "p_plus_analytic", "freq_empirical", "stderr", "n_decided", "n_undecided")

    def row(self):
        return tuple(getattr(self, c) for c in self.CSV_COLUMNS)


def calibration_curve(
    grid: Sequence[float],
    params: MeasurementParams,
    n_runs: int = 0,
    master_seed: int = 0,
    mode: Mode = "decoupled",
    convention: Convention = "mc",
    workers: int = 1,
) -> list[CalibrationPoint]:
    """Analytic P+(t0) over a grid of initial <S3>, plus empirical frequencies if ``n_runs > 0``.

    Grid point ``k`` uses master seed ``derive_seed(master_seed, k)``.
    """
    grid = [float(s) for s in grid]
    if any(not -0.5 <= s <= 0.5 for s in grid):
        raise DomainError("calibration grid must lie within [-1/2, 1/2]")
    points = []
    for k, s in enumerate(grid):
        pt = CalibrationPoint(s, analytic_p_plus_at_t0(s, params, convention))
        if n_runs > 0:
            res = run_ensemble(EnsembleConfig(n_runs, derive_seed(master_seed, k), params, s, mode, workers))
            pt.freq_empirical = res.freq_plus
            pt.stderr = res.stderr
            pt.n_decided = res.decided
            pt.n_undecided = res.count_undecided
        points.append(pt)
    return points


@dataclass
class BornFit:
    alpha_fitted: float
    alpha_predicted: float
    max_residual: float
    max_born_deviation: float
    """max |P+ - p_up| over the grid."""
    regime_ok: bool = True
    warnings: list[str] = field(default_factory=list)

    def report(self) -> dict[str, object]:
        return {
            "alpha_fitted": self.alpha_fitted,
            "alpha_predicted": self.alpha_predicted,
            "relative_error": abs(self.alpha_fitted / self.alpha_predicted - 1.0) if self.alpha_predicted else math.nan,
            "max_residual": self.max_residual,
            "max_born_deviation": self.max_born_deviation,
            "regime_ok": self.regime_ok,
            "warnings": "; ".join(self.warnings) or "none",
        }


def born_check(
    params: MeasurementParams,
    grid: Sequence[float],
    convention: Convention = "mc",
    dominance: float = 10.0,
) -> BornFit:
    """Fit P+ = 1/2 + alpha*(2 p_up - 1) through (0, 1/2) on a grid of <S3> values.

    ``p_up = <S3> + 1/2`` is the Born probability of spin-up.  The prediction
    alpha = z/sqrt(pi) comes from erf(x) ~ 2x/sqrt(pi).  The linear regime
    (gamma >> sqrt(g*eps) or eps >> gamma*delta_max^2, with ">>" meaning a factor
    ``dominance``) is checked and reported, never enforced.
    """
    lp = params.langevin
    s = np.asarray(grid, dtype=float)
    x = 2.0 * s
    if not np.any(x != 0):
        raise DomainError("grid needs at least one non-zero point")
    probs = np.array([analytic_p_plus_at_t0(v, params, convention) for v in s])
    y = probs - 0.5
    alpha = float(np.dot(x, y) / np.dot(x, x))
    z = optimization_z(lp, params.mu, params.B, convention)
    dm = delta_max(params.mu, params.B, lp.gamma)
    warnings = []
    friction = lp.gamma >= dominance * math.sqrt(lp.g * lp.epsilon)
    strong_noise = lp.epsilon >= dominance * lp.gamma * dm * dm
    if not (friction or strong_noise):
        warnings.append("neither gamma >> sqrt(g*eps) nor eps >> gamma*delta^2 holds")
    return BornFit(
        alpha_fitted=alpha,
        alpha_predicted=z / math.sqrt(math.pi),
        max_residual=float(np.max(np.abs(y - alpha * x))),
        max_born_deviation=float(np.max(np.abs(probs - (s + 0.5)))),
        regime_ok=not warnings,
        warnings=warnings,
    )
