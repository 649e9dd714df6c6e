"""Coupled spin + order-parameter measurement device.

The order parameter is biased by the spin through ``mu*<S3>*B`` and the spin
precesses at ``omega = mu*phi*B`` while relaxing toward the state favoured by
the sign of phi.  This positive feedback locks the spin to the phase the order
parameter rolls into.

Integration is operator split per step: classical RK4 on the deterministic
joint system, then an additive Euler-Maruyama kick ``sqrt(eps*dt)*n`` on phi.
The spin has no noise of its own.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, DomainError
from .noise import NoiseSource, draw_block
from .order_parameter import LangevinParams, onset_time
from .spin_dynamics import RK4_STABILITY, SpinDensityMatrix

SPIN_DEADBAND = 0.1
PHASE_DEADBAND = 0.1


@dataclass(frozen=True)
class MeasurementParams:
    """Device parameters.

    ``base_rate`` is the total flip rate a+b, split between up- and down-flips by
    detailed balance at the instantaneous ``theta*phi`` (see
    :func:`rates_from_phi`).  ``c_rate`` is a constant pure-dephasing rate.
    Snapshots are kept every ``record_every`` steps.
    """

    langevin: LangevinParams
    mu: float
    B: float
    base_rate: float
    c_rate: float
    theta: float
    dt: float
    t_end: float
    record_every: int = 1
    phi0: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be > 0, got {self.mu}")
        if self.B == 0 or not math.isfinite(self.B):
            raise ConfigurationError("B must be finite and non-zero")
        if not self.base_rate > 0:
            raise ConfigurationError(f"base_rate must be > 0, got {self.base_rate}")
        if not self.c_rate >= 0:
            raise ConfigurationError(f"c_rate must be >= 0, got {self.c_rate}")
        if not math.isfinite(self.theta):
            raise ConfigurationError("theta must be finite")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ConfigurationError("t_end must be at least one step")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def check_covers_onset(self, delta: float) -> None:
        """Raise unless ``t_end`` reaches the onset time for the given bias."""
        t0 = onset_time(self.langevin, delta)
        if self.t_end < t0:
            raise ConfigurationError(f"t_end = {self.t_end} is shorter than the onset time {t0:.4g}")


@dataclass
class CoupledState:
    phi: float
    rho: SpinDensityMatrix
    t: float = 0.0


@dataclass
class TrajectoryRecord:
    """Uniformly sampled history of one coupled run."""

    t: np.ndarray
    phi: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    re_rho12: np.ndarray
    im_rho12: np.ndarray
    purity: np.ndarray = field(init=False)

    COLUMNS = ("t", "phi", "rho11", "rho22", "re_rho12", "im_rho12", "purity")

    def __post_init__(self):
        self.purity = self.rho11**2 + self.rho22**2 + 2.0 * (self.re_rho12**2 + self.im_rho12**2)
        n = len(self.t)
        if any(len(getattr(self, c)) != n for c in self.COLUMNS):
            raise ValueError("trajectory series must have equal lengths")

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))

    def final_state(self) -> CoupledState:
        rho = SpinDensityMatrix(float(self.rho11[-1]), float(self.rho22[-1]), complex(self.re_rho12[-1], self.im_rho12[-1]))
        return CoupledState(float(self.phi[-1]), rho, float(self.t[-1]))


def spin_projection(rho: SpinDensityMatrix, B: float) -> float:
    """<S3>*B for a field along z."""
    return B * 0.5 * (rho.rho11 - rho.rho22)


def effective_frequency(phi, mu: float, B: float):
    return mu * phi * B


def rates_from_phi(phi, params: MeasurementParams):
    """Down-flip rate ``a`` and up-flip rate ``b`` at order parameter ``phi``.

    ``a + b = base_rate`` and ``a/b = exp(-theta*phi)``, i.e. detailed balance
    at the instantaneous precession frequency with bounded rates.
    """
    x = params.theta * phi
    return params.base_rate * expit(-x), params.base_rate * expit(x)


def _rhs(phi, r11, r22, r12, params: MeasurementParams):
    lp = params.langevin
    a, b = rates_from_phi(phi, params)
    dphi = lp.gamma * phi - lp.g * phi**3 + params.mu * params.B * 0.5 * (r11 - r22)
    d11 = 2.0 * b * r22 - 2.0 * a * r11
    d22 = 2.0 * a * r11 - 2.0 * b * r22
    omega = params.mu * phi * params.B
    d12 = -(a + b + params.c_rate + 1j * omega) * r12
    return dphi, d11, d22, d12


def _rk4(phi, r11, r22, r12, params: MeasurementParams):
    h = params.dt
    k1 = _rhs(phi, r11, r22, r12, params)
    k2 = _rhs(*(y + 0.5 * h * k for y, k in zip((phi, r11, r22, r12), k1)), params)
    k3 = _rhs(*(y + 0.5 * h * k for y, k in zip((phi, r11, r22, r12), k2)), params)
    k4 = _rhs(*(y + h * k for y, k in zip((phi, r11, r22, r12), k3)), params)
    return tuple(
        y + (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        for y, q1, q2, q3, q4 in zip((phi, r11, r22, r12), k1, k2, k3, k4)
    )


def _guard(phi, params: MeasurementParams) -> None:
    stiff = params.base_rate + params.c_rate + np.max(np.abs(params.mu * params.B * np.asarray(phi)))
    if params.dt * stiff >= RK4_STABILITY:
        raise ConfigurationError(
            f"step too large: dt*(rate + c + |mu*phi*B|) = {params.dt * stiff:.3g} >= {RK4_STABILITY}"
        )


def _advance(phi, r11, r22, r12, params: MeasurementParams, noise):
    _guard(phi, params)
    phi, r11, r22, r12 = _rk4(phi, r11, r22, r12, params)
    phi = phi + math.sqrt(params.langevin.epsilon * params.dt) * noise
    return phi, r11, r22, r12


def coupled_step(state: CoupledState, params: MeasurementParams, n: float) -> CoupledState:
    """Advance one step of length ``params.dt`` using the standard-normal deviate ``n``."""
    rho = state.rho
    phi, r11, r22, r12 = _advance(
        np.array([state.phi]), np.array([rho.rho11]), np.array([rho.rho22]),
        np.array([complex(rho.rho12)]), params, np.array([n]),
    )
    return CoupledState(float(phi[0]), SpinDensityMatrix(float(r11[0]), float(r22[0]), complex(r12[0])), state.t + params.dt)


def run_batch(
    rho0: SpinDensityMatrix,
    params: MeasurementParams,
    seeds: Sequence[int],
    block: int = 512,
    noise_sign: float = 1.0,
) -> list[TrajectoryRecord]:
    """Integrate one trajectory per seed, vectorised across seeds.

    Trajectory ``k`` depends only on ``seeds[k]``; the batching is purely a
    speed-up and never changes results.  ``noise_sign=-1`` flips every kick,
    which together with a mirrored initial state gives the Z2 image run.
    """
    rho0.validate(1e-9)
    sources = [NoiseSource(s) for s in seeds]
    m = len(sources)
    n_steps = params.n_steps
    every = params.record_every
    idx = list(range(0, n_steps + 1, every))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    n_rec = len(idx)
    rec = {c: np.empty((m, n_rec)) for c in ("phi", "rho11", "rho22", "re", "im")}

    phi = np.full(m, float(params.phi0))
    r11 = np.full(m, float(rho0.rho11))
    r22 = np.full(m, float(rho0.rho22))
    r12 = np.full(m, complex(rho0.rho12), dtype=complex)

    def store(j):
        rec["phi"][:, j] = phi
        rec["rho11"][:, j] = r11
        rec["rho22"][:, j] = r22
        rec["re"][:, j] = r12.real
        rec["im"][:, j] = r12.imag

    store(0)
    j_next = 1
    step = 0
    while step < n_steps:
        nb = min(block, n_steps - step)
        noise = draw_block(sources, nb)
        if noise_sign != 1.0:
            noise *= noise_sign
        for q in range(nb):
            phi, r11, r22, r12 = _advance(phi, r11, r22, r12, params, noise[:, q])
            step += 1
            if j_next < n_rec and step == idx[j_next]:
                store(j_next)
                j_next += 1

    t = np.asarray(idx, dtype=float) * params.dt
    return [
        TrajectoryRecord(t.copy(), rec["phi"][k], rec["rho11"][k], rec["rho22"][k], rec["re"][k], rec["im"][k])
        for k in range(m)
    ]


def run_trajectory(rho0: SpinDensityMatrix, params: MeasurementParams, seed: int) -> TrajectoryRecord:
    """Integrate from (phi0, rho0, t=0) to ``t_end``; deterministic given ``seed``."""
    return run_batch(rho0, params, [seed])[0]


class SpinLabel(enum.Enum):
    UP = "Up"
    DOWN = "Down"
    UNDECIDED = "Undecided"


class PhaseLabel(enum.Enum):
    PLUS = "PlusPhase"
    MINUS = "MinusPhase"
    NEAR_ZERO = "NearZero"


def classify(phi: float, rho11: float, rho22: float, phi_scale: float) -> tuple[SpinLabel, PhaseLabel]:
    pol = rho11 - rho22
    if abs(pol) < SPIN_DEADBAND:
        spin = SpinLabel.UNDECIDED
    else:
        spin = SpinLabel.UP if pol > 0 else SpinLabel.DOWN
    if abs(phi) < PHASE_DEADBAND * phi_scale:
        phase = PhaseLabel.NEAR_ZERO
    else:
        phase = PhaseLabel.PLUS if phi > 0 else PhaseLabel.MINUS
    return spin, phase


def lockin_outcome(traj: TrajectoryRecord, langevin: LangevinParams) -> tuple[SpinLabel, PhaseLabel]:
    """Spin and phase labels from the final sample of a trajectory.

    Dead-bands: |rho11 - rho22| < 0.1 is Undecided, |phi| < 0.1*sqrt(gamma/g) is NearZero.
    """
    if len(traj) == 0:
        raise DomainError("empty trajectory")
    return classify(float(traj.phi[-1]), float(traj.rho11[-1]), float(traj.rho22[-1]), langevin.phi_min)


def labels_agree(spin: SpinLabel, phase: PhaseLabel) -> bool:
    return (spin, phase) in ((SpinLabel.UP, PhaseLabel.PLUS), (SpinLabel.DOWN, PhaseLabel.MINUS))


def potential(phi, langevin: LangevinParams, mu: float, s3_B: float):
    """Biased potential -gamma phi^2/2 + g phi^4/4 - mu <S3>B phi."""
    return -0.5 * langevin.gamma * phi**2 + 0.25 * langevin.g * phi**4 - mu * s3_B * phi
