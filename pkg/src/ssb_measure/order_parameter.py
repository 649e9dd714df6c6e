"""Reduced order-parameter dynamics and its linear-regime statistics.

The order parameter obeys the Langevin equation

    dphi/dt = gamma*phi - g*phi**3 + eta(t),   <eta(t) eta(t')> = eps * delta(t - t')

integrated here with Euler-Maruyama.  Around the symmetric point (g -> 0) the
transition density is Gaussian, which gives closed forms for the probability
of ending on either side (``p_plus``/``p_minus``), for the onset time of order,
and for the bias-to-spread ratio ``z`` used to tune the noise strength.

Two noise-variance conventions are exposed:

``"mc"``
    Ito-consistent.  Var phi(t) = (eps/2gamma)(e^{2 gamma t} - 1).  The spread
    that decides the sign outcome is the variance of ``e^{-gamma t} phi``,
    (eps/2gamma)(1 - e^{-2 gamma t}).  Both agree with Monte Carlo.
``"paper"``
    The literal ``(eps/gamma)(e^{2 gamma t} - 1)``, used for both the phi
    variance and the sign spread.  Kept for reproducing published curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np
from scipy.special import erf, erfc

from .errors import DomainError, OptimizationError
from .noise import NoiseSource, draw_block

Convention = Literal["mc", "paper"]
CONVENTIONS = ("mc", "paper")


@dataclass(frozen=True)
class LangevinParams:
    """Linear instability rate ``gamma``, quartic saturation ``g`` and noise strength ``epsilon``.

    ``g = 0`` is accepted for the linearised dynamics; anything needing the
    broken-phase minima (onset time, phase labels) requires ``g > 0``.
    """

    gamma: float
    g: float
    epsilon: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be > 0 (symmetry-breaking regime), got {self.gamma}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise DomainError(f"g must be >= 0, got {self.g}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def phi_min(self) -> float:
        """Position of the broken-phase minima, sqrt(gamma/g)."""
        return math.sqrt(self.gamma / self.g) if self.g > 0 else math.inf

    def with_epsilon(self, epsilon: float) -> "LangevinParams":
        return replace(self, epsilon=epsilon)


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def drift(phi, params: LangevinParams):
    return phi * (params.gamma - params.g * phi * phi)


def em_step(phi, params: LangevinParams, dt: float, n, bias: float = 0.0):
    """One Euler-Maruyama step; ``n`` is a standard-normal deviate (scalar or array).

    ``bias`` is an extra constant drift, e.g. a frozen spin coupling.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return phi + (drift(phi, params) + bias) * dt + math.sqrt(params.epsilon * dt) * n


def variance_profile(t: float, params: LangevinParams, convention: Convention = "mc") -> float:
    """Variance of phi(t) for the linearised dynamics started from a point."""
    _check_convention(convention)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    growth = math.expm1(2.0 * params.gamma * t)
    if convention == "paper":
        return params.epsilon / params.gamma * growth
    return params.epsilon / (2.0 * params.gamma) * growth


def bias_spread(t: float, params: LangevinParams, convention: Convention = "mc") -> float:
    """Spread compared against the initial bias when deciding the sign at time ``t``.

    Under ``"mc"`` this is Var[e^{-gamma t} phi(t)] so that the sign probability
    of the linear dynamics started at ``delta`` is exactly ``p_plus(delta, .)``.
    """
    _check_convention(convention)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if convention == "paper":
        return variance_profile(t, params, "paper")
    return -params.epsilon / (2.0 * params.gamma) * math.expm1(-2.0 * params.gamma * t)


def make_grid(var: float, params: LangevinParams, n: int = 2048) -> np.ndarray:
    """Uniform grid over +-max(6 sqrt(var), 3 sqrt(gamma/g))."""
    half = 6.0 * math.sqrt(max(var, 0.0))
    if params.g > 0:
        half = max(half, 3.0 * params.phi_min)
    if half == 0:
        raise DomainError("cannot size a grid with zero variance and g = 0")
    return np.linspace(-half, half, n)


def _trapz(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.trapezoid(y, x)) if hasattr(np, "trapezoid") else float(np.trapz(y, x))


def gaussian_propagate(
    grid: np.ndarray,
    p0: np.ndarray,
    t: float,
    params: LangevinParams,
    convention: Convention = "mc",
) -> np.ndarray:
    """Propagate a density on a uniform grid through the linear (g = 0) dynamics.

    Each source point ``y`` is mapped to a Gaussian with mean ``y*exp(gamma*t)``
    and variance ``variance_profile(t)``.  Kernel columns are normalised on the
    grid so every source keeps its mass, then the result is renormalised.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    grid = np.asarray(grid, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if grid.shape != p0.shape or grid.ndim != 1 or grid.size < 3:
        raise DomainError("grid and p0 must be 1-d arrays of equal length >= 3")
    if np.any(p0 < 0):
        raise DomainError("p0 must be non-negative")
    h = grid[1] - grid[0]
    if t == 0:
        return p0.copy()

    w = np.full(grid.size, h)
    w[0] = w[-1] = 0.5 * h
    mass = p0 * w
    means = grid * math.exp(params.gamma * t)
    var = variance_profile(t, params, convention)

    if var < (0.25 * h) ** 2:
        # kernel narrower than the grid: push mass forward with linear interpolation
        out = np.zeros_like(p0)
        pos = (means - grid[0]) / h
        inside = (pos >= 0) & (pos <= grid.size - 1)
        lo = np.minimum(np.floor(pos[inside]).astype(int), grid.size - 2)
        frac = pos[inside] - lo
        np.add.at(out, lo, mass[inside] * (1 - frac))
        np.add.at(out, lo + 1, mass[inside] * frac)
        out /= w
    else:
        kernel = np.exp(-((grid[:, None] - means[None, :]) ** 2) / (2.0 * var))
        col = kernel.T @ w
        keep = col > 0
        kernel[:, keep] /= col[keep]
        kernel[:, ~keep] = 0.0
        out = kernel @ mass

    total = _trapz(out, grid)
    if total <= 0:
        raise DomainError("all probability mass left the grid")
    return out / total


def p_plus(delta, var):
    """Probability of the positive branch, (1 + erf(delta/sqrt(2 var)))/2."""
    var = np.asarray(var, dtype=float)
    if np.any(~(var > 0)):
        raise DomainError("variance must be positive")
    out = 0.5 * (1.0 + erf(np.asarray(delta, dtype=float) / np.sqrt(2.0 * var)))
    return float(out) if out.ndim == 0 else out


def p_minus(delta, var):
    """Probability of the negative branch, erfc(delta/sqrt(2 var))/2."""
    var = np.asarray(var, dtype=float)
    if np.any(~(var > 0)):
        raise DomainError("variance must be positive")
    out = 0.5 * erfc(np.asarray(delta, dtype=float) / np.sqrt(2.0 * var))
    return float(out) if out.ndim == 0 else out


def onset_factor(params: LangevinParams, delta: float) -> float:
    """(g/gamma)(eps/gamma + delta^2); the onset time is defined while this is below 1."""
    return params.g / params.gamma * (params.epsilon / params.gamma + delta * delta)


def onset_time(params: LangevinParams, delta: float) -> float:
    """Time to roll from the effective initial spread to the inflection region."""
    if params.g <= 0:
        raise DomainError("onset time needs g > 0")
    k = onset_factor(params, delta)
    if k <= 0:
        raise DomainError("onset time diverges when both epsilon and delta vanish")
    if k > 1:
        raise DomainError(f"already past onset: (g/gamma)(eps/gamma + delta^2) = {k:.6g} > 1")
    return -math.log(k) / (2.0 * params.gamma)


def delta_max(mu: float, B: float, gamma: float) -> float:
    """Initial bias of a fully polarised spin, mu*B/(2 gamma)."""
    return mu * B / (2.0 * gamma)


def bias_from_s3(s3: float, mu: float, B: float, gamma: float) -> float:
    return mu * s3 * B / gamma


def optimization_z(params: LangevinParams, mu: float, B: float, convention: Convention = "mc") -> float:
    """Bias-to-spread ratio delta_max / sqrt(2 spread(t0)) at the onset time of delta_max."""
    dm = delta_max(mu, B, params.gamma)
    if dm == 0:
        return 0.0
    t0 = onset_time(params, dm)
    spread = bias_spread(t0, params, convention)
    if spread <= 0:
        return math.inf
    return abs(dm) / math.sqrt(2.0 * spread)


def _z_of_epsilon_branch_end(gamma: float, g: float, dm: float, convention: str) -> float:
    # z(eps) falls from +inf at eps -> 0 to a minimum and rises again as the onset
    # factor reaches 1; tuning is restricted to the falling branch.
    a = gamma / g
    d = dm * dm
    if convention == "paper":
        u_star = math.sqrt(a * d) - d
    else:
        u_star = 0.5 * (a - d)
    return gamma * u_star


def tune_noise_for_z(
    target_z: float,
    gamma: float,
    g: float,
    mu: float,
    B: float,
    convention: Convention = "mc",
    eps_lower: float = 1e-12,
    rtol: float = 1e-9,
    max_iter: int = 400,
) -> float:
    """Noise strength epsilon at which ``optimization_z`` equals ``target_z``.

    Bisection in log(epsilon) on the branch where z decreases with epsilon.
    Raises :class:`OptimizationError` naming the searched interval when the
    target is not bracketed.
    """
    _check_convention(convention)
    if not target_z > 0:
        raise DomainError(f"target z must be positive, got {target_z}")
    if not (gamma > 0 and g > 0):
        raise DomainError("tuning needs gamma > 0 and g > 0")
    dm = delta_max(mu, B, gamma)
    if dm == 0:
        raise OptimizationError("mu*B = 0 gives z = 0 for every epsilon")
    if dm * dm * g / gamma >= 1:
        raise OptimizationError("bias alone already exceeds the onset region; no epsilon works")
    eps_upper = _z_of_epsilon_branch_end(gamma, g, dm, convention)

    def z_of(eps: float) -> float:
        return optimization_z(LangevinParams(gamma, g, eps), mu, B, convention)

    if eps_upper <= eps_lower:
        raise OptimizationError(f"empty search interval [{eps_lower:.3g}, {eps_upper:.3g}]")
    z_lo, z_hi = z_of(eps_lower), z_of(eps_upper)
    if not z_hi <= target_z <= z_lo:
        raise OptimizationError(
            f"target z = {target_z} not bracketed: z ranges over [{z_hi:.6g}, {z_lo:.6g}] "
            f"for epsilon in [{eps_lower:.3g}, {eps_upper:.6g}]"
        )
    lo, hi = math.log(eps_lower), math.log(eps_upper)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        z_mid = z_of(math.exp(mid))
        if abs(z_mid - target_z) <= rtol * target_z:
            return math.exp(mid)
        if z_mid > target_z:
            lo = mid
        else:
            hi = mid
    eps = math.exp(0.5 * (lo + hi))
    if abs(z_of(eps) - target_z) > 1e-6 * target_z:
        raise OptimizationError(f"bisection did not converge within [{math.exp(lo):.6g}, {math.exp(hi):.6g}]")
    return eps


def integrate_langevin(
    phi0: float,
    params: LangevinParams,
    dt: float,
    n_steps: int,
    source: NoiseSource,
    bias: float = 0.0,
) -> np.ndarray:
    """Single Euler-Maruyama path, returning all ``n_steps + 1`` samples."""
    out = np.empty(n_steps + 1)
    out[0] = phi = phi0
    noise = source.normals(n_steps)
    for k in range(n_steps):
        phi = em_step(phi, params, dt, noise[k], bias)
        out[k + 1] = phi
    return out


@dataclass
class LangevinBatch:
    final: np.ndarray
    """phi at the last integrated step (with a threshold, integration may stop early)."""
    crossed_sign: np.ndarray | None = None
    """+1/-1 at the first passage of |phi| over the threshold, 0 if never crossed."""
    crossing_time: np.ndarray | None = None


def run_langevin_batch(
    seeds: Sequence[int],
    params: LangevinParams,
    dt: float,
    n_steps: int,
    phi0: float = 0.0,
    bias: float = 0.0,
    threshold: float | None = None,
    block: int = 512,
) -> LangevinBatch:
    """Independent Euler-Maruyama runs, one :class:`NoiseSource` per seed.

    Row ``k`` of the result depends only on ``seeds[k]``, so batches may be split
    or reordered freely.  With ``threshold`` set, the sign at the first passage
    of ``|phi| > threshold`` is recorded and integration stops once every run
    has crossed.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    sources = [NoiseSource(s) for s in seeds]
    n = len(sources)
    phi = np.full(n, float(phi0))
    sign = np.zeros(n, dtype=np.int8) if threshold is not None else None
    when = np.full(n, np.nan) if threshold is not None else None
    step = 0
    while step < n_steps:
        m = min(block, n_steps - step)
        noise = draw_block(sources, m)
        for j in range(m):
            phi = em_step(phi, params, dt, noise[:, j], bias)
            if threshold is not None:
                new = (sign == 0) & (np.abs(phi) > threshold)
                if new.any():
                    sign[new] = np.where(phi[new] > 0, 1, -1)
                    when[new] = (step + j + 1) * dt
        step += m
        if threshold is not None and not (sign == 0).any():
            break
    return LangevinBatch(phi, sign, when)
