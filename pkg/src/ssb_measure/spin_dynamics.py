"""Spin-1/2 in a stationary dissipative reservoir.

Decoherence (QD) and pro-coherence (QP) of a single spin, with a closed-form
solution and an RK4 integrator of the underlying master equation that are
meant to cross-check each other.

Conventions
-----------
- Basis ordering is (spin-up, spin-down); ``S3 = diag(+1/2, -1/2)``.
- ``S+`` raises (down -> up), ``S- = S+^T`` lowers.
- The master equation is

      drho/dt = -i*omega*[S3, rho]
                + a*D[S-](rho) + b*D[S+](rho) + c*D[S3](rho),
      D[X](rho) = [X rho, X^dag] + h.c.

  so ``a`` is the rate of down-flips and ``b`` the rate of up-flips.  With this
  assignment the generator reproduces the closed form used by
  :func:`evolve_analytic` (populations relax at ``2(a+b)``, coherences decay at
  ``a+b+c`` and rotate as ``exp(-i*omega*t)``).  Reading the dissipators with the
  jump operators swapped would exchange ``a`` and ``b``; the closed form is
  treated as the ground truth.
- Reservoir rates are real; no Lamb shift is modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

S3 = np.diag([0.5, -0.5]).astype(complex)
S_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
S_MINUS = S_PLUS.T.copy()

RK4_STABILITY = 0.1


@dataclass(frozen=True)
class SpinDensityMatrix:
    """2x2 Hermitian, unit-trace state; ``rho21`` is the conjugate of ``rho12``."""

    rho11: float
    rho22: float
    rho12: complex = 0j

    @property
    def rho21(self) -> complex:
        return complex(self.rho12).conjugate()

    @property
    def trace(self) -> float:
        return self.rho11 + self.rho22

    @property
    def s3(self) -> float:
        """Expectation value of S3."""
        return 0.5 * (self.rho11 - self.rho22)

    def matrix(self) -> np.ndarray:
        return np.array([[self.rho11, self.rho12], [self.rho21, self.rho22]], dtype=complex)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "SpinDensityMatrix":
        m = np.asarray(m)
        return cls(float(m[0, 0].real), float(m[1, 1].real), complex(0.5 * (m[0, 1] + np.conj(m[1, 0]))))

    @classmethod
    def from_populations(cls, rho11: float, rho12: complex = 0j) -> "SpinDensityMatrix":
        return cls(rho11, 1.0 - rho11, rho12)

    @classmethod
    def pure_up(cls) -> "SpinDensityMatrix":
        return cls(1.0, 0.0, 0j)

    @classmethod
    def pure_down(cls) -> "SpinDensityMatrix":
        return cls(0.0, 1.0, 0j)

    @classmethod
    def maximally_mixed(cls) -> "SpinDensityMatrix":
        return cls(0.5, 0.5, 0j)

    @classmethod
    def from_s3(cls, s3: float) -> "SpinDensityMatrix":
        """Pure state on the x-z great circle with the given <S3>.

        ``rho11 = 1/2 + s3`` and ``rho12 = sqrt(rho11*rho22)`` (real, positive).
        """
        if not -0.5 <= s3 <= 0.5:
            raise DomainError(f"<S3> must lie in [-1/2, 1/2], got {s3}")
        p = 0.5 + s3
        q = 1.0 - p
        return cls(p, q, complex(math.sqrt(max(p * q, 0.0)), 0.0))

    def mirrored(self) -> "SpinDensityMatrix":
        """Image under the Z2 map up <-> down."""
        return SpinDensityMatrix(self.rho22, self.rho11, complex(self.rho12).conjugate())

    def validate(self, tol: float = 1e-12) -> None:
        if not all(math.isfinite(v) for v in (self.rho11, self.rho22, self.rho12.real, self.rho12.imag)):
            raise DomainError("density matrix has non-finite entries")
        if abs(self.trace - 1.0) > tol:
            raise DomainError(f"trace is {self.trace!r}, expected 1")
        if self.rho11 < -tol or self.rho22 < -tol:
            raise DomainError("negative population")
        if self.rho11 * self.rho22 - abs(self.rho12) ** 2 < -tol:
            raise DomainError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class ReservoirCoefficients:
    """Reservoir rates ``a`` (down-flip), ``b`` (up-flip), ``c`` (dephasing) and precession ``omega``."""

    a: float
    b: float
    c: float
    omega: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"reservoir rate {name} must be finite and >= 0, got {v}")
        if not math.isfinite(self.omega):
            raise DomainError("omega must be finite")

    @property
    def stiffness(self) -> float:
        return self.a + self.b + self.c + abs(self.omega)

    def stationary_state(self) -> SpinDensityMatrix:
        s = self.a + self.b
        if s == 0:
            raise DomainError("no unique stationary state when a = b = 0")
        return SpinDensityMatrix(self.b / s, self.a / s, 0j)


def fdr_rate(b: float, omega: float, temperature: float, hbar: float = 1.0) -> float:
    """Down-flip rate fixed by detailed balance: ``a = b * exp(-hbar*omega/kT)``.

    ``temperature`` is the thermal energy kT.
    """
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    if b < 0:
        raise DomainError("b must be non-negative")
    x = hbar * omega / temperature
    if b == 0:
        return 0.0
    return b * math.exp(-x) if x > -700 else math.inf


def _dissipator(x: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # [X rho, X^+] + h.c., written so it is linear in rho even off the Hermitian subspace
    xd = x.conj().T
    xdx = xd @ x
    return 2.0 * x @ rho @ xd - xdx @ rho - rho @ xdx


def generator(rho: np.ndarray, coeffs: ReservoirCoefficients) -> np.ndarray:
    """Right-hand side of the master equation for a full 2x2 matrix."""
    unitary = -1j * coeffs.omega * (S3 @ rho - rho @ S3)
    return (
        unitary
        + coeffs.a * _dissipator(S_MINUS, rho)
        + coeffs.b * _dissipator(S_PLUS, rho)
        + coeffs.c * _dissipator(S3, rho)
    )


def evolve_analytic(rho0: SpinDensityMatrix, coeffs: ReservoirCoefficients, t: float) -> SpinDensityMatrix:
    """Closed-form state at time ``t``.

    Populations relax as ``rho11(t) = [b(c1+c4) + e^{-2(a+b)t}(a c1 - b c4)]/(a+b)``,
    written here as ``c1 + (1 - e^{-2(a+b)t})(b c4 - a c1)/(a+b)`` so that the
    ``a = b = 0`` limit (frozen populations) needs no special casing beyond
    the removable singularity.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    a, b = coeffs.a, coeffs.b
    c1, c4, c2 = rho0.rho11, rho0.rho22, complex(rho0.rho12)
    s = a + b
    if s == 0:
        f11 = f22 = 0.0
    else:
        relax = -math.expm1(-2.0 * s * t) / s
        f11 = relax * (b * c4 - a * c1)
        f22 = relax * (a * c1 - b * c4)
    decay = math.exp(-(s + coeffs.c) * t)
    phase = complex(math.cos(coeffs.omega * t), -math.sin(coeffs.omega * t))
    return SpinDensityMatrix(c1 + f11, c4 + f22, c2 * decay * phase)


def rk4_step_matrix(rho: np.ndarray, coeffs: ReservoirCoefficients, h: float) -> np.ndarray:
    k1 = generator(rho, coeffs)
    k2 = generator(rho + 0.5 * h * k1, coeffs)
    k3 = generator(rho + 0.5 * h * k2, coeffs)
    k4 = generator(rho + h * k3, coeffs)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagator(coeffs: ReservoirCoefficients, h: float) -> np.ndarray:
    """One RK4 step as a 4x4 matrix on the row-major ``vec(rho)``.

    The generator is linear and time-independent, so a classical RK4 step is
    exactly the degree-4 Taylor polynomial of ``h*L``.
    """
    basis = np.eye(4, dtype=complex).reshape(4, 2, 2)
    L = np.stack([generator(e, coeffs).ravel() for e in basis], axis=1) * h
    L2 = L @ L
    return np.eye(4) + L + L2 / 2.0 + (L2 @ L) / 6.0 + (L2 @ L2) / 24.0


def _rk4_steps(rho: np.ndarray, coeffs: ReservoirCoefficients, h: float, n: int) -> np.ndarray:
    step = np.linalg.matrix_power(rk4_propagator(coeffs, h), n)
    return (step @ rho.ravel()).reshape(2, 2)


def _check_step(coeffs: ReservoirCoefficients, dt: float) -> None:
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if dt * coeffs.stiffness >= RK4_STABILITY:
        raise ConfigurationError(
            f"step too large: dt*(a+b+c+|omega|) = {dt * coeffs.stiffness:.3g} >= {RK4_STABILITY}"
        )


def evolve_numeric(
    rho0: SpinDensityMatrix, coeffs: ReservoirCoefficients, t: float, dt: float
) -> SpinDensityMatrix:
    """Integrate the master equation with fixed-step classical RK4.

    The number of steps is ``ceil(t/dt)`` with the step shrunk to land on ``t``.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    _check_step(coeffs, dt)
    if t == 0:
        return rho0
    n = max(1, math.ceil(t / dt - 1e-12))
    return SpinDensityMatrix.from_matrix(_rk4_steps(rho0.matrix(), coeffs, t / n, n))


def evolve_numeric_path(
    rho0: SpinDensityMatrix, coeffs: ReservoirCoefficients, times: np.ndarray, dt: float
) -> list[SpinDensityMatrix]:
    """RK4 states at each of the increasing sample ``times`` (starting from t=0)."""
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < 0 or np.any(np.diff(times) <= 0)):
        raise DomainError("sample times must be non-negative and strictly increasing")
    _check_step(coeffs, dt)
    out = []
    rho = rho0.matrix()
    t_prev = 0.0
    for t in times:
        span = t - t_prev
        if span > 0:
            n = max(1, math.ceil(span / dt - 1e-12))
            rho = _rk4_steps(rho, coeffs, span / n, n)
        out.append(SpinDensityMatrix.from_matrix(rho))
        t_prev = t
    return out


def purity(rho: SpinDensityMatrix) -> float:
    """Tr rho^2 = rho11^2 + rho22^2 + 2|rho12|^2."""
    return rho.rho11**2 + rho.rho22**2 + 2.0 * abs(rho.rho12) ** 2


def cl_purity_asymptote(omega: float, temperature: float, hbar: float = 1.0) -> float:
    """Long-time purity of a damped oscillator in a thermal bath: tanh(hbar*omega/2kT)."""
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    return math.tanh(hbar * omega / (2.0 * temperature))
