"""Collective dephasing of the shared two-qubit state.

The closed-form state is canonical; ``integrate_master_equation`` is an
independent RK4 integrator of the master equation used to check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, ValidationFailed
from .linalg import DensityMatrix4

DEFAULT_DT = 1e-4
_INTEGRATOR_TOL = 1e-8

# Collective spin operator J_z = (sigma_z (x) 1 + 1 (x) sigma_z) / 2.
JZ = np.diag([1.0, 0.0, 0.0, -1.0]).astype(complex)
JZ.setflags(write=False)

# |phi+> = (|00> + i|11>) / sqrt(2)
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0j]) / math.sqrt(2.0)
PHI_PLUS.setflags(write=False)


@dataclass(frozen=True)
class DecoherenceParam:
    """Decoherence level ``mu = exp(-2 gamma t)`` in [0, 1]."""

    mu: float

    def __post_init__(self):
        mu = float(self.mu)
        if not math.isfinite(mu) or not 0.0 <= mu <= 1.0:
            raise InvalidParameter(f"mu must lie in [0, 1], got {self.mu!r}")
        object.__setattr__(self, "mu", mu)

    @property
    def gamma_t(self) -> float:
        return math.inf if self.mu == 0.0 else -0.5 * math.log(self.mu)


def decoherence_from_gamma_t(gamma_t: float) -> DecoherenceParam:
    gamma_t = float(gamma_t)
    if not math.isfinite(gamma_t) or gamma_t < 0:
        raise InvalidParameter(f"gamma_t must be finite and >= 0, got {gamma_t!r}")
    return DecoherenceParam(math.exp(-2.0 * gamma_t))


def _as_param(p) -> DecoherenceParam:
    return p if isinstance(p, DecoherenceParam) else DecoherenceParam(p)


def initial_state_matrix(mu: float) -> np.ndarray:
    """Unvalidated closed-form dephased state as a raw 4x4 array."""
    rho = 0.5 * (1.0 - mu) * np.diag([1.0, 0.0, 0.0, 1.0]).astype(complex)
    return rho + mu * np.outer(PHI_PLUS, PHI_PLUS.conj())


def initial_state(p) -> DensityMatrix4:
    """Maximally entangled |phi+> after collective dephasing.

    ``p`` may be a :class:`DecoherenceParam` or a bare ``mu``.
    """
    return DensityMatrix4(initial_state_matrix(_as_param(p).mu))


def dephasing_generator(rho: np.ndarray, gamma: float) -> np.ndarray:
    """Right-hand side of the collective dephasing master equation."""
    jz2 = JZ @ JZ
    return 0.5 * gamma * (2.0 * JZ @ rho @ JZ - jz2 @ rho - rho @ jz2)


def dephasing_superoperator(gamma: float) -> np.ndarray:
    """16x16 matrix of the generator acting on row-major ``vec(rho)``.

    Uses ``vec(A rho B) = (A kron B^T) vec(rho)``.
    """
    eye = np.eye(4)
    jz2 = JZ @ JZ
    return 0.5 * gamma * (2.0 * np.kron(JZ, JZ.T) - np.kron(jz2, eye) - np.kron(eye, jz2.T))


def rk4_step_matrix(lind: np.ndarray, h: float) -> np.ndarray:
    """Classical RK4 step for ``dv/dt = L v``, written out stage by stage."""
    eye = np.eye(lind.shape[0], dtype=complex)
    k1 = lind
    k2 = lind @ (eye + 0.5 * h * k1)
    k3 = lind @ (eye + 0.5 * h * k2)
    k4 = lind @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_master_equation(rho0, gamma: float, t: float,
                              dt: float = DEFAULT_DT) -> DensityMatrix4:
    """Evolve ``rho0`` for time ``t`` with classical fourth-order Runge-Kutta.

    The final partial step is shortened so the integration lands exactly on
    ``t``.
    """
    for name, v in (("gamma", gamma), ("t", t), ("dt", dt)):
        if not math.isfinite(v):
            raise InvalidParameter(f"{name} must be finite, got {v!r}")
    if gamma < 0 or t < 0:
        raise InvalidParameter("gamma and t must be >= 0")
    if dt <= 0:
        raise InvalidParameter(f"dt must be > 0, got {dt!r}")
    if not isinstance(rho0, DensityMatrix4):
        rho0 = DensityMatrix4(rho0)
    if t == 0:
        return rho0

    # the generator is linear and time independent, so one RK4 step is the
    # matrix I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24 acting on vec(rho)
    lind = dephasing_superoperator(gamma)
    vec = np.array(rho0.mat).reshape(16)
    n_full = int(math.floor(t / dt + 1e-9))
    rest = t - n_full * dt
    step = rk4_step_matrix(lind, dt)
    for _ in range(n_full):
        vec = step @ vec
    if rest > 1e-15:
        vec = rk4_step_matrix(lind, rest) @ vec
    rho = vec.reshape(4, 4)

    rho = 0.5 * (rho + rho.conj().T)
    # re-normalize only within the integrator tolerance; larger drift is an error
    drift = abs(np.trace(rho) - 1.0)
    if drift > _INTEGRATOR_TOL:
        raise ValidationFailed(f"integrated state lost normalization ({drift:.3e})")
    rho = rho / np.trace(rho).real
    try:
        return DensityMatrix4(rho)
    except ValidationFailed as exc:
        raise ValidationFailed(f"integrated state invalid: {exc}") from exc
