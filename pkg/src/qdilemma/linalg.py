"""Dense 2x2 / 4x4 complex linear algebra for the two-qubit game.

Matrices are plain ``numpy`` complex128 arrays. Two-qubit operators use the
basis order |00>, |01>, |10>, |11> with Alice's qubit as the left factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, ValidationFailed

# Tolerances used across the package.
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
EIG_HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
JACOBI_OFFDIAG_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100

BASIS_LABELS = ("00", "01", "10", "11")

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)


def as_matrix(m, dim: int | None = None) -> np.ndarray:
    """Return ``m`` as a finite complex square array of size 2 or 4."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 4):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 matrices (``a`` acts on the left qubit)."""
    return np.kron(as_matrix(a, 2), as_matrix(b, 2))


def adjoint(m) -> np.ndarray:
    return as_matrix(m).conj().T


def mat_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b


def trace(m) -> complex:
    return complex(np.trace(as_matrix(m)))


def frobenius_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)))


def hermiticity_error(m) -> float:
    a = as_matrix(m)
    return float(np.max(np.abs(a - a.conj().T)))


def unitarity_error(u) -> float:
    a = as_matrix(u)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    return unitarity_error(u) <= tol


def hermitian_eigenvalues(m) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in ascending order.

    Uses cyclic complex Jacobi rotations on the Hermitian part of ``m``.
    Each rotation first removes the phase of the pivot element, then applies
    the real symmetric Jacobi rotation that annihilates it.

    Raises:
        NotHermitian: if ``m`` deviates from its adjoint by more than 1e-10.
    """
    a = as_matrix(m)
    err = hermiticity_error(a)
    if err > EIG_HERMITIAN_TOL:
        raise NotHermitian(f"matrix is not Hermitian (max |m - m^H| = {err:.3e})")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off <= JACOBI_OFFDIAG_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(a[p, q])
                if g <= 1e-300:
                    continue
                phase = a[p, q] / g
                tau = (a[q, q].real - a[p, p].real) / (2.0 * g)
                t = 1.0 / (abs(tau) + math.hypot(1.0, tau))
                if tau < 0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                j = np.eye(n, dtype=complex)
                j[p, p] = c
                j[p, q] = s
                j[q, p] = -s * np.conj(phase)
                j[q, q] = c * np.conj(phase)
                a = j.conj().T @ a @ j
                a = 0.5 * (a + a.conj().T)
    return np.sort(np.diag(a).real)


@dataclass(frozen=True, eq=False)
class DensityMatrix4:
    """A validated two-qubit density matrix (Hermitian, unit trace, PSD)."""

    mat: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.mat, 4).copy()
        herm = hermiticity_error(a)
        if herm > HERMITIAN_TOL:
            raise ValidationFailed(f"density matrix not Hermitian (error {herm:.3e})")
        tr = abs(np.trace(a) - 1.0)
        if tr > TRACE_TOL:
            raise ValidationFailed(f"density matrix trace deviates from 1 by {tr:.3e}")
        lo = hermitian_eigenvalues(a)[0]
        if lo < -PSD_TOL:
            raise ValidationFailed(f"density matrix has negative eigenvalue {lo:.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "mat", a)

    @classmethod
    def hermitized(cls, m) -> "DensityMatrix4":
        """Build from ``m`` after averaging it with its adjoint."""
        a = as_matrix(m, 4)
        return cls(0.5 * (a + a.conj().T))

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.mat)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.mat, dtype=dtype)
