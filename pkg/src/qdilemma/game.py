"""Quantized Prisoners' Dilemma on the dephased entangled state.

The operator route (``apply_strategies`` followed by ``trace_payoffs``) is
the reference. The ``closed_form_*`` functions evaluate the printed payoff
formulas literally, typos included, so ``cross_validate`` can measure how far
each one strays from the operator route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import initial_state
from .errors import InvalidParameter, NotUnitary, NumericalInconsistency
from .linalg import UNITARY_TOL, DensityMatrix4, as_matrix, tensor_product, unitarity_error

PI = math.pi
HALF_PI = 0.5 * math.pi
_RANGE_SLACK = 1e-12
IMAG_WARN_TOL = 1e-10
IMAG_FAIL_TOL = 1e-8


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < lo - _RANGE_SLACK or value > hi + _RANGE_SLACK:
        raise InvalidParameter(f"{name} must lie in [{lo:.6g}, {hi:.6g}], got {value!r}")
    return value


@dataclass(frozen=True)
class TwoParamStrategy:
    """``U = cos(theta/2) R(phi) + sin(theta/2) C`` with theta in [0, pi], phi in [0, pi/2]."""

    theta: float
    phi: float
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_range("theta", self.theta, 0.0, PI))
        object.__setattr__(self, "phi", _check_range("phi", self.phi, 0.0, HALF_PI))

    @property
    def params(self) -> tuple[float, ...]:
        return (self.theta, self.phi)

    def unitary(self) -> np.ndarray:
        return unitary_2p(self)

    def __str__(self):
        return self.name or f"({self.theta:.6g}, {self.phi:.6g})"


@dataclass(frozen=True)
class ThreeParamStrategy:
    """General SU(2) move with theta in [0, pi] and phi, psi in [-pi, pi]."""

    theta: float
    phi: float
    psi: float
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_range("theta", self.theta, 0.0, PI))
        object.__setattr__(self, "phi", _check_range("phi", self.phi, -PI, PI))
        object.__setattr__(self, "psi", _check_range("psi", self.psi, -PI, PI))

    @property
    def params(self) -> tuple[float, ...]:
        return (self.theta, self.phi, self.psi)

    def unitary(self) -> np.ndarray:
        return unitary_3p(self)

    def __str__(self):
        return self.name or f"({self.theta:.6g}, {self.phi:.6g}, {self.psi:.6g})"


Strategy = TwoParamStrategy | ThreeParamStrategy

COOPERATE = TwoParamStrategy(0.0, 0.0, name="C")
DEFECT = TwoParamStrategy(PI, 0.0, name="D")
QUANTUM = TwoParamStrategy(0.0, HALF_PI, name="Q")
NAMED_STRATEGIES = {"C": COOPERATE, "D": DEFECT, "Q": QUANTUM}


@dataclass(frozen=True)
class MeasurementBasis:
    """Entanglement ``delta`` of the measurement basis, in [0, pi/2]."""

    delta: float

    def __post_init__(self):
        object.__setattr__(self, "delta", _check_range("delta", self.delta, 0.0, HALF_PI))


@dataclass(frozen=True)
class ClassicalPayoffs:
    reward: float = 3.0
    sucker: float = 0.0
    temptation: float = 5.0
    punishment: float = 1.0

    def __post_init__(self):
        for name in ("reward", "sucker", "temptation", "punishment"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidParameter(f"{name} payoff must be finite, got {v!r}")
            object.__setattr__(self, name, v)

    def bimatrix(self) -> dict[tuple[str, str], tuple[float, float]]:
        """Classical game as ``{(alice_move, bob_move): (alice, bob)}``."""
        r, s, t, p = self.reward, self.sucker, self.temptation, self.punishment
        return {("C", "C"): (r, r), ("C", "D"): (s, t), ("D", "C"): (t, s), ("D", "D"): (p, p)}

    @property
    def bounds(self) -> tuple[float, float]:
        vals = (self.reward, self.sucker, self.temptation, self.punishment)
        return min(vals), max(vals)


DEFAULT_PAYOFFS = ClassicalPayoffs()


class PayoffPair(NamedTuple):
    alice: float
    bob: float


def _basis(b) -> MeasurementBasis:
    return b if isinstance(b, MeasurementBasis) else MeasurementBasis(b)


# -- strategy unitaries -----------------------------------------------------

def unitary_2p_batch(theta, phi) -> np.ndarray:
    """Vectorized two-parameter unitaries, shape ``broadcast(theta, phi) + (2, 2)``."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    u = np.empty(theta.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c * np.exp(1j * phi)
    u[..., 1, 1] = c * np.exp(-1j * phi)
    # C|0> = -|1>, C|1> = |0>
    u[..., 0, 1] = s
    u[..., 1, 0] = -s
    return u


def unitary_3p_batch(theta, phi, psi) -> np.ndarray:
    theta, phi, psi = np.broadcast_arrays(
        np.asarray(theta, float), np.asarray(phi, float), np.asarray(psi, float))
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    u = np.empty(theta.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c * np.exp(1j * phi)
    u[..., 1, 1] = c * np.exp(-1j * phi)
    u[..., 0, 1] = 1j * s * np.exp(1j * psi)
    u[..., 1, 0] = 1j * s * np.exp(-1j * psi)
    return u


def unitary_2p(s: TwoParamStrategy) -> np.ndarray:
    return unitary_2p_batch(s.theta, s.phi)


def unitary_3p(s: ThreeParamStrategy) -> np.ndarray:
    return unitary_3p_batch(s.theta, s.phi, s.psi)


def strategy_unitary(s: Strategy) -> np.ndarray:
    if isinstance(s, TwoParamStrategy):
        return unitary_2p(s)
    if isinstance(s, ThreeParamStrategy):
        return unitary_3p(s)
    raise TypeError(f"not a strategy: {s!r}")


# -- measurement -----------------------------------------------------------

def measurement_projectors(b) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Rank-1 projectors ``(P00, P11, P10, P01)`` of the delta-entangled basis."""
    delta = _basis(b).delta
    c, s = math.cos(0.5 * delta), math.sin(0.5 * delta)
    e = np.eye(4, dtype=complex)
    ket00, ket01, ket10, ket11 = e
    psi00 = c * ket00 + 1j * s * ket11
    psi11 = c * ket11 + 1j * s * ket00
    psi10 = c * ket10 - 1j * s * ket01
    psi01 = c * ket01 - 1j * s * ket10
    return tuple(np.outer(v, v.conj()) for v in (psi00, psi11, psi10, psi01))


def payoff_operators(b, c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> tuple[np.ndarray, np.ndarray]:
    p00, p11, p10, p01 = measurement_projectors(b)
    pa = c.reward * p00 + c.punishment * p11 + c.temptation * p10 + c.sucker * p01
    pb = c.reward * p00 + c.punishment * p11 + c.sucker * p10 + c.temptation * p01
    return pa, pb


# -- trace pipeline ---------------------------------------------------------

def apply_strategies(rho, u_a, u_b) -> DensityMatrix4:
    """Conjugate the shared state by ``U_A (x) U_B``."""
    u_a, u_b = as_matrix(u_a, 2), as_matrix(u_b, 2)
    for who, u in (("Alice", u_a), ("Bob", u_b)):
        err = unitarity_error(u)
        if err > UNITARY_TOL:
            raise NotUnitary(f"{who}'s operator is not unitary (error {err:.3e})")
    if not isinstance(rho, DensityMatrix4):
        rho = DensityMatrix4(rho)
    u = tensor_product(u_a, u_b)
    return DensityMatrix4.hermitized(u @ rho.mat @ u.conj().T)


def trace_payoffs(rho_f, b, c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> PayoffPair:
    rho_f = rho_f.mat if isinstance(rho_f, DensityMatrix4) else as_matrix(rho_f, 4)
    pa, pb = payoff_operators(b, c)
    vals = (np.trace(pa @ rho_f), np.trace(pb @ rho_f))
    worst = max(abs(v.imag) for v in vals)
    if worst > IMAG_FAIL_TOL:
        raise NumericalInconsistency(f"payoff trace has imaginary part {worst:.3e}")
    return PayoffPair(float(vals[0].real), float(vals[1].real))


def payoffs(s_a: Strategy, s_b: Strategy, mu: float, delta: float,
            c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> PayoffPair:
    """Full pipeline: dephased state, strategies, measurement."""
    rho_f = apply_strategies(initial_state(mu), strategy_unitary(s_a), strategy_unitary(s_b))
    return trace_payoffs(rho_f, delta, c)


def payoffs_batch(u_a: np.ndarray, u_b: np.ndarray, mu: float, delta: float,
                  c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> tuple[np.ndarray, np.ndarray]:
    """Trace pipeline over broadcast stacks of 2x2 unitaries (no validation)."""
    from .channel import initial_state_matrix

    shape = np.broadcast_shapes(u_a.shape, u_b.shape)
    u_a, u_b = np.broadcast_to(u_a, shape), np.broadcast_to(u_b, shape)
    u = np.einsum("...ij,...kl->...ikjl", u_a, u_b).reshape(shape[:-2] + (4, 4))
    rho_f = u @ initial_state_matrix(mu) @ np.conj(np.swapaxes(u, -1, -2))
    pa, pb = payoff_operators(delta, c)
    return (np.einsum("ij,...ji->...", pa, rho_f).real,
            np.einsum("ij,...ji->...", pb, rho_f).real)


# -- printed closed forms ---------------------------------------------------

def _formula_2p_general(ta, pa, tb, pb, mu, delta):
    ca2, cb2 = np.cos(ta / 2) ** 2, np.cos(tb / 2) ** 2
    sa2, sb2 = np.sin(ta / 2) ** 2, np.sin(tb / 2) ** 2
    sd = np.sin(delta)
    common = ((2 + mu * np.cos(2 * (pa + pb)) * sd) * ca2 * cb2
              + (2 - mu * sd) * sa2 * sb2
              - 0.25 * (mu + 2 * sd) * np.sin(ta) * np.sin(tb) * np.sin(pa + pb)
              # printed with the same sign for both players
              - 1.25 * np.sin(ta) * np.sin(tb) * np.sin(pa - pb) * sd)
    alice = (common + 2.5 * (1 - mu * np.cos(2 * pa) * sd) * ca2 * sb2
             + 2.5 * (1 + mu * np.cos(2 * pb) * sd) * sa2 * cb2)
    bob = (common + 2.5 * (1 + mu * np.cos(2 * pa) * sd) * ca2 * sb2
           + 2.5 * (1 - mu * np.cos(2 * pb) * sd) * sa2 * cb2)
    return alice, bob


def _formula_2p_entangled(ta, pa, tb, pb, mu):
    ca2, cb2 = np.cos(ta / 2) ** 2, np.cos(tb / 2) ** 2
    sa2, sb2 = np.sin(ta / 2) ** 2, np.sin(tb / 2) ** 2
    common = ((2 + mu * np.cos(2 * (pa + pb))) * ca2 * cb2
              + (2 - mu) * sa2 * sb2
              - 0.25 * (2 + mu) * np.sin(ta) * np.sin(tb) * np.sin(pa + pb)
              - 1.25 * np.sin(ta) * np.sin(tb) * np.sin(pa - pb))
    alice = (common + 2.5 * (1 - mu * np.cos(2 * pa)) * ca2 * sb2
             + 2.5 * (1 + mu * np.cos(2 * pb)) * sa2 * cb2)
    bob = (common + 2.5 * (1 + mu * np.cos(2 * pa)) * ca2 * sb2
           + 2.5 * (1 - mu * np.cos(2 * pb)) * sa2 * cb2)
    return alice, bob


def _formula_product(ta, pa, tb, pb, mu):
    ca2, cb2 = np.cos(ta / 2) ** 2, np.cos(tb / 2) ** 2
    v = (2 - ca2 * cb2 + 0.5 * cb2 + 0.5 * ca2
         - 0.25 * mu * np.sin(ta) * np.sin(tb) * np.sin(pa + pb))
    return v, v


def _formula_3p(ta, pa, sa, tb, pb, sb, mu, delta):
    ca2, cb2 = np.cos(ta / 2) ** 2, np.cos(tb / 2) ** 2
    sa2, sb2 = np.sin(ta / 2) ** 2, np.sin(tb / 2) ** 2
    sd = np.sin(delta)
    common = ((2 + mu * np.cos(2 * (pa + pb)) * sd) * ca2 * cb2
              + (2 - mu * np.cos(2 * (sa + sb)) * sd) * sa2 * sb2)
    k = 0.25 * np.sin(ta) * np.sin(tb)
    cross = mu * np.sin(pa + pb - sa - sb) + 2 * sd * np.sin(pa + pb + sa + sb)
    twist = 5 * sd * np.sin(pa - pb + sa - sb)
    alice = (common + 2.5 * (1 - mu * np.cos(2 * (pa - sb)) * sd) * ca2 * sb2
             + 2.5 * (1 + mu * np.cos(2 * (pb - sa)) * sd) * sa2 * cb2
             + k * (cross - twist))
    bob = (common + 2.5 * (1 + mu * np.cos(2 * (pa - sb)) * sd) * ca2 * sb2
           + 2.5 * (1 - mu * np.cos(2 * (pb - sa)) * sd) * sa2 * cb2
           + k * (cross + twist))
    return alice, bob


def _pair(a, b) -> PayoffPair:
    return PayoffPair(float(a), float(b))


def closed_form_2p_general(s_a: TwoParamStrategy, s_b: TwoParamStrategy,
                           mu: float, delta: float) -> PayoffPair:
    return _pair(*_formula_2p_general(s_a.theta, s_a.phi, s_b.theta, s_b.phi, mu, delta))


def closed_form_2p_entangled(s_a: TwoParamStrategy, s_b: TwoParamStrategy, mu: float) -> PayoffPair:
    return _pair(*_formula_2p_entangled(s_a.theta, s_a.phi, s_b.theta, s_b.phi, mu))


def closed_form_product(s_a: TwoParamStrategy, s_b: TwoParamStrategy, mu: float) -> PayoffPair:
    return _pair(*_formula_product(s_a.theta, s_a.phi, s_b.theta, s_b.phi, mu))


def closed_form_3p(s_a: ThreeParamStrategy, s_b: ThreeParamStrategy,
                   mu: float, delta: float) -> PayoffPair:
    return _pair(*_formula_3p(s_a.theta, s_a.phi, s_a.psi,
                              s_b.theta, s_b.phi, s_b.psi, mu, delta))


# -- cross validation -------------------------------------------------------

FAMILIES = ("2p_general", "2p_entangled", "product", "3p")
RESTRICTIONS = (None, "theta_zero", "phi_equal")


@dataclass
class DiscrepancyReport:
    family: str
    n_samples: int
    seed: int
    restriction: str | None
    max_abs_dev: PayoffPair
    mean_abs_dev: PayoffPair
    worst_case: dict

    @property
    def max_deviation(self) -> float:
        return max(self.max_abs_dev)

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "restriction": self.restriction,
            "max_abs_dev": self.max_abs_dev._asdict(),
            "mean_abs_dev": self.mean_abs_dev._asdict(),
            "worst_case": self.worst_case,
        }


def _sample_family(family: str, n: int, rng: np.random.Generator, restriction: str | None) -> dict:
    three = family == "3p"
    lo_phi, hi_phi = (-PI, PI) if three else (0.0, HALF_PI)
    s = {
        "theta_a": rng.uniform(0, PI, n),
        "phi_a": rng.uniform(lo_phi, hi_phi, n),
        "theta_b": rng.uniform(0, PI, n),
        "phi_b": rng.uniform(lo_phi, hi_phi, n),
        "mu": rng.uniform(0, 1, n),
    }
    if three:
        s["psi_a"] = rng.uniform(-PI, PI, n)
        s["psi_b"] = rng.uniform(-PI, PI, n)
    if family == "2p_entangled":
        s["delta"] = np.full(n, HALF_PI)
    elif family == "product":
        s["delta"] = np.zeros(n)
    else:
        s["delta"] = rng.uniform(0, HALF_PI, n)
    if restriction == "theta_zero":
        s["theta_a"][:] = 0.0
        s["theta_b"][:] = 0.0
    elif restriction == "phi_equal":
        s["phi_b"] = s["phi_a"].copy()
    return s


def cross_validate(family: str, n_samples: int, seed: int,
                   restriction: str | None = None) -> DiscrepancyReport:
    """Compare a printed formula family against the trace pipeline.

    Samples are uniform over the family's strategy ranges and ``mu`` in
    [0, 1]; ``delta`` is pinned to pi/2 (entangled), 0 (product) or uniform.
    """
    if family not in FAMILIES:
        raise InvalidParameter(f"family must be one of {FAMILIES}, got {family!r}")
    if restriction not in RESTRICTIONS:
        raise InvalidParameter(f"restriction must be one of {RESTRICTIONS}, got {restriction!r}")
    if n_samples < 1:
        raise InvalidParameter("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    s = _sample_family(family, n_samples, rng, restriction)

    if family == "3p":
        closed = _formula_3p(s["theta_a"], s["phi_a"], s["psi_a"],
                             s["theta_b"], s["phi_b"], s["psi_b"], s["mu"], s["delta"])
        u_a = unitary_3p_batch(s["theta_a"], s["phi_a"], s["psi_a"])
        u_b = unitary_3p_batch(s["theta_b"], s["phi_b"], s["psi_b"])
    else:
        args = (s["theta_a"], s["phi_a"], s["theta_b"], s["phi_b"], s["mu"])
        if family == "2p_general":
            closed = _formula_2p_general(*args, s["delta"])
        elif family == "2p_entangled":
            closed = _formula_2p_entangled(*args)
        else:
            closed = _formula_product(*args)
        u_a = unitary_2p_batch(s["theta_a"], s["phi_a"])
        u_b = unitary_2p_batch(s["theta_b"], s["phi_b"])
    ref = np.empty((n_samples, 2))
    for k in range(n_samples):
        ref[k] = payoffs_batch(u_a[k], u_b[k], float(s["mu"][k]), float(s["delta"][k]))
    dev = np.abs(np.stack(closed, axis=1) - ref)

    worst = int(np.argmax(dev.max(axis=1)))
    return DiscrepancyReport(
        family=family,
        n_samples=n_samples,
        seed=seed,
        restriction=restriction,
        max_abs_dev=PayoffPair(*map(float, dev.max(axis=0))),
        mean_abs_dev=PayoffPair(*map(float, dev.mean(axis=0))),
        worst_case={key: float(v[worst]) for key, v in s.items()},
    )
