"""Best responses, Nash-equilibrium checks and decoherence thresholds.

Deviations are searched over a finite :class:`StrategyGrid`. For a fixed
opponent the deviator's payoff is a Hermitian quadratic form in the four
entries of their own 2x2 unitary, ``u^H K u``. The 4x4 kernel ``K`` is built
once from the trace pipeline, so scanning a grid costs one small contraction
per grid point instead of a full 4x4 conjugation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .channel import initial_state_matrix
from .errors import InvalidParameter, NotMonotone
from .game import (
    COOPERATE, DEFAULT_PAYOFFS, DEFECT, HALF_PI, PI, QUANTUM,
    ClassicalPayoffs, PayoffPair, Strategy, ThreeParamStrategy, TwoParamStrategy,
    payoff_operators, payoffs, strategy_unitary, unitary_2p_batch, unitary_3p_batch,
)

DEFAULT_TOLERANCE = 1e-9
TIE_TOL = 1e-12
SCAN_POINTS = 101
PLAYERS = ("A", "B")


@dataclass(frozen=True)
class StrategyGrid:
    """Evenly spaced deviation grid, endpoints included.

    theta spans [0, pi]; phi spans [0, pi/2] (two-parameter) or [-pi, pi]
    (three-parameter); psi spans [-pi, pi]. Odd counts keep C, D and Q on the
    grid.
    """

    n_theta: int = 181
    n_phi: int = 91
    n_psi: int = 1

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta % 2 == 0:
            raise InvalidParameter(f"n_theta must be odd and >= 3, got {self.n_theta}")
        if self.n_phi < 2 or self.n_phi % 2 == 0:
            raise InvalidParameter(f"n_phi must be odd and >= 3, got {self.n_phi}")
        if self.n_psi < 1 or (self.n_psi > 1 and self.n_psi % 2 == 0):
            raise InvalidParameter(f"n_psi must be 1 or odd, got {self.n_psi}")

    def refined(self) -> "StrategyGrid":
        """Grid with every spacing halved (contains all current points)."""
        return StrategyGrid(2 * self.n_theta - 1, 2 * self.n_phi - 1,
                            1 if self.n_psi == 1 else 2 * self.n_psi - 1)

    def axes(self, convention: str) -> tuple[np.ndarray, ...]:
        theta = np.linspace(0.0, PI, self.n_theta)
        if convention == "2p":
            return theta, np.linspace(0.0, HALF_PI, self.n_phi)
        if convention == "3p":
            psi = np.array([0.0]) if self.n_psi == 1 else np.linspace(-PI, PI, self.n_psi)
            return theta, np.linspace(-PI, PI, self.n_phi), psi
        raise InvalidParameter(f"convention must be '2p' or '3p', got {convention!r}")

    def points(self, convention: str) -> tuple[np.ndarray, np.ndarray]:
        """``(params, unitaries)`` with params of shape (N, 2 or 3), theta-major."""
        return _grid_points(self, convention)

    def strategy_at(self, convention: str, index: int) -> Strategy:
        params = tuple(float(v) for v in self.points(convention)[0][index])
        if convention == "2p":
            for named in (COOPERATE, DEFECT, QUANTUM):
                if named.params == params:
                    return named
            return TwoParamStrategy(*params)
        return ThreeParamStrategy(*params)


@lru_cache(maxsize=8)
def _grid_points(grid: StrategyGrid, convention: str):
    axes = grid.axes(convention)
    mesh = np.meshgrid(*axes, indexing="ij")
    params = np.stack([m.ravel() for m in mesh], axis=1)
    if convention == "2p":
        units = unitary_2p_batch(params[:, 0], params[:, 1])
    else:
        units = unitary_3p_batch(params[:, 0], params[:, 1], params[:, 2])
    params.setflags(write=False)
    units.setflags(write=False)
    return params, units


DEFAULT_GRID_2P = StrategyGrid(181, 91, 1)
DEFAULT_GRID_3P = StrategyGrid(61, 61, 61)


def default_grid(convention: str) -> StrategyGrid:
    return DEFAULT_GRID_2P if convention == "2p" else DEFAULT_GRID_3P


def convention_of(s: Strategy) -> str:
    if isinstance(s, TwoParamStrategy):
        return "2p"
    if isinstance(s, ThreeParamStrategy):
        return "3p"
    raise TypeError(f"not a strategy: {s!r}")


def _check_player(player: str) -> str:
    if player not in PLAYERS:
        raise InvalidParameter(f"player must be 'A' or 'B', got {player!r}")
    return player


# -- deviation kernel -------------------------------------------------------

def deviation_kernel(opponent_unitary: np.ndarray, player: str, mu: float, delta: float,
                     c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> np.ndarray:
    """Kernel ``K`` with ``payoff(U) = sum conj(U[x,z]) K[x,z,a,b] U[a,b]``.

    ``player`` is the one whose unitary ``U`` varies while the opponent plays
    ``opponent_unitary``.
    """
    _check_player(player)
    pa, pb = payoff_operators(delta, c)
    rho = initial_state_matrix(mu).reshape(2, 2, 2, 2)
    eye = np.eye(2, dtype=complex)
    if player == "A":
        w = np.kron(eye, opponent_unitary)
        m = (w.conj().T @ pa @ w).reshape(2, 2, 2, 2)
        # m[x, y, a, b], rho[c, b, z, y]
        return np.einsum("xyab,cbzy->xzac", m, rho)
    w = np.kron(opponent_unitary, eye)
    m = (w.conj().T @ pb @ w).reshape(2, 2, 2, 2)
    # m[x, y, a, b], rho[a, c, x, z]
    return np.einsum("xyab,acxz->yzbc", m, rho)


def kernel_payoffs(kernel: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    u = unitaries.reshape(-1, 4)
    k = kernel.reshape(4, 4)
    return np.einsum("nx,xy,ny->n", u.conj(), k, u).real


def _mixed_kernel(opponent_support, player, mu, delta, c) -> np.ndarray:
    return sum(p * deviation_kernel(strategy_unitary(s), player, mu, delta, c)
               for s, p in opponent_support)


def _best_on_grid(values: np.ndarray) -> int:
    # first index within TIE_TOL of the max: grid is theta-major, so this is
    # the lowest theta, then phi, then psi
    return int(np.flatnonzero(values >= values.max() - TIE_TOL)[0])


def best_response(opponent: Strategy, player: str, mu: float, delta: float,
                  grid: StrategyGrid | None = None, convention: str | None = None,
                  c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> tuple[Strategy, float]:
    """Grid point maximizing ``player``'s payoff against a fixed ``opponent``."""
    convention = convention or convention_of(opponent)
    grid = grid or default_grid(convention)
    _, units = grid.points(convention)
    k = deviation_kernel(strategy_unitary(opponent), _check_player(player), mu, delta, c)
    values = kernel_payoffs(k, units)
    idx = _best_on_grid(values)
    return grid.strategy_at(convention, idx), float(values[idx])


# -- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class MixedStrategy:
    support: tuple[tuple[Strategy, float], ...]

    def __post_init__(self):
        support = tuple((s, float(p)) for s, p in self.support)
        if not support:
            raise InvalidParameter("mixed strategy needs a non-empty support")
        if any(p < 0 or not math.isfinite(p) for _, p in support):
            raise InvalidParameter("probabilities must be finite and >= 0")
        total = sum(p for _, p in support)
        if abs(total - 1.0) > 1e-12:
            raise InvalidParameter(f"probabilities sum to {total!r}, not 1")
        if len({convention_of(s) for s, _ in support}) != 1:
            raise InvalidParameter("support mixes two- and three-parameter strategies")
        object.__setattr__(self, "support", support)

    @classmethod
    def pure(cls, s: Strategy) -> "MixedStrategy":
        return cls(((s, 1.0),))

    @classmethod
    def uniform(cls, *strategies: Strategy) -> "MixedStrategy":
        return cls(tuple((s, 1.0 / len(strategies)) for s in strategies))

    @property
    def convention(self) -> str:
        return convention_of(self.support[0][0])

    def __str__(self):
        return " + ".join(f"{p:g}*{s}" for s, p in self.support)


@dataclass
class EquilibriumReport:
    profile: tuple
    is_ne: bool
    worst_deviation_gain: float
    witness: Strategy
    witness_player: str
    tolerance: float
    payoffs: PayoffPair
    gains: PayoffPair
    component_payoffs: dict | None = field(default=None)

    def as_dict(self) -> dict:
        d = {
            "profile": [str(p) for p in self.profile],
            "is_ne": self.is_ne,
            "payoff_a": self.payoffs.alice,
            "payoff_b": self.payoffs.bob,
            "worst_deviation_gain": self.worst_deviation_gain,
            "gain_a": self.gains.alice,
            "gain_b": self.gains.bob,
            "witness_player": self.witness_player,
            "witness": list(self.witness.params),
            "tolerance": self.tolerance,
        }
        if self.component_payoffs is not None:
            d["component_payoffs"] = self.component_payoffs
        return d


def _report(profile, base: PayoffPair, best_a, best_b, grid, convention, tolerance, components=None):
    (idx_a, val_a), (idx_b, val_b) = best_a, best_b
    gains = PayoffPair(val_a - base.alice, val_b - base.bob)
    player, idx = ("A", idx_a) if gains.alice >= gains.bob else ("B", idx_b)
    worst = max(gains)
    return EquilibriumReport(
        profile=profile,
        is_ne=worst <= tolerance,
        worst_deviation_gain=worst,
        witness=grid.strategy_at(convention, idx),
        witness_player=player,
        tolerance=tolerance,
        payoffs=base,
        gains=gains,
        component_payoffs=components,
    )


def _grid_best(kernel, units):
    values = kernel_payoffs(kernel, units)
    idx = _best_on_grid(values)
    return idx, float(values[idx])


def verify_pure_ne(profile: tuple[Strategy, Strategy], mu: float, delta: float,
                   grid: StrategyGrid | None = None, tolerance: float = DEFAULT_TOLERANCE,
                   convention: str | None = None,
                   c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> EquilibriumReport:
    if tolerance < 0:
        raise InvalidParameter("tolerance must be >= 0")
    s_a, s_b = profile
    convention = convention or convention_of(s_a)
    grid = grid or default_grid(convention)
    _, units = grid.points(convention)
    base = payoffs(s_a, s_b, mu, delta, c)
    best_a = _grid_best(deviation_kernel(strategy_unitary(s_b), "A", mu, delta, c), units)
    best_b = _grid_best(deviation_kernel(strategy_unitary(s_a), "B", mu, delta, c), units)
    return _report(profile, base, best_a, best_b, grid, convention, tolerance)


def thread_count() -> int:
    """Worker cap from ``QDILEMMA_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("QDILEMMA_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameter(f"QDILEMMA_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidParameter("QDILEMMA_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _ordered_map(fn, items: list) -> list:
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


NAMED_PROFILES = tuple(product((COOPERATE, DEFECT, QUANTUM), repeat=2))


def enumerate_pure_ne(mu: float, delta: float, grid: StrategyGrid | None = None,
                      candidates=None, tolerance: float = DEFAULT_TOLERANCE,
                      convention: str | None = None,
                      c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> list[EquilibriumReport]:
    """One report per candidate profile, in candidate order.

    Candidates default to all pairs over C, D, Q.
    """
    candidates = list(NAMED_PROFILES if candidates is None else candidates)
    if not candidates:
        raise InvalidParameter("candidate list must be non-empty")
    return _ordered_map(
        lambda prof: verify_pure_ne(prof, mu, delta, grid, tolerance, convention, c), candidates)


def grid_profiles(grid: StrategyGrid, convention: str = "2p") -> list[tuple[Strategy, Strategy]]:
    """Every grid pair as a candidate list. Quadratic in grid size; use coarse grids."""
    n = len(grid.points(convention)[0])
    pts = [grid.strategy_at(convention, i) for i in range(n)]
    return list(product(pts, repeat=2))


def ne_set(reports: list[EquilibriumReport]) -> list[tuple[str, str]]:
    return [(str(r.profile[0]), str(r.profile[1])) for r in reports if r.is_ne]


# -- thresholds -------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdResult:
    mu_star: float
    flag: str  # "boundary", "always" or "never"
    direction: str | None

    @property
    def gamma_t(self) -> float:
        if self.flag != "boundary":
            return math.nan
        return math.inf if self.mu_star == 0 else -0.5 * math.log(self.mu_star)


def ne_threshold(profile: tuple[Strategy, Strategy], delta: float,
                 grid: StrategyGrid | None = None, direction: str | None = None,
                 tol: float = 1e-6, tolerance: float = DEFAULT_TOLERANCE,
                 c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> ThresholdResult:
    """Bisect on mu for the edge of the region where ``profile`` is NE.

    ``direction`` is ``"ne_above"`` (NE for mu above the threshold) or
    ``"ne_below"``; if omitted it is read off the pre-scan.

    Raises:
        NotMonotone: the 101-point scan shows more than one change of verdict.
    """
    if direction not in (None, "ne_above", "ne_below"):
        raise InvalidParameter(f"direction must be 'ne_above' or 'ne_below', got {direction!r}")
    if tol <= 0:
        raise InvalidParameter("tol must be > 0")

    def is_ne(mu: float) -> bool:
        return verify_pure_ne(profile, mu, delta, grid, tolerance, c=c).is_ne

    scan = np.linspace(0.0, 1.0, SCAN_POINTS)
    flags = _ordered_map(is_ne, list(scan))
    changes = [i for i in range(1, len(flags)) if flags[i] != flags[i - 1]]
    if len(changes) > 1:
        raise NotMonotone(f"NE verdict changes {len(changes)} times over mu in [0, 1]")
    if not changes:
        if flags[0]:
            return ThresholdResult(0.0, "always", direction)
        return ThresholdResult(math.nan, "never", direction)

    i = changes[0]
    found = "ne_above" if flags[i] else "ne_below"
    if direction is not None and direction != found:
        raise NotMonotone(f"NE region lies {found.split('_')[1]} the threshold, not as requested")
    lo, hi = float(scan[i - 1]), float(scan[i])
    lo_flag = flags[i - 1]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_ne(mid) == lo_flag:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), "boundary", found)


# -- mixed strategies -------------------------------------------------------

def _as_mixed(m) -> MixedStrategy:
    return m if isinstance(m, MixedStrategy) else MixedStrategy.pure(m)


def expected_payoff_mixed(m_a, m_b, mu: float, delta: float,
                          c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> PayoffPair:
    m_a, m_b = _as_mixed(m_a), _as_mixed(m_b)
    alice = bob = 0.0
    for (s_a, p), (s_b, q) in product(m_a.support, m_b.support):
        pair = payoffs(s_a, s_b, mu, delta, c)
        alice += p * q * pair.alice
        bob += p * q * pair.bob
    return PayoffPair(alice, bob)


def component_payoffs(m_a, m_b, mu: float, delta: float,
                      c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> dict:
    """Payoffs of every support pair, keyed ``"i,j"`` by support index."""
    m_a, m_b = _as_mixed(m_a), _as_mixed(m_b)
    table = {}
    for (i, (s_a, _)), (j, (s_b, _)) in product(enumerate(m_a.support), enumerate(m_b.support)):
        pair = payoffs(s_a, s_b, mu, delta, c)
        table[f"{i},{j}"] = {"alice": pair.alice, "bob": pair.bob}
    return table


def verify_mixed_ne(m_a, m_b, mu: float, delta: float, grid: StrategyGrid | None = None,
                    tolerance: float = DEFAULT_TOLERANCE,
                    c: ClassicalPayoffs = DEFAULT_PAYOFFS) -> EquilibriumReport:
    """No pure grid deviation may beat the mixed expected payoff by more than ``tolerance``."""
    m_a, m_b = _as_mixed(m_a), _as_mixed(m_b)
    convention = m_a.convention
    grid = grid or default_grid(convention)
    _, units = grid.points(convention)
    base = expected_payoff_mixed(m_a, m_b, mu, delta, c)
    best_a = _grid_best(_mixed_kernel(m_b.support, "A", mu, delta, c), units)
    best_b = _grid_best(_mixed_kernel(m_a.support, "B", mu, delta, c), units)
    return _report((m_a, m_b), base, best_a, best_b, grid, convention, tolerance,
                   components=component_payoffs(m_a, m_b, mu, delta, c))


def reference_mixed_profile(psi: float = 0.0, phi: float = 0.0) -> tuple[MixedStrategy, MixedStrategy]:
    """Equal-weight mix: Alice over (0,0,psi),(0,pi/2,psi); Bob over (pi,phi,0),(pi,phi,pi/2)."""
    a1 = ThreeParamStrategy(0.0, 0.0, psi, name="A1")
    a2 = ThreeParamStrategy(0.0, HALF_PI, psi, name="A2")
    b1 = ThreeParamStrategy(PI, phi, 0.0, name="B1")
    b2 = ThreeParamStrategy(PI, phi, HALF_PI, name="B2")
    return MixedStrategy.uniform(a1, a2), MixedStrategy.uniform(b1, b2)
