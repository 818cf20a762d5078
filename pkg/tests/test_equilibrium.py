import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdilemma import equilibrium as eq
from qdilemma.equilibrium import (
    DEFAULT_GRID_2P, MixedStrategy, StrategyGrid, best_response, deviation_kernel,
    enumerate_pure_ne, expected_payoff_mixed, kernel_payoffs, ne_set, ne_threshold,
    reference_mixed_profile, thread_count, verify_mixed_ne, verify_pure_ne,
)
from qdilemma.errors import InvalidParameter, NotMonotone
from qdilemma.game import (
    COOPERATE, DEFAULT_PAYOFFS, DEFECT, HALF_PI, PI, QUANTUM, ThreeParamStrategy,
    TwoParamStrategy, payoffs, payoffs_batch, strategy_unitary,
)

C, D, Q = COOPERATE, DEFECT, QUANTUM
COARSE = StrategyGrid(61, 31)

angles_2p = st.tuples(st.floats(0, PI), st.floats(0, HALF_PI))
mus = st.floats(0, 1)


# -- kernel ---------------------------------------------------------------

@pytest.mark.parametrize("player", ["A", "B"])
@pytest.mark.parametrize("convention", ["2p", "3p"])
def test_kernel_matches_trace_pipeline(rng, player, convention):
    grid = StrategyGrid(7, 5, 5)
    _, units = grid.points(convention)
    for _ in range(5):
        mu, delta = rng.uniform(), rng.uniform(0, HALF_PI)
        opp = ThreeParamStrategy(rng.uniform(0, PI), rng.uniform(-PI, PI), rng.uniform(-PI, PI))
        u_opp = strategy_unitary(opp)
        k = deviation_kernel(u_opp, player, mu, delta, DEFAULT_PAYOFFS)
        got = kernel_payoffs(k, units)
        fixed = np.broadcast_to(u_opp, units.shape)
        if player == "A":
            want = payoffs_batch(units, fixed, mu, delta, DEFAULT_PAYOFFS)[0]
        else:
            want = payoffs_batch(fixed, units, mu, delta, DEFAULT_PAYOFFS)[1]
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_kernel_is_hermitian():
    k = deviation_kernel(strategy_unitary(Q), "A", 0.3, 1.0, DEFAULT_PAYOFFS)
    m = k.reshape(4, 4)
    np.testing.assert_allclose(m, m.conj().T, atol=1e-14)


def test_kernel_rejects_bad_player():
    with pytest.raises(InvalidParameter):
        deviation_kernel(strategy_unitary(Q), "C", 1.0, HALF_PI, DEFAULT_PAYOFFS)


# -- deviation-loss identities at delta = pi/2 ------------------------------
# For the named profiles the loss of a deviation (theta, phi) is an affine
# function of cos^2(theta/2) with coefficients in mu and cos(2 phi).

def _loss(profile, player, s, mu):
    base = payoffs(*profile, mu, HALF_PI)
    if player == "A":
        return base.alice - payoffs(s, profile[1], mu, HALF_PI).alice
    return base.bob - payoffs(profile[0], s, mu, HALF_PI).bob


@given(angles_2p, mus)
def test_qq_alice_loss(ang, mu):
    theta, phi = ang
    c2 = math.cos(theta / 2) ** 2
    expr = 7 * mu + ((2 * math.cos(2 * phi) - 5) * mu + 1) * c2 - 1
    assert _loss((Q, Q), "A", TwoParamStrategy(theta, phi), mu) == pytest.approx(expr / 2, abs=1e-12)


@given(angles_2p, mus)
def test_qd_alice_loss(ang, mu):
    theta, phi = ang
    c2 = math.cos(theta / 2) ** 2
    expr = (7 - (2 - 5 * math.cos(2 * phi)) * c2) * mu + math.sin(theta / 2) ** 2
    assert _loss((Q, D), "A", TwoParamStrategy(theta, phi), mu) == pytest.approx(expr / 2, abs=1e-12)


@given(angles_2p, mus)
def test_qd_bob_loss(ang, mu):
    # the worst case over phi is phi = pi/2, where the bracket is 1 - 7 mu
    theta, phi = ang
    c2 = math.cos(theta / 2) ** 2
    expr = (1 - (5 - 2 * math.cos(2 * phi)) * mu) * c2
    assert _loss((Q, D), "B", TwoParamStrategy(theta, phi), mu) == pytest.approx(expr / 2, abs=1e-12)


@given(angles_2p, mus)
def test_cd_alice_loss(ang, mu):
    theta, phi = ang
    c2 = math.cos(theta / 2) ** 2
    expr = math.sin(theta / 2) ** 2 - (3 + (2 - 5 * math.cos(2 * phi)) * c2) * mu
    assert _loss((C, D), "A", TwoParamStrategy(theta, phi), mu) == pytest.approx(expr / 2, abs=1e-12)


@given(angles_2p, mus)
def test_cd_bob_loss(ang, mu):
    theta, phi = ang
    c2 = math.cos(theta / 2) ** 2
    expr = (1 + (5 - 2 * math.cos(2 * phi)) * mu) * c2
    assert _loss((C, D), "B", TwoParamStrategy(theta, phi), mu) == pytest.approx(expr / 2, abs=1e-12)


def test_qd_bob_worst_case_gives_one_seventh():
    # worst Bob deviation is theta = 0, phi = pi/2: loss (1 - 7 mu) / 2
    s = TwoParamStrategy(0.0, HALF_PI)
    for mu in (0.0, 0.1, 1 / 7, 0.5):
        assert _loss((Q, D), "B", s, mu) == pytest.approx((1 - 7 * mu) / 2, abs=1e-12)


# -- best response --------------------------------------------------------

def test_best_response_to_defect_is_quantum():
    s, v = best_response(D, "A", 1.0, HALF_PI)
    assert s is Q
    assert v == pytest.approx(5.0, abs=1e-12)


def test_best_response_to_quantum_is_quantum():
    s, v = best_response(Q, "A", 1.0, HALF_PI)
    assert s is Q
    assert v == pytest.approx(3.0, abs=1e-12)


def test_best_response_product_basis():
    # in the product basis D against C pays the average of T and S
    s, v = best_response(C, "A", 0.7, 0.0)
    assert s.theta == pytest.approx(PI)
    assert v == pytest.approx(2.5, abs=1e-12)


def test_best_response_bob_mirrors_alice():
    s_a, v_a = best_response(D, "A", 0.4, 1.1)
    s_b, v_b = best_response(D, "B", 0.4, 1.1)
    assert s_a.params == s_b.params
    assert v_a == pytest.approx(v_b, abs=1e-12)


@given(angles_2p, mus, st.floats(0, HALF_PI))
def test_best_response_dominates_named_points(ang, mu, delta):
    opp = TwoParamStrategy(*ang)
    _, v = best_response(opp, "A", mu, delta, grid=COARSE)
    for s in (C, D, Q):
        assert v >= payoffs(s, opp, mu, delta).alice - 1e-12


# -- pure NE --------------------------------------------------------------

def test_qq_is_ne_without_decoherence():
    r = verify_pure_ne((Q, Q), 1.0, HALF_PI)
    assert r.is_ne
    assert r.payoffs.alice == pytest.approx(3.0)
    assert r.worst_deviation_gain <= 1e-12


def test_qq_fails_under_strong_decoherence():
    r = verify_pure_ne((Q, Q), 0.1, HALF_PI)
    assert not r.is_ne
    assert str(r.witness) == "D"
    assert r.witness_player == "A"
    # gain from D is (1 - 7 mu) / 2
    assert r.worst_deviation_gain == pytest.approx(0.15, abs=1e-12)


def test_cc_is_never_ne():
    r = verify_pure_ne((C, C), 1.0, HALF_PI)
    assert not r.is_ne
    assert r.worst_deviation_gain == pytest.approx(2.0, abs=1e-12)


def test_negative_tolerance_rejected():
    with pytest.raises(InvalidParameter):
        verify_pure_ne((Q, Q), 1.0, HALF_PI, tolerance=-1.0)


@pytest.mark.parametrize("mu, expected", [
    (1.0, {("Q", "Q")}),
    (0.5, {("Q", "Q")}),
    (0.1, {("Q", "D"), ("D", "Q")}),
    (0.05, {("Q", "D"), ("D", "Q")}),
    (0.0, {("C", "D"), ("D", "C"), ("Q", "D"), ("D", "Q")}),
])
def test_ne_regimes_entangled_basis(mu, expected):
    assert set(ne_set(enumerate_pure_ne(mu, HALF_PI))) == expected


@pytest.mark.parametrize("mu", [0.0, 0.3, 1.0])
def test_ne_product_basis(mu):
    got = set(ne_set(enumerate_pure_ne(mu, 0.0)))
    assert got == {("C", "D"), ("D", "C"), ("Q", "D"), ("D", "Q")}


def test_enumerate_keeps_candidate_order():
    cands = [(D, D), (Q, Q), (C, D)]
    reports = enumerate_pure_ne(1.0, HALF_PI, candidates=cands)
    assert [r.profile for r in reports] == cands


def test_enumerate_rejects_empty_candidates():
    with pytest.raises(InvalidParameter):
        enumerate_pure_ne(1.0, HALF_PI, candidates=[])


def test_enumerate_serial_equals_threaded(monkeypatch):
    monkeypatch.setenv("QDILEMMA_THREADS", "1")
    serial = [r.as_dict() for r in enumerate_pure_ne(0.2, 1.0)]
    monkeypatch.setenv("QDILEMMA_THREADS", "4")
    threaded = [r.as_dict() for r in enumerate_pure_ne(0.2, 1.0)]
    assert serial == threaded


@pytest.mark.parametrize("mu", [1.0, 0.5, 0.1, 0.0])
def test_grid_refinement_keeps_verdicts(mu):
    fine = DEFAULT_GRID_2P.refined()
    coarse = [r.is_ne for r in enumerate_pure_ne(mu, HALF_PI)]
    refined = [r.is_ne for r in enumerate_pure_ne(mu, HALF_PI, grid=fine)]
    assert coarse == refined


def test_reported_ne_survive_random_deviations(rng):
    # soundness: off-grid deviations must not beat an accepted NE either
    for mu in (1.0, 0.1, 0.0):
        for r in enumerate_pure_ne(mu, HALF_PI):
            if not r.is_ne:
                continue
            s_a, s_b = r.profile
            for _ in range(200):
                dev = TwoParamStrategy(rng.uniform(0, PI), rng.uniform(0, HALF_PI))
                assert payoffs(dev, s_b, mu, HALF_PI).alice <= r.payoffs.alice + 1e-9
                assert payoffs(s_a, dev, mu, HALF_PI).bob <= r.payoffs.bob + 1e-9


def test_report_as_dict_fields():
    d = verify_pure_ne((Q, Q), 0.1, HALF_PI).as_dict()
    assert d["profile"] == ["Q", "Q"]
    assert d["is_ne"] is False
    assert d["witness"] == [PI, 0.0]


# -- thresholds -----------------------------------------------------------

def test_threshold_qq():
    r = ne_threshold((Q, Q), HALF_PI)
    assert r.flag == "boundary"
    assert r.direction == "ne_above"
    assert r.mu_star == pytest.approx(1 / 7, abs=1e-6)
    assert r.gamma_t == pytest.approx(math.log(7) / 2, abs=1e-5)


def test_threshold_qd():
    r = ne_threshold((Q, D), HALF_PI)
    assert r.flag == "boundary"
    assert r.direction == "ne_below"
    assert r.mu_star == pytest.approx(1 / 7, abs=1e-6)


def test_threshold_always_in_product_basis():
    r = ne_threshold((D, C), 0.0)
    assert r.flag == "always"
    assert math.isnan(r.gamma_t)


def test_threshold_never():
    assert ne_threshold((C, C), HALF_PI, grid=COARSE).flag == "never"


def test_threshold_wrong_direction():
    with pytest.raises(NotMonotone):
        ne_threshold((Q, Q), HALF_PI, direction="ne_below")


def test_threshold_multiple_crossings(monkeypatch):
    class Fake:
        def __init__(self, mu):
            self.is_ne = 0.3 < mu < 0.6

    monkeypatch.setattr(eq, "verify_pure_ne", lambda prof, mu, *a, **k: Fake(mu))
    with pytest.raises(NotMonotone):
        ne_threshold((Q, Q), HALF_PI)


def test_threshold_argument_checks():
    with pytest.raises(InvalidParameter):
        ne_threshold((Q, Q), HALF_PI, direction="up")
    with pytest.raises(InvalidParameter):
        ne_threshold((Q, Q), HALF_PI, tol=0.0)


# -- mixed ----------------------------------------------------------------

@pytest.mark.parametrize("mu", [1.0, 0.0])
def test_reference_mixed_profile_is_ne(mu):
    m_a, m_b = reference_mixed_profile()
    r = verify_mixed_ne(m_a, m_b, mu, HALF_PI)
    assert r.is_ne
    assert r.payoffs.alice == pytest.approx(2.5, abs=1e-12)
    assert r.payoffs.bob == pytest.approx(2.5, abs=1e-12)
    assert set(r.component_payoffs) == {"0,0", "0,1", "1,0", "1,1"}


def test_mixed_payoff_independent_of_decoherence():
    m_a, m_b = reference_mixed_profile()
    for mu in np.linspace(0, 1, 11):
        for delta in np.linspace(0, HALF_PI, 5):
            pair = expected_payoff_mixed(m_a, m_b, mu, delta)
            assert pair.alice == pytest.approx(2.5, abs=1e-12)
            assert pair.bob == pytest.approx(2.5, abs=1e-12)


def test_mixed_profile_free_angles():
    for psi, phi in [(0.7, -1.2), (-2.0, 0.3)]:
        m_a, m_b = reference_mixed_profile(psi, phi)
        assert verify_mixed_ne(m_a, m_b, 0.6, HALF_PI, grid=StrategyGrid(31, 31, 31)).is_ne


def test_mixed_component_table():
    m_a, m_b = reference_mixed_profile()
    comp = verify_mixed_ne(m_a, m_b, 0.4, HALF_PI, grid=StrategyGrid(21, 21, 21)).component_payoffs
    plus = 2.5 * (1 + 0.4)
    assert comp["0,0"]["alice"] == pytest.approx(plus)
    assert comp["1,1"]["alice"] == pytest.approx(plus)
    assert comp["0,1"]["alice"] == pytest.approx(5 - plus)


def test_pure_as_mixed_matches_pure_check():
    r = verify_mixed_ne(C, C, 1.0, HALF_PI)
    assert not r.is_ne
    assert r.worst_deviation_gain == pytest.approx(2.0, abs=1e-12)


def test_mixed_strategy_validation():
    with pytest.raises(InvalidParameter):
        MixedStrategy(())
    with pytest.raises(InvalidParameter):
        MixedStrategy(((C, 0.5), (D, 0.4)))
    with pytest.raises(InvalidParameter):
        MixedStrategy(((C, 1.5), (D, -0.5)))
    with pytest.raises(InvalidParameter):
        MixedStrategy(((C, 0.5), (ThreeParamStrategy(0, 0, 0), 0.5)))
    assert MixedStrategy.uniform(C, D).support == ((C, 0.5), (D, 0.5))


# -- grid & threads -------------------------------------------------------

@pytest.mark.parametrize("counts", [(4, 5, 1), (5, 2, 1), (5, 5, 4), (1, 5, 1), (5, 5, 0)])
def test_grid_validation(counts):
    with pytest.raises(InvalidParameter):
        StrategyGrid(*counts)


def test_grid_contains_named_points():
    for conv_grid in (DEFAULT_GRID_2P, COARSE, StrategyGrid(5, 3)):
        params, _ = conv_grid.points("2p")
        rows = {tuple(p) for p in params}
        for s in (C, D, Q):
            assert s.params in rows


def test_refined_grid_contains_original():
    g = StrategyGrid(7, 5, 5)
    for conv in ("2p", "3p"):
        old = {tuple(np.round(p, 12)) for p in g.points(conv)[0]}
        new = {tuple(np.round(p, 12)) for p in g.refined().points(conv)[0]}
        assert old <= new


def test_grid_unknown_convention():
    with pytest.raises(InvalidParameter):
        StrategyGrid().axes("4p")


def test_grid_points_read_only():
    params, units = StrategyGrid(5, 3).points("2p")
    with pytest.raises(ValueError):
        params[0, 0] = 1.0
    with pytest.raises(ValueError):
        units[0, 0, 0] = 1.0


def test_thread_count(monkeypatch):
    monkeypatch.setenv("QDILEMMA_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("QDILEMMA_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.delenv("QDILEMMA_THREADS")
    assert thread_count() >= 1
    for bad in ("-1", "two"):
        monkeypatch.setenv("QDILEMMA_THREADS", bad)
        with pytest.raises(InvalidParameter):
            thread_count()
