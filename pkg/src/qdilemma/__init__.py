"""Quantum Prisoners' Dilemma under collective dephasing."""

from .channel import DecoherenceParam, decoherence_from_gamma_t, initial_state, integrate_master_equation
from .equilibrium import (
    EquilibriumReport, MixedStrategy, StrategyGrid, best_response, enumerate_pure_ne,
    expected_payoff_mixed, ne_threshold, reference_mixed_profile, verify_mixed_ne, verify_pure_ne,
)
from .game import (
    COOPERATE, DEFECT, QUANTUM, ClassicalPayoffs, MeasurementBasis, PayoffPair,
    ThreeParamStrategy, TwoParamStrategy, cross_validate, payoffs,
)
from .linalg import DensityMatrix4

__version__ = "0.1.0"
