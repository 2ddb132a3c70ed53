"""Probabilistic simulation of quantum channels from the future to the past.

Computes the largest probability ``p`` with ``p C <= rho0 (x) I`` for a
channel's Choi operator ``C``, builds protocols that achieve it, and checks
the closed forms for a catalog of channels.
"""

__version__ = "0.1.0"

from .causality import (CausalityCertificate, analytic_probability, erasure_classifier,
                        max_probability, max_probability_covariant, max_probability_generic,
                        verify_lower_bounds)
from .channels import (POVM, ChoiOperator, Erasure, Estimation, IdealClassical, Identity, Kraus,
                       MeasureAndPrepare, QuantumState, SymmetricTrace, UniversalCloning,
                       UniversalNot, apply, choi_of, covariance_check, duality_check)
from .errors import (CapacityError, ContractViolation, DimensionError, DomainError, NumericError,
                     PreconditionError, RetroError)
from .infogame import (PayoffGame, assisted_bound, asymptotic_convergence_report, expected_payoff,
                       f_pi, information_bound_check, lottery_game)
from .protocol import SimulationStats, TeleportationProtocol, induced_choi, realize, simulate
from .symmetric import Permutation, permutation_operator, sym_dim, symmetric_projector

__all__ = [
    "CapacityError", "CausalityCertificate", "ChoiOperator", "ContractViolation", "DimensionError",
    "DomainError", "Erasure", "Estimation", "IdealClassical", "Identity", "Kraus",
    "MeasureAndPrepare", "NumericError", "POVM", "PayoffGame", "Permutation", "PreconditionError",
    "QuantumState", "RetroError", "SimulationStats", "SymmetricTrace", "TeleportationProtocol",
    "UniversalCloning", "UniversalNot", "analytic_probability", "apply", "assisted_bound",
    "asymptotic_convergence_report", "choi_of", "covariance_check", "duality_check",
    "erasure_classifier", "expected_payoff", "f_pi", "induced_choi", "information_bound_check",
    "lottery_game", "max_probability", "max_probability_covariant", "max_probability_generic",
    "permutation_operator", "realize", "simulate", "sym_dim", "symmetric_projector",
    "verify_lower_bounds",
]
