"""Interacting two-colour urns on finite directed graphs.

Simulation of the draw-and-reinforce process, closed-form predictions for
its consensus and fluctuation behaviour, and seeded Monte Carlo machinery
to verify the two against each other.
"""

__version__ = "0.1.0"

from .dynamics import (
    HeterogeneousScheme,
    ReplacementMatrix,
    UrnState,
    default_initial_state,
    make_stream,
    run_trajectory,
    step,
)
from .graph import FAMILIES, DirectedGraph, generate_graph
from .montecarlo import (
    EnsembleResult,
    brute_force_distribution,
    martingale_test,
    oracle_check,
    run_ensemble,
    scaled_covariance,
    variance_decay_slope,
)
from .theory import (
    TheoryReport,
    clt_covariance,
    clt_covariance_critical,
    consensus_equilibrium,
    drift,
    heterogeneous_limit,
    influence_threshold,
    integrate_ode,
    noise_variance_c,
    polya_rate_class,
    predict,
    rho,
)

__all__ = [
    "__version__",
    "DirectedGraph",
    "FAMILIES",
    "generate_graph",
    "ReplacementMatrix",
    "HeterogeneousScheme",
    "UrnState",
    "default_initial_state",
    "make_stream",
    "step",
    "run_trajectory",
    "EnsembleResult",
    "run_ensemble",
    "scaled_covariance",
    "variance_decay_slope",
    "martingale_test",
    "brute_force_distribution",
    "oracle_check",
    "TheoryReport",
    "predict",
    "drift",
    "consensus_equilibrium",
    "rho",
    "noise_variance_c",
    "clt_covariance",
    "clt_covariance_critical",
    "polya_rate_class",
    "heterogeneous_limit",
    "influence_threshold",
    "integrate_ode",
]
