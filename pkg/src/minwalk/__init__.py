"""Simulation and verification lab for the minimal random walk with memory."""

__version__ = "0.1.0"

from .closed_form import (  # noqa: E402
    LimitMoments,
    Regime,
    ScalingLaw,
    a_coeff,
    gamma_sum,
    lil_constant,
    limit_moments,
    mean_asymptotic,
    mean_exact,
    moment2_q0,
    moment3_q0,
    moment4_q0,
    pn_exact,
    scaling_law,
    sn_squared_exact,
)
from .model import (  # noqa: E402
    DistributionTable,
    ModelParams,
    WalkState,
    enumerate_distribution,
    exact_moment,
    step_probability,
    validate,
)
from .rng import RngSpec  # noqa: E402
from .simulate import EnsembleStats, TrajectorySeries, run_ensemble, simulate_naive, simulate_reduced  # noqa: E402

__all__ = [
    "DistributionTable",
    "EnsembleStats",
    "LimitMoments",
    "ModelParams",
    "Regime",
    "RngSpec",
    "ScalingLaw",
    "TrajectorySeries",
    "WalkState",
    "a_coeff",
    "enumerate_distribution",
    "exact_moment",
    "gamma_sum",
    "lil_constant",
    "limit_moments",
    "mean_asymptotic",
    "mean_exact",
    "moment2_q0",
    "moment3_q0",
    "moment4_q0",
    "pn_exact",
    "run_ensemble",
    "scaling_law",
    "simulate_naive",
    "simulate_reduced",
    "sn_squared_exact",
    "step_probability",
    "validate",
]
