"""Entanglement witnesses for spin-squeezed collective spin states split into two sites."""

__version__ = "0.1.0"

from .errors import (DegenerateState, InsufficientMoments, InvalidArgument, InvalidSpec,
                     UnsupportedDegree)
from .dicke import (SqueezingReport, SymmetricState, chi_t_for_db, coherent_state_x,
                    squeezed_frame_state, squeezed_state, xi2_closed_form, xi2_numeric)
from .specs import MomentSummary, WitnessSpec, d_spec, s_spec
from .bounds import SeparableBound, bound_binomial
from .noise import (EstimatorReport, NoiseConfig, coarse_grain_moments, estimator_variance,
                    noisy_moments, required_runs, witness_under_noise)
from .witness import RobustnessResult, optimize_rotations, robustness, search_optimal

__all__ = [
    "DegenerateState", "InsufficientMoments", "InvalidArgument", "InvalidSpec",
    "UnsupportedDegree", "SqueezingReport", "SymmetricState", "chi_t_for_db",
    "coherent_state_x", "squeezed_frame_state", "squeezed_state", "xi2_closed_form",
    "xi2_numeric", "MomentSummary", "WitnessSpec", "d_spec", "s_spec", "SeparableBound",
    "bound_binomial", "EstimatorReport", "NoiseConfig", "coarse_grain_moments",
    "estimator_variance", "noisy_moments", "required_runs", "witness_under_noise",
    "RobustnessResult", "optimize_rotations", "robustness", "search_optimal",
]
