"""Simulation laboratory for Ornstein-Uhlenbeck flows with jump noise.

The package studies linear stochastic flows on a finite set of diagonal
modes: a contraction semigroup relaxes the state while a compound-Poisson
stream of jumps excites it.  It provides exact reference measures and
shift densities, jump-measure constructions with small-jump truncation,
a reflection coupling of jump chains, total-variation estimators, and
closed-form decay curves, all reproducible from one 64-bit seed.
"""

from .coupling import (CouplingBatch, CouplingTranscript, GammaReport,
                       OverlapReport, SemigroupParts, decompose_semigroup,
                       gamma_functional, gamma_t, lemma31_check, overlap_mass,
                       p1_weighted, run_mineka_batch, run_mineka_coupling,
                       sample_mineka_pair, sample_mineka_pairs, shift_vector,
                       shift_weights)
from .levy import (BoundedLipschitz, Constant, IndicatorBall, InfiniteMassError,
                   JumpLaw, JumpPath, LevySpec, StableLike, build_jump_law,
                   endpoint_samples, mecke_identity_check, mild_solution,
                   nu0_mass, rho0_values, sample_jump, sample_path)
from .model import (DiagonalModel, beta, cm_density,
                    cm_density_squared_integral, cm_log_density, cm_norm,
                    fit_smoothing_constant, gaussian_sample,
                    make_gaussian_model, make_wiener_surrogate,
                    semigroup_apply, state_norm)
from .streams import derive_key, substream
from .tvlab import (BoundCurve, TvEstimate, bound_curve, coupling_tv_upper,
                    delta1, delta2, fit_bound_constant, fit_rate, tv_binned,
                    tv_shift_projection)

__version__ = "0.1.0"

__all__ = [
    "BoundCurve", "BoundedLipschitz", "Constant", "CouplingBatch",
    "CouplingTranscript", "DiagonalModel", "GammaReport", "IndicatorBall",
    "InfiniteMassError", "JumpLaw", "JumpPath", "LevySpec", "OverlapReport",
    "SemigroupParts", "StableLike", "TvEstimate", "beta", "bound_curve",
    "build_jump_law", "cm_density", "cm_density_squared_integral",
    "cm_log_density", "cm_norm", "coupling_tv_upper", "decompose_semigroup",
    "delta1", "delta2", "derive_key", "endpoint_samples",
    "fit_bound_constant", "fit_rate", "fit_smoothing_constant",
    "gamma_functional", "gamma_t", "gaussian_sample", "lemma31_check",
    "make_gaussian_model", "make_wiener_surrogate", "mecke_identity_check",
    "mild_solution", "nu0_mass", "overlap_mass", "p1_weighted", "rho0_values",
    "run_mineka_batch", "run_mineka_coupling", "sample_jump",
    "sample_mineka_pair", "sample_mineka_pairs", "sample_path",
    "semigroup_apply", "shift_vector", "shift_weights", "state_norm",
    "substream", "tv_binned", "tv_shift_projection",
]
