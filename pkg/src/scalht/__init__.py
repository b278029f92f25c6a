"""Scaled gradient descent for low-rank Hankel tensor completion.

Reconstructs multi-measurement spectrally sparse signals from partial
observations by lifting the s x n snapshot matrix to an n1 x n2 x s
weighted-Hankel tensor, factoring it in Tucker form, and running
preconditioned gradient descent whose per-iteration cost is linear in s + n
thanks to FFT-structured kernels.
"""
from .doa import SLAConfig, music_estimate
from .gradient import GradientBundle, grad_all, loss_value
from .hankel import (
    HankelSpace,
    ObservationSet,
    adjoint_G,
    default_space,
    lift_G,
    lift_H,
    make_space,
    observe,
    project_obs,
    sample_observations,
    split_n,
    weight_D,
)
from .initialization import observed_lift, scaled_project, sequential_init
from .kernels import dehankel_factored, scaled_grams
from .signals import (
    SpectralModel,
    add_noise,
    diagnostics,
    gen_signal,
    random_model,
    sigma_for_snr,
)
from .solver import SolveResult, SolverConfig, reconstruct_X, scaled_step, scalht_run
from .tensor_core import (
    IllConditionedGramError,
    TuckerFactors,
    assemble,
    dematricize,
    hosvd,
    matricize,
    mode_product,
    solve_hpd,
    top_r_svd,
)

__version__ = "0.1.0"

__all__ = [
    "SLAConfig",
    "music_estimate",
    "GradientBundle",
    "grad_all",
    "loss_value",
    "HankelSpace",
    "ObservationSet",
    "adjoint_G",
    "default_space",
    "lift_G",
    "lift_H",
    "make_space",
    "observe",
    "project_obs",
    "sample_observations",
    "split_n",
    "weight_D",
    "observed_lift",
    "scaled_project",
    "sequential_init",
    "dehankel_factored",
    "scaled_grams",
    "SpectralModel",
    "add_noise",
    "diagnostics",
    "gen_signal",
    "random_model",
    "sigma_for_snr",
    "SolveResult",
    "SolverConfig",
    "reconstruct_X",
    "scaled_step",
    "scalht_run",
    "IllConditionedGramError",
    "TuckerFactors",
    "assemble",
    "dematricize",
    "hosvd",
    "matricize",
    "mode_product",
    "solve_hpd",
    "top_r_svd",
]
