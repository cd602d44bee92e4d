"""3D shape estimation from 2D landmarks: convex relaxation and baselines."""

from ._shapelift import (
    learn_dictionary,
    project_l1_ball,
    prox_spectral,
    reconstruction_error,
    solve_altmin,
    solve_noiseless,
    solve_noisy,
    synth_instance,
)

__all__ = [
    "learn_dictionary",
    "project_l1_ball",
    "prox_spectral",
    "reconstruction_error",
    "solve_altmin",
    "solve_noiseless",
    "solve_noisy",
    "synth_instance",
]
