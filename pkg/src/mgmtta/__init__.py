"""Majorization-guided gated fusion for two-modality test-time adaptation."""

from .dsmix import apply_mixing, ds_fit_residual, random_birkhoff, sinkhorn_project
from .experiment import ExperimentConfig, load_config, run_experiment
from .gate_adapt import AdaptConfig, AdaptState, adapt_batch, reset_episode
from .reliability import ModalityAnchor, gate_prior
from .simplex import entropy, js, kendall_disagreement, kl, majorizes
from .synthgen import ShiftSpec, apply_shift, gen_clean_stream

__all__ = [
    "AdaptConfig",
    "AdaptState",
    "ExperimentConfig",
    "ModalityAnchor",
    "ShiftSpec",
    "adapt_batch",
    "apply_mixing",
    "apply_shift",
    "ds_fit_residual",
    "entropy",
    "gate_prior",
    "gen_clean_stream",
    "js",
    "kendall_disagreement",
    "kl",
    "load_config",
    "majorizes",
    "random_birkhoff",
    "reset_episode",
    "run_experiment",
    "sinkhorn_project",
]
