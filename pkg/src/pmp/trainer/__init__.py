"""PPO with part-wise adversarial priors."""
from .gae import compute_gae
from .loop import (EPISODE_COLUMNS, RolloutBatch, Trainer, TrainingDiverged, auto_blend_probability, demo_input_stats,
                   evaluate_nr, format_nr)
from .policy import GaussianPolicy, RunningNorm, gaussian_log_prob, load_policy
from .ppo import (PpoConfig, approx_kl, normalize_advantages, ppo_objective, ppo_update,
                  surrogate_grads, surrogate_loss)

__all__ = [
    "compute_gae", "RolloutBatch", "Trainer", "TrainingDiverged", "auto_blend_probability",
    "demo_input_stats", "evaluate_nr", "format_nr", "GaussianPolicy", "RunningNorm", "gaussian_log_prob",
    "load_policy", "PpoConfig", "approx_kl", "normalize_advantages", "ppo_objective", "ppo_update",
    "surrogate_grads", "surrogate_loss", "EPISODE_COLUMNS",
]
