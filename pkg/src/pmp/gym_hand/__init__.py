"""Planar grasping gym: rewards, interaction state, environment and expert export."""
from .env import GraspGym, GymEpisodeConfig, build_gym_sim, sample_disturbance
from .expert import (ExpertFileError, collect_expert_pairs, layout_descriptor, load_expert_pairs,
                     save_expert_pairs)
from .interaction import (ACTION_DIM, HAND_JOINTS, HAND_LINKS, MCP_JOINTS, STATE_DIM, TIP_LINKS, HandSpec,
                          InteractionObserver, state_layout)
from .rewards import (finger_reward, gym_total_reward, mcp_reward, rod_reward, tip_reward, torque_reward,
                      wrist_reward)

__all__ = [
    "GraspGym", "GymEpisodeConfig", "build_gym_sim", "sample_disturbance", "ExpertFileError",
    "collect_expert_pairs", "layout_descriptor", "load_expert_pairs", "save_expert_pairs", "ACTION_DIM",
    "HAND_JOINTS", "HAND_LINKS", "MCP_JOINTS", "STATE_DIM", "TIP_LINKS", "HandSpec", "InteractionObserver",
    "state_layout", "finger_reward", "gym_total_reward", "mcp_reward", "rod_reward", "tip_reward",
    "torque_reward", "wrist_reward",
]
