"""Task rewards, termination rules and the runnable planar scenes."""
from .reach import PointReachEnv, ReachConfig
from .rewards import (CART_TRACKING, CLIMB_OFFSET, GAMMA_HAND_CART, GAMMA_HAND_CLIMB, GAMMA_HAND_CLIMB_FIRST,
                      GAMMA_HAND_HANG, GAMMA_SIGHT, STYLE_SPEED, TargetLocationParams, alignment_indicator,
                      balance_reward, barbell_task_reward, barbell_tracking_reward, cart_task_reward,
                      cart_tracking_reward, climb_task_reward, cosine_indicator, hand_reach_reward,
                      hang_task_reward, heading_reward, position_reward, sight_reward, sight_task_reward,
                      target_location_reward, torque_min_reward, velocity_reward, wrap_angle)
from .scenes import CartConfig, CartPullEnv, GraspHoldConfig, GraspHoldEnv
from .termination import HANG_DEADLINE, TerminationRule, TerminationTracker, check_termination
from .walker import SplitWalkerConfig, SplitWalkerEnv

__all__ = [
    "PointReachEnv", "ReachConfig", "CART_TRACKING", "CLIMB_OFFSET", "GAMMA_HAND_CART", "GAMMA_HAND_CLIMB",
    "GAMMA_HAND_CLIMB_FIRST", "GAMMA_HAND_HANG", "GAMMA_SIGHT", "STYLE_SPEED", "TargetLocationParams",
    "alignment_indicator", "balance_reward", "barbell_task_reward", "barbell_tracking_reward",
    "cart_task_reward", "cart_tracking_reward", "climb_task_reward", "cosine_indicator", "hand_reach_reward",
    "hang_task_reward", "heading_reward", "position_reward", "sight_reward", "sight_task_reward",
    "target_location_reward", "torque_min_reward", "velocity_reward", "wrap_angle", "CartConfig",
    "CartPullEnv", "GraspHoldConfig", "GraspHoldEnv", "HANG_DEADLINE", "TerminationRule",
    "TerminationTracker", "check_termination", "SplitWalkerConfig", "SplitWalkerEnv",
]
