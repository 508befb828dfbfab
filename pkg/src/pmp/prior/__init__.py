"""Part-wise motion priors: discriminators, style rewards and their composition."""
from .discriminators import (DiscriminatorSet, demo_accuracy, disc_prob, discriminator_loss,
                             gradient_penalty, weight_decay_loss)
from .rewards import (BLEND_MODES, EPS, INTERACTION_OFFSET, KERNEL_GAMMA, KERNEL_RADIUS, RewardWeights,
                      StyleRewardBreakdown, blended_style_reward, clamp_prob, compose_rewards,
                      interaction_kernel, interaction_reward, prob_from_logit, sigmoid,
                      style_reward_part, style_reward_product, total_disc_loss, total_reward)
