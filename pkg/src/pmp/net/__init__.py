from .adam import Adam
from .checkpoint import CheckpointError, load_checkpoint, restore_optimizer, save_checkpoint
from .mlp import LOSSES, Mlp, param_gradients
