from .checkpoint import CheckpointMismatch, load_checkpoint, save_checkpoint
from .nn import HIDDEN_SIZES, Adam, ShapeMismatch, finite_difference_check, init_mlp, mlp_backward, mlp_forward
from .policy import PolicyParams, act, forward
from .ppo import (
    CURVE_COLUMNS,
    Batch,
    NaNLoss,
    PPOConfig,
    RolloutBuffer,
    clipped_surrogate,
    evaluate,
    gae,
    init_params,
    lr_schedule,
    ppo_losses,
    random_policy,
    run_episode,
    std_clamp_callback,
    train,
    update,
)
