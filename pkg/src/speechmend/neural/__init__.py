"""Complex-mask enhancement model, its losses, and the training loop."""

from .features import FeatureEncoder, FeatureEncoderConfig
from .losses import (
    feature_mean_abs_error,
    mse_loss,
    perceptual_loss,
)
from .model import (
    ComplexConvLayer,
    ComplexMask,
    ComplexTensor,
    ComplexUNet,
    UNetConfig,
    apply_mask,
    complex_conv_forward,
    enhance,
    load_checkpoint,
    save_checkpoint,
    unet_forward,
)
from .training import (
    AdamState,
    TrainConfig,
    TrainExample,
    TrainingDivergedError,
    compute_loss,
    loss_and_grads,
    train_loop,
    train_step,
)

__all__ = [
    "AdamState",
    "ComplexConvLayer",
    "ComplexMask",
    "ComplexTensor",
    "ComplexUNet",
    "FeatureEncoder",
    "FeatureEncoderConfig",
    "TrainConfig",
    "TrainExample",
    "TrainingDivergedError",
    "UNetConfig",
    "apply_mask",
    "complex_conv_forward",
    "compute_loss",
    "enhance",
    "feature_mean_abs_error",
    "load_checkpoint",
    "loss_and_grads",
    "mse_loss",
    "perceptual_loss",
    "save_checkpoint",
    "train_loop",
    "train_step",
    "unet_forward",
]
