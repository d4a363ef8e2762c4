"""Fixed convolutional feature encoder backing the perceptual loss.

A stand-in for a pretrained self-supervised speech encoder: a stack of
strided real 1-D convolutions with tanh nonlinearities, randomly initialised
from a seed and then frozen.  It only has to provide a stable latent space
with a gradient path back to the waveform; training never updates it.

Callers that already have features from an external encoder can skip this
class entirely and hand two (channels, length) arrays to
:func:`speechmend.neural.losses.feature_mean_abs_error`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convops import conv2d, conv2d_input_grad

__all__ = ["FeatureEncoderConfig", "FeatureEncoder"]


@dataclass(frozen=True)
class FeatureEncoderConfig:
    num_layers: int = 5
    kernel: int = 8
    stride: int = 2
    channels: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_layers < 1 or self.kernel < 1 or self.stride < 1 or self.channels < 1:
            raise ValueError("all feature encoder dimensions must be positive")


class FeatureEncoder:
    """Frozen strided conv stack mapping a waveform to (channels, length) features."""

    def __init__(self, config: FeatureEncoderConfig = FeatureEncoderConfig()):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.weights: list[np.ndarray] = []
        prev = 1
        for _ in range(config.num_layers):
            scale = 1.0 / np.sqrt(prev * config.kernel)
            self.weights.append(
                rng.standard_normal((config.channels, prev, 1, config.kernel)) * scale
            )
            prev = config.channels

    @property
    def out_channels(self) -> int:
        return self.config.channels

    def min_input_length(self) -> int:
        n = 1
        for _ in range(self.config.num_layers):
            n = (n - 1) * self.config.stride + self.config.kernel
        return n

    def output_length(self, num_samples: int) -> int:
        n = num_samples
        for _ in range(self.config.num_layers):
            n = (n - self.config.kernel) // self.config.stride + 1
            if n < 1:
                raise ValueError(
                    f"input of {num_samples} samples is too short; "
                    f"need at least {self.min_input_length()}"
                )
        return n

    def _forward(self, samples: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        self.output_length(samples.size)  # length check
        x = samples[None, None, :]  # (C=1, H=1, W=N)
        acts = [x]
        for w in self.weights:
            pre = conv2d(x, w, stride=(1, self.config.stride), pad=(0, 0))
            x = np.tanh(pre)
            acts.append(x)
        return x[:, 0, :], acts

    def encode(self, samples: np.ndarray) -> np.ndarray:
        """Feature map of shape (channels, length)."""
        return self._forward(np.asarray(samples, dtype=np.float64))[0]

    def encode_with_cache(self, samples: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        return self._forward(np.asarray(samples, dtype=np.float64))

    def input_grad(self, cache: list[np.ndarray], d_features: np.ndarray) -> np.ndarray:
        """Backpropagate a (channels, length) feature gradient to the waveform."""
        dy = d_features[:, None, :]
        for idx in reversed(range(self.config.num_layers)):
            post = cache[idx + 1]
            dpre = dy * (1.0 - post**2)  # tanh'
            x = cache[idx]
            dy = conv2d_input_grad(
                dpre, self.weights[idx], (1, self.config.stride), (0, 0), (1, x.shape[2])
            )
        return dy[0, 0, :]
