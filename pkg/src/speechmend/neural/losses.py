"""Training objectives: sample-level MSE and feature-space perceptual loss.

The perceptual loss is the mean absolute error between feature maps of the
clean and enhanced waveforms under a frozen encoder, averaged over all
channel/position cells.
"""

from __future__ import annotations

import numpy as np

from ..audio import AudioClip
from .features import FeatureEncoder

__all__ = [
    "mse_loss",
    "perceptual_loss",
    "feature_mean_abs_error",
    "mse_loss_grad",
    "perceptual_loss_grad",
]


def _check_lengths(y: AudioClip, y_hat: AudioClip) -> None:
    if len(y) != len(y_hat):
        raise ValueError(f"length mismatch: {len(y)} vs {len(y_hat)}")
    if len(y) == 0:
        raise ValueError("empty signals")


def mse_loss(y: AudioClip, y_hat: AudioClip) -> float:
    """Mean squared sample difference."""
    _check_lengths(y, y_hat)
    return float(np.mean((y.samples - y_hat.samples) ** 2))


def mse_loss_grad(y: np.ndarray, y_hat: np.ndarray) -> tuple[float, np.ndarray]:
    diff = y_hat - y
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def feature_mean_abs_error(feat_a: np.ndarray, feat_b: np.ndarray) -> float:
    """Mean absolute error between two (channels, length) feature maps.

    Entry point for externally computed features: both arguments may come
    from any encoder as long as their shapes match.
    """
    feat_a = np.asarray(feat_a, dtype=np.float64)
    feat_b = np.asarray(feat_b, dtype=np.float64)
    if feat_a.shape != feat_b.shape:
        raise ValueError(f"feature shapes differ: {feat_a.shape} vs {feat_b.shape}")
    if feat_a.size == 0:
        raise ValueError("empty feature maps")
    return float(np.mean(np.abs(feat_a - feat_b)))


def perceptual_loss(y: AudioClip, y_hat: AudioClip, phi: FeatureEncoder) -> float:
    """Mean absolute error between the frozen-encoder features of y and y_hat."""
    _check_lengths(y, y_hat)
    return feature_mean_abs_error(phi.encode(y.samples), phi.encode(y_hat.samples))


def perceptual_loss_grad(
    y: np.ndarray, y_hat: np.ndarray, phi: FeatureEncoder
) -> tuple[float, np.ndarray]:
    feat_y = phi.encode(y)
    feat_hat, cache = phi.encode_with_cache(y_hat)
    diff = feat_hat - feat_y
    loss = float(np.mean(np.abs(diff)))
    d_feat = np.sign(diff) / diff.size
    return loss, phi.input_grad(cache, d_feat)
