"""End-to-end training of the mask estimator.

One step runs the full differentiable chain

    interpolated spectrogram -> raw mask -> (bounding) -> masked spectrogram
    -> istft -> waveform loss against the clean target

and applies an Adam update to every U-Net parameter (real and imaginary
kernel planes and biases, all treated as independent real parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..audio import AudioClip, ComplexSpectrogram, istft, istft_input_grad
from .features import FeatureEncoder
from .losses import mse_loss_grad, perceptual_loss_grad
from .model import ComplexUNet, bound_mask, bound_mask_grad

__all__ = [
    "TrainConfig",
    "TrainExample",
    "AdamState",
    "TrainingDivergedError",
    "compute_loss",
    "loss_and_grads",
    "train_step",
    "train_loop",
]

LOSS_KINDS = ("mse", "perceptual")


class TrainingDivergedError(RuntimeError):
    """Raised when a step produces a non-finite loss or gradient."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    steps: int = 100
    batch_size: int = 1
    seed: int = 0
    loss: str = "mse"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.steps <= 0 or self.batch_size <= 0:
            raise ValueError("steps and batch_size must be positive")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")


@dataclass
class TrainExample:
    """Interpolated input spectrogram, its null frame ranges, and the clean target."""

    spec: ComplexSpectrogram
    null_ranges: list[tuple[int, int]]
    clean: AudioClip

    def __post_init__(self) -> None:
        if self.spec.num_samples != len(self.clean):
            raise ValueError(
                f"spectrogram covers {self.spec.num_samples} samples "
                f"but the clean target has {len(self.clean)}"
            )


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: ComplexUNet) -> "AdamState":
        params = model.parameters()
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def _example_pass(
    model: ComplexUNet,
    example: TrainExample,
    loss_kind: str,
    phi: FeatureEncoder | None,
    with_grads: bool,
) -> tuple[float, dict[str, np.ndarray] | None]:
    spec = example.spec
    padded = model.padded_bins(spec.bins)
    grid = spec.data.T  # (F, T)
    x_re = np.zeros((1, padded, grid.shape[1]))
    x_im = np.zeros((1, padded, grid.shape[1]))
    x_re[0, : spec.bins] = grid.real
    x_im[0, : spec.bins] = grid.imag
    mp_re, mp_im, cache = model.forward_planes(x_re, x_im)
    raw_re = mp_re[0, : spec.bins].T  # (T, F)
    raw_im = mp_im[0, : spec.bins].T
    if model.config.bounded_mask:
        mask_re, mask_im = bound_mask(raw_re, raw_im)
    else:
        mask_re, mask_im = raw_re, raw_im
    masked = ComplexSpectrogram(
        (mask_re + 1j * mask_im) * spec.data, spec.config, spec.sample_rate, spec.num_samples
    )
    y_hat = istft(masked).samples
    target = example.clean.samples
    if loss_kind == "mse":
        loss, dy = mse_loss_grad(target, y_hat)
    else:
        if phi is None:
            raise ValueError("perceptual loss requires a feature encoder")
        loss, dy = perceptual_loss_grad(target, y_hat, phi)
    if not with_grads:
        return loss, None

    d_masked = istft_input_grad(dy, spec.config, spec.frames)
    d_mask = np.conj(spec.data) * d_masked
    if model.config.bounded_mask:
        dm_re, dm_im = bound_mask_grad(d_mask.real, d_mask.imag, raw_re, raw_im)
    else:
        dm_re, dm_im = d_mask.real, d_mask.imag
    dp_re = np.zeros_like(mp_re)
    dp_im = np.zeros_like(mp_im)
    dp_re[0, : spec.bins] = dm_re.T
    dp_im[0, : spec.bins] = dm_im.T
    grads = model.backward_planes(cache, dp_re, dp_im)
    return loss, grads


def compute_loss(
    model: ComplexUNet,
    batch: list[TrainExample],
    loss_kind: str,
    phi: FeatureEncoder | None = None,
) -> float:
    """Mean batch loss under the current parameters, no gradients."""
    if not batch:
        raise ValueError("empty batch")
    return float(
        np.mean([_example_pass(model, ex, loss_kind, phi, with_grads=False)[0] for ex in batch])
    )


def loss_and_grads(
    model: ComplexUNet,
    batch: list[TrainExample],
    loss_kind: str,
    phi: FeatureEncoder | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch loss plus mean gradients for every model parameter."""
    if not batch:
        raise ValueError("empty batch")
    total_loss = 0.0
    total_grads: dict[str, np.ndarray] | None = None
    for ex in batch:
        loss, grads = _example_pass(model, ex, loss_kind, phi, with_grads=True)
        total_loss += loss
        if total_grads is None:
            total_grads = grads
        else:
            for k, g in grads.items():
                total_grads[k] += g
    n = len(batch)
    assert total_grads is not None
    return total_loss / n, {k: g / n for k, g in total_grads.items()}


def train_step(
    model: ComplexUNet,
    batch: list[TrainExample],
    config: TrainConfig,
    phi: FeatureEncoder | None = None,
    state: AdamState | None = None,
) -> tuple[float, AdamState]:
    """One optimiser update in place; returns the pre-update loss and state."""
    if state is None:
        state = AdamState.for_model(model)
    loss, grads = loss_and_grads(model, batch, config.loss, phi)
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite loss {loss!r} at step {state.step + 1}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"non-finite gradient in {name} at step {state.step + 1}")
    state.step += 1
    t = state.step
    params = model.parameters()
    for name, p in params.items():
        g = grads[name]
        state.m[name] = config.beta1 * state.m[name] + (1 - config.beta1) * g
        state.v[name] = config.beta2 * state.v[name] + (1 - config.beta2) * g * g
        m_hat = state.m[name] / (1 - config.beta1**t)
        v_hat = state.v[name] / (1 - config.beta2**t)
        p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return loss, state


def train_loop(
    model: ComplexUNet,
    dataset: list[TrainExample],
    config: TrainConfig,
    phi: FeatureEncoder | None = None,
    on_step=None,
) -> list[float]:
    """Run ``config.steps`` updates with seeded batch sampling.

    Batches are drawn with replacement from the dataset (or the whole
    dataset when it fits in one batch), so runs are reproducible per seed.
    ``on_step(step, loss)`` is invoked after every step.
    """
    if not dataset:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(config.seed)
    state = AdamState.for_model(model)
    losses: list[float] = []
    for step in range(1, config.steps + 1):
        if len(dataset) <= config.batch_size:
            batch = dataset
        else:
            idx = rng.integers(0, len(dataset), size=config.batch_size)
            batch = [dataset[i] for i in idx]
        loss, state = train_step(model, batch, config, phi, state)
        losses.append(loss)
        if on_step is not None:
            on_step(step, loss)
    return losses
