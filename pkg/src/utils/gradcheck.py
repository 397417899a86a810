import logging

from dataclasses import dataclass

import numpy as np
import torch

from src.data.models.encoder import EncoderConfig
from src.data.models.hypernet import HeadConfig, HyperNetModel
from src.data.models.target import TargetNetConfig, make_grid, param_count, target_forward
from src.utils.constants import ErrorMessages
from src.utils.errors import UnknownPreset
from src.utils.losses import LossConfig, Resolution, TotalLoss

logger = logging.getLogger(__name__)

COMPONENTS = ("target", "head", "encoder", "loss", "end2end")
STEP = 1e-5
THRESHOLD = 1e-4
MAX_COORDINATES = 64
ABSOLUTE_FLOOR = 1e-8
SAMPLE_RATE = 22050

CHECK_TARGET = TargetNetConfig(embedding_size=2, hidden_widths=(8, 8))
CHECK_ENCODER = EncoderConfig(base_channels=4, strides=(2, 4), dilations=(1, 3, 9), latent_dim=8)
CHECK_HEAD_WIDTH = 16
CHECK_CROP = 256
CHECK_LOSS = LossConfig(resolutions=(Resolution.from_fft_size(64), Resolution.from_fft_size(128)), mel_bins=16)


@dataclass(frozen=True)
class GradcheckReport:
    """
    Outcome of comparing reverse-mode gradients with central differences.

    Attributes:
        component (str): Checked part of the pipeline.
        max_rel_error (float): Largest relative error over the compared coordinates.
        checked (int): Number of coordinates compared.
        skipped (int): Coordinates left out because a piecewise branch changed under the perturbation.
        passed (bool): max_rel_error below the threshold.
    """
    component: str
    max_rel_error: float
    checked: int
    skipped: int
    passed: bool


def _check_model(seed: int) -> HyperNetModel:
    head = HeadConfig.for_target(CHECK_TARGET, CHECK_HEAD_WIDTH)
    return HyperNetModel(CHECK_ENCODER, head, CHECK_TARGET, seed=seed).double()


def compare_gradients(component: str, objective, tensors: list[torch.Tensor], rng: np.random.Generator,
                      step: float = STEP, threshold: float = THRESHOLD) -> GradcheckReport:
    """
    Central-difference check of `objective` with respect to every tensor in `tensors`.

    `objective(masks)` returns a scalar and appends the branch pattern of every piecewise
    operation it passes through to `masks`: ReLU activations, the sign of each log-magnitude
    difference and the quadratic region of smooth L1. A coordinate is skipped when a pattern
    differs between the perturbed evaluations and the unperturbed one.

    The relative error of a coordinate is |a - n| / max(|a|, |n|, 1e-8).
    """
    base_masks = []
    value = objective(base_masks)
    analytic = torch.autograd.grad(value, tensors, allow_unused=True)
    analytic = [torch.zeros_like(t) if g is None else g.detach() for t, g in zip(tensors, analytic)]

    def same_pattern(masks):
        return all(torch.equal(a, b) for a, b in zip(masks, base_masks))

    worst, checked, skipped = 0.0, 0, 0
    with torch.no_grad():
        for tensor, gradient in zip(tensors, analytic):
            flat = tensor.view(-1)
            count = flat.numel()
            coordinates = np.arange(count) if count <= MAX_COORDINATES else \
                np.sort(rng.choice(count, MAX_COORDINATES, replace=False))
            for index in coordinates:
                original = float(flat[index])
                flat[index] = original + step
                plus_masks = []
                plus = float(objective(plus_masks))
                flat[index] = original - step
                minus_masks = []
                minus = float(objective(minus_masks))
                flat[index] = original

                if not (same_pattern(plus_masks) and same_pattern(minus_masks)):
                    skipped += 1
                    continue
                numeric = (plus - minus) / (2.0 * step)
                exact = float(gradient.view(-1)[index])
                error = abs(exact - numeric) / max(abs(exact), abs(numeric), ABSOLUTE_FLOOR)
                worst = max(worst, error)
                checked += 1

    report = GradcheckReport(component, worst, checked, skipped, worst < threshold)
    logger.info("gradcheck component=%s max_rel_error=%.3e checked=%d skipped=%d passed=%s",
                component, worst, checked, skipped, report.passed)
    return report


def _signal(generator: torch.Generator, batch: int, length: int) -> torch.Tensor:
    """Sines with random frequency and phase plus a little noise."""
    times = torch.arange(length, dtype=torch.float64) / SAMPLE_RATE
    frequency = 200.0 + 2000.0 * torch.rand(batch, 1, generator=generator, dtype=torch.float64)
    phase = 2 * np.pi * torch.rand(batch, 1, generator=generator, dtype=torch.float64)
    noise = 0.05 * torch.randn(batch, length, generator=generator, dtype=torch.float64)
    return 0.5 * torch.sin(2 * np.pi * frequency * times + phase) + noise


def gradcheck(component: str, seed: int = 0) -> GradcheckReport:
    """
    Verifies the analytic gradients of one component in float64.

    Components:
        target: weighted sum of target outputs with respect to theta.
        head: weighted sum of the emitted weights with respect to the head parameters.
        encoder: weighted sum of the latent vector with respect to the encoder parameters.
        loss: total loss with respect to the reconstruction, on a random 512-sample pair.
        end2end: total loss of reconstructed crops with respect to every model parameter.

    Raises:
        UnknownPreset: For any other component name.
    """
    if component not in COMPONENTS:
        raise UnknownPreset(ErrorMessages.UNKNOWN_COMPONENT.format(name=component, available=list(COMPONENTS)))

    generator = torch.Generator().manual_seed(seed)
    rng = np.random.default_rng(seed)

    if component == "target":
        theta = (0.5 * torch.randn(param_count(CHECK_TARGET), generator=generator, dtype=torch.float64))
        theta.requires_grad_(True)
        times = torch.sort(torch.rand(32, generator=generator, dtype=torch.float64)).values
        weights = torch.randn(32, generator=generator, dtype=torch.float64)

        def objective(masks):
            return (weights * target_forward(theta, CHECK_TARGET, times, masks)).sum()
        return compare_gradients(component, objective, [theta], rng)

    if component in ("head", "encoder"):
        model = _check_model(seed)
        if component == "head":
            latent = torch.randn(2, CHECK_ENCODER.latent_dim, generator=generator, dtype=torch.float64)
            weights = torch.randn(2, param_count(CHECK_TARGET), generator=generator, dtype=torch.float64)

            def objective(masks):
                return (weights * model.head_forward(latent)).sum()
            return compare_gradients(component, objective, list(model.head.parameters()), rng)

        waveform = _signal(generator, 2, CHECK_CROP)
        weights = torch.randn(2, CHECK_ENCODER.latent_dim, generator=generator, dtype=torch.float64)

        def objective(masks):
            return (weights * model.encode(waveform)).sum()
        return compare_gradients(component, objective, list(model.encoder.parameters()), rng)

    loss = TotalLoss(CHECK_LOSS, SAMPLE_RATE)

    if component == "loss":
        reference = _signal(generator, 1, 512)
        estimate = _signal(generator, 1, 512).requires_grad_(True)

        def objective(masks):
            return loss(reference, estimate, masks)[0]
        return compare_gradients(component, objective, [estimate], rng)

    model = _check_model(seed)
    waveform = _signal(generator, 2, CHECK_CROP)
    times = torch.from_numpy(make_grid(CHECK_CROP, SAMPLE_RATE).times)

    def objective(masks):
        reconstruction = target_forward(model(waveform), CHECK_TARGET, times, masks)
        return loss(waveform, reconstruction, masks)[0]
    return compare_gradients(component, objective, list(model.parameters()), rng)
