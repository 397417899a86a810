import logging
import math

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from src.data.audio import AudioBuffer
from src.data.models.encoder import EncoderConfig, WaveEncoder
from src.data.models.target import TargetNetConfig, TargetNetParams, param_count
from src.utils.constants import ErrorMessages
from src.utils.errors import DimensionMismatch, InvalidRange

logger = logging.getLogger(__name__)

HEAD_LAYERS = 6
FINAL_LAYER_SCALE = 0.01


@dataclass(frozen=True)
class HeadConfig:
    """
    Fully connected part of the hypernetwork.

    Attributes:
        hidden_width (int): Width of the five hidden layers.
        output_dim (int): Number of emitted target-network parameters.
        num_layers (int): Always 6: five affine+ELU layers and the output layer.
    """
    hidden_width: int
    output_dim: int
    num_layers: int = HEAD_LAYERS

    def __post_init__(self):
        if self.num_layers != HEAD_LAYERS:
            raise InvalidRange(ErrorMessages.HEAD_LAYER_COUNT.format(num_layers=self.num_layers))
        if self.hidden_width < 1 or self.output_dim < 1:
            raise InvalidRange(ErrorMessages.INVALID_LAYER_WIDTH.format(widths=[self.hidden_width, self.output_dim]))

    @classmethod
    def for_target(cls, target: TargetNetConfig, hidden_width: int) -> "HeadConfig":
        return cls(hidden_width=hidden_width, output_dim=param_count(target))

    def to_dict(self) -> dict:
        return {"hidden_width": self.hidden_width, "output_dim": self.output_dim, "num_layers": self.num_layers}


class WeightHead(nn.Module):
    """Six affine layers with ELU in between; the last one emits the flat target weights."""

    def __init__(self, latent_dim: int, config: HeadConfig):
        super().__init__()
        widths = [latent_dim] + [config.hidden_width] * (config.num_layers - 1) + [config.output_dim]
        self.layers = nn.ModuleList(nn.Linear(fan_in, fan_out) for fan_in, fan_out in zip(widths[:-1], widths[1:]))

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        hidden = latent
        for layer in self.layers[:-1]:
            hidden = F.elu(layer(hidden))
        return self.layers[-1](hidden)


class HyperNetModel(nn.Module):
    """
    Hypernetwork H: waveform -> latent vector -> flat weights of a target network.

    Construction checks that the head emits exactly param_count(target) values and
    initializes every parameter from `seed`.

    Attributes:
        encoder_config (EncoderConfig): Encoder shape.
        head_config (HeadConfig): Head shape.
        target_config (TargetNetConfig): Architecture of the emitted networks.
        seed (int): Initialization seed.
    """

    def __init__(self, encoder_config: EncoderConfig, head_config: HeadConfig,
                 target_config: TargetNetConfig, seed: int = 0):
        super().__init__()
        expected = param_count(target_config)
        if head_config.output_dim != expected:
            raise DimensionMismatch(ErrorMessages.HEAD_OUTPUT_MISMATCH.format(
                output_dim=head_config.output_dim, param_count=expected))

        self.encoder_config = encoder_config
        self.head_config = head_config
        self.target_config = target_config
        self.seed = seed

        self.encoder = WaveEncoder(encoder_config)
        self.head = WeightHead(encoder_config.latent_dim, head_config)
        self.reset_parameters(seed)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def reset_parameters(self, seed: int) -> None:
        """
        Draws every weight and bias from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).

        The generator is seeded with `seed` and parameters are visited in module order, so
        the same seed always yields the same model. The head's output layer is then scaled
        by 0.01 so that freshly emitted target networks are close to silent.
        """
        generator = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for module in self.modules():
                if not isinstance(module, (nn.Conv1d, nn.Linear)):
                    continue
                bound = 1.0 / math.sqrt(module.weight[0].numel())
                for tensor in (module.weight, module.bias):
                    draw = torch.rand(tensor.shape, generator=generator, dtype=torch.float64)
                    tensor.copy_((2.0 * draw - 1.0) * bound)
            output_layer = self.head.layers[-1]
            output_layer.weight.mul_(FINAL_LAYER_SCALE)
            output_layer.bias.mul_(FINAL_LAYER_SCALE)

    def encode(self, waveforms: torch.Tensor) -> torch.Tensor:
        """Latent vectors [B, latent_dim] of waveforms [B, T]."""
        return self.encoder(waveforms)

    def head_forward(self, latent: torch.Tensor) -> torch.Tensor:
        """Flat target weights [B, P] of latent vectors [B, latent_dim]."""
        if latent.shape[-1] != self.encoder_config.latent_dim:
            raise DimensionMismatch(ErrorMessages.LATENT_DIMENSION_MISMATCH.format(
                actual=latent.shape[-1], expected=self.encoder_config.latent_dim))
        return self.head(latent)

    def forward(self, waveforms: torch.Tensor) -> torch.Tensor:
        return self.head_forward(self.encode(waveforms))

    def configs(self) -> dict:
        return {
            "encoder": self.encoder_config.to_dict(),
            "head": self.head_config.to_dict(),
            "target": self.target_config.to_dict(),
            "seed": self.seed,
        }


def init_model(seed: int, encoder_config: EncoderConfig, head_hidden_width: int,
               target_config: TargetNetConfig) -> HyperNetModel:
    """
    Builds a freshly initialized hypernetwork whose head matches `target_config`.

    Args:
        seed (int): Initialization seed.
        encoder_config (EncoderConfig): Encoder shape.
        head_hidden_width (int): Width of the head's hidden layers.
        target_config (TargetNetConfig): Architecture of the emitted target networks.

    Returns:
        HyperNetModel: Model in float32.
    """
    head_config = HeadConfig.for_target(target_config, head_hidden_width)
    model = HyperNetModel(encoder_config, head_config, target_config, seed=seed)
    logger.info("model_initialized seed=%d encoder_params=%d head_params=%d target_params=%d",
                seed, sum(p.numel() for p in model.encoder.parameters()),
                sum(p.numel() for p in model.head.parameters()), head_config.output_dim)
    return model


def _as_batch(model: HyperNetModel, x: AudioBuffer) -> torch.Tensor:
    return torch.as_tensor(x.samples, dtype=model.dtype).unsqueeze(0)


def encode(model: HyperNetModel, x: AudioBuffer) -> np.ndarray:
    """
    Latent vector of one waveform.

    Raises:
        InputTooShort: If x is shorter than the encoder's total stride.
    """
    with torch.no_grad():
        return model.encode(_as_batch(model, x))[0].double().numpy()


def head_forward(model: HyperNetModel, latent) -> TargetNetParams:
    """
    Target network emitted for a latent vector.

    Raises:
        DimensionMismatch: If the latent vector does not have latent_dim entries.
    """
    latent = torch.as_tensor(np.asarray(latent), dtype=model.dtype).reshape(1, -1)
    with torch.no_grad():
        theta = model.head_forward(latent)[0]
    return TargetNetParams(model.target_config, theta)


def predict_inr(model: HyperNetModel, x: AudioBuffer) -> TargetNetParams:
    """
    Implicit representation of `x`: head_forward(encode(x)).

    Raises:
        InputTooShort: If x is shorter than the encoder's total stride.
    """
    with torch.no_grad():
        theta = model(_as_batch(model, x))[0]
    return TargetNetParams(model.target_config, theta)
