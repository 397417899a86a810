import math

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.utils.constants import ErrorMessages
from src.utils.errors import InputTooShort, InvalidRange


@dataclass(frozen=True)
class EncoderConfig:
    """
    Shape of the convolutional waveform encoder.

    Attributes:
        base_channels (int): Channels after the input convolution; doubled by every strided block.
        strides (tuple[int, ...]): Downsampling factor of every block.
        dilations (tuple[int, ...]): Dilations of the residual units inside each block.
        latent_dim (int): Size of the pooled latent vector.
        kernel_size (int): Kernel of the input convolution.
        residual_kernel (int): Kernel of the dilated residual convolutions.
    """
    base_channels: int = 32
    strides: tuple[int, ...] = (2, 4, 8, 8)
    dilations: tuple[int, ...] = (1, 3, 9)
    latent_dim: int = 64
    kernel_size: int = 7
    residual_kernel: int = 3

    def __post_init__(self):
        object.__setattr__(self, "strides", tuple(int(s) for s in self.strides))
        object.__setattr__(self, "dilations", tuple(int(d) for d in self.dilations))
        if self.base_channels < 1 or self.latent_dim < 1:
            raise InvalidRange(ErrorMessages.INVALID_ENCODER_CONFIG.format(
                reason="base_channels and latent_dim must be positive"))
        if any(s < 1 for s in self.strides) or any(d < 1 for d in self.dilations):
            raise InvalidRange(ErrorMessages.INVALID_ENCODER_CONFIG.format(
                reason="strides and dilations must be positive"))

    @property
    def hop(self) -> int:
        """Total downsampling factor, the product of all strides."""
        return math.prod(self.strides)

    def to_dict(self) -> dict:
        return {
            "base_channels": self.base_channels,
            "strides": list(self.strides),
            "dilations": list(self.dilations),
            "latent_dim": self.latent_dim,
            "kernel_size": self.kernel_size,
            "residual_kernel": self.residual_kernel,
        }


class CausalConv1d(nn.Conv1d):
    """Conv1d padded on the left only, so output frame i sees inputs up to its own position."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, stride: int = 1, dilation: int = 1):
        super().__init__(in_channels, out_channels, kernel_size, stride=stride, dilation=dilation)
        self.left_pad = dilation * (kernel_size - 1) - (stride - 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return super().forward(F.pad(x, (self.left_pad, 0)))


class ResidualUnit(nn.Module):
    def __init__(self, channels: int, dilation: int, kernel_size: int):
        super().__init__()
        self.dilated = CausalConv1d(channels, channels, kernel_size, dilation=dilation)
        self.pointwise = CausalConv1d(channels, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.pointwise(F.elu(self.dilated(F.elu(x))))


class EncoderBlock(nn.Module):
    """Residual units followed by a strided convolution that doubles the channel count."""

    def __init__(self, channels: int, stride: int, dilations: tuple[int, ...], kernel_size: int):
        super().__init__()
        self.residuals = nn.Sequential(*(ResidualUnit(channels, d, kernel_size) for d in dilations))
        self.downsample = CausalConv1d(channels, 2 * channels, 2 * stride, stride=stride)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.downsample(F.elu(self.residuals(x)))


class WaveEncoder(nn.Module):
    """
    Convolutional encoder mapping a waveform batch to one latent vector per example.

    The stack is an input convolution, one EncoderBlock per stride and a 1x1 projection to
    latent_dim; the resulting latent sequence is averaged over time, so the latent size does
    not depend on the input length.
    """

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        channels = config.base_channels
        self.input_conv = CausalConv1d(1, channels, config.kernel_size)
        blocks = []
        for stride in config.strides:
            blocks.append(EncoderBlock(channels, stride, config.dilations, config.residual_kernel))
            channels *= 2
        self.blocks = nn.Sequential(*blocks)
        self.projection = CausalConv1d(channels, config.latent_dim, 1)

    def frames(self, waveform: torch.Tensor) -> torch.Tensor:
        """
        Latent sequence before pooling.

        Args:
            waveform (torch.Tensor): Samples of shape [B, T].

        Returns:
            torch.Tensor: Shape [B, latent_dim, ceil(T / hop)].

        Raises:
            InputTooShort: If T is below the total stride.
        """
        length = waveform.shape[-1]
        hop = self.config.hop
        if length < hop:
            raise InputTooShort(ErrorMessages.INPUT_TOO_SHORT.format(length=length, minimum=hop))
        remainder = length % hop
        if remainder:
            waveform = F.pad(waveform, (0, hop - remainder))
        hidden = self.blocks(self.input_conv(waveform.unsqueeze(1)))
        return self.projection(F.elu(hidden))

    def forward(self, waveform: torch.Tensor) -> torch.Tensor:
        return self.frames(waveform).mean(dim=-1)
