import math

from dataclasses import dataclass

import numpy as np
import torch

from src.data.audio import AudioBuffer
from src.utils.constants import ErrorMessages
from src.utils.errors import DimensionMismatch, InvalidRange, NonFiniteParams, TooFewSamples, UnknownPreset

RENDER_CHUNK = 65536


@dataclass(frozen=True)
class TargetNetConfig:
    """
    Architecture of the coordinate MLP that represents one audio crop.

    The network maps a time coordinate through a sinusoidal embedding of size 2L, then
    through ReLU hidden layers of the given widths, to a single linear output unit.

    Attributes:
        embedding_size (int): Number of frequency octaves L of the positional embedding.
        hidden_widths (tuple[int, ...]): Width of every hidden layer, input to output.
    """
    embedding_size: int = 16
    hidden_widths: tuple[int, ...] = (256, 256, 256, 256)

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.embedding_size < 1:
            raise InvalidRange(ErrorMessages.INVALID_EMBEDDING_SIZE.format(size=self.embedding_size))
        if not self.hidden_widths:
            raise InvalidRange(ErrorMessages.NO_HIDDEN_LAYERS)
        if any(w < 1 for w in self.hidden_widths):
            raise InvalidRange(ErrorMessages.INVALID_LAYER_WIDTH.format(widths=list(self.hidden_widths)))

    @property
    def input_dim(self) -> int:
        return 2 * self.embedding_size

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(in, out) pairs of every affine layer, input to output."""
        dims = [self.input_dim, *self.hidden_widths, 1]
        return list(zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {"embedding_size": self.embedding_size, "hidden_widths": list(self.hidden_widths)}


TARGET_PRESETS = {
    "small": TargetNetConfig(16, (64,) * 4),
    "base": TargetNetConfig(16, (256,) * 4),
    "large": TargetNetConfig(16, (384,) * 6),
    "desk": TargetNetConfig(16, (8, 8)),
}


def target_preset(name: str) -> TargetNetConfig:
    if name not in TARGET_PRESETS:
        raise UnknownPreset(ErrorMessages.UNKNOWN_TARGET_PRESET.format(name=name, available=sorted(TARGET_PRESETS)))
    return TARGET_PRESETS[name]


def param_count(config: TargetNetConfig) -> int:
    """Total number of weights and biases: sum of in * out + out over all layers."""
    return sum(fan_in * fan_out + fan_out for fan_in, fan_out in config.layer_dims)


def layer_slices(config: TargetNetConfig) -> list[tuple[slice, slice, int, int]]:
    """
    Location of every layer inside the flat parameter vector.

    Each layer stores its weight matrix row-major as [out x in], followed by its bias;
    layers are concatenated from input to output.

    Returns:
        list[tuple[slice, slice, int, int]]: (weight slice, bias slice, in, out) per layer.
    """
    slices = []
    offset = 0
    for fan_in, fan_out in config.layer_dims:
        weight = slice(offset, offset + fan_in * fan_out)
        offset = weight.stop
        bias = slice(offset, offset + fan_out)
        offset = bias.stop
        slices.append((weight, bias, fan_in, fan_out))
    return slices


def ablation_table(crop_length: int) -> list[dict]:
    """Parameter count of every target preset and its ratio to the number of samples in a crop."""
    return [
        {
            "preset": name,
            "widths": "x".join(str(w) for w in config.hidden_widths),
            "params": param_count(config),
            "params_per_sample": param_count(config) / crop_length,
        }
        for name, config in TARGET_PRESETS.items()
    ]


@dataclass(frozen=True)
class TargetNetParams:
    """
    Flat weight vector of one target network together with its architecture.

    Attributes:
        config (TargetNetConfig): Layout of the weights.
        theta (torch.Tensor): One-dimensional tensor of param_count(config) entries.
    """
    config: TargetNetConfig
    theta: torch.Tensor

    def __post_init__(self):
        theta = torch.as_tensor(self.theta).reshape(-1)
        expected = param_count(self.config)
        if theta.numel() != expected:
            raise DimensionMismatch(ErrorMessages.THETA_LENGTH_MISMATCH.format(actual=theta.numel(), expected=expected))
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, config: TargetNetConfig, dtype=torch.float32) -> "TargetNetParams":
        return cls(config, torch.zeros(param_count(config), dtype=dtype))

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.theta).all())


@dataclass(frozen=True)
class CoordinateGrid:
    """
    Time coordinates in [0, 1] at which a target network is evaluated.

    Attributes:
        times (np.ndarray): Non-decreasing float64 coordinates.
        nominal_rate (int): Sampling rate in Hz the grid stands for.
    """
    times: np.ndarray
    nominal_rate: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if times.size and (times.min() < 0.0 or times.max() > 1.0 or np.any(np.diff(times) < 0)):
            raise InvalidRange(ErrorMessages.INVALID_GRID)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return int(self.times.shape[0])


def make_grid(num_samples: int, rate: int) -> CoordinateGrid:
    """
    Evenly spaced grid times[i] = i / (num_samples - 1) covering [0, 1] end to end.

    Raises:
        TooFewSamples: If num_samples < 2.
    """
    if num_samples < 2:
        raise TooFewSamples(ErrorMessages.TOO_FEW_GRID_SAMPLES.format(num_samples=num_samples))
    return CoordinateGrid(np.arange(num_samples) / (num_samples - 1), rate)


def embed_times(times: torch.Tensor, embedding_size: int) -> torch.Tensor:
    """
    Sinusoidal embedding [sin(2^0 pi t), cos(2^0 pi t), ..., sin(2^(L-1) pi t), cos(2^(L-1) pi t)].

    Args:
        times (torch.Tensor): Coordinates of shape [T].
        embedding_size (int): Number of octaves L.

    Returns:
        torch.Tensor: Features of shape [T, 2L] in the dtype of `times`.
    """
    frequencies = math.pi * torch.pow(2.0, torch.arange(embedding_size, dtype=times.dtype))
    angles = times[:, None] * frequencies[None, :]
    return torch.stack([torch.sin(angles), torch.cos(angles)], dim=-1).reshape(times.shape[0], 2 * embedding_size)


def positional_embedding(t: float, embedding_size: int) -> np.ndarray:
    """Embedding vector of a single coordinate, computed in float64."""
    if embedding_size < 1:
        raise InvalidRange(ErrorMessages.INVALID_EMBEDDING_SIZE.format(size=embedding_size))
    return embed_times(torch.tensor([t], dtype=torch.float64), embedding_size)[0].numpy()


def target_forward(theta: torch.Tensor, config: TargetNetConfig, times: torch.Tensor,
                   masks: list | None = None) -> torch.Tensor:
    """
    Differentiable evaluation of a batch of target networks on shared time coordinates.

    Args:
        theta (torch.Tensor): Flat parameters, shape [P] or [B, P].
        config (TargetNetConfig): Architecture the parameters follow.
        times (torch.Tensor): Coordinates of shape [T].
        masks (list | None): If given, receives the boolean ReLU activation pattern of every
            hidden layer, shape [B, T, width] each.

    Returns:
        torch.Tensor: Amplitudes of shape [T] (for 1-D theta) or [B, T].
    """
    single = theta.dim() == 1
    if single:
        theta = theta.unsqueeze(0)
    batch = theta.shape[0]

    hidden = embed_times(times.to(theta.dtype), config.embedding_size)
    hidden = hidden.unsqueeze(0).expand(batch, -1, -1)

    slices = layer_slices(config)
    for index, (weight, bias, fan_in, fan_out) in enumerate(slices):
        w = theta[:, weight].reshape(batch, fan_out, fan_in)
        b = theta[:, bias].reshape(batch, 1, fan_out)
        hidden = torch.baddbmm(b, hidden, w.transpose(1, 2))
        if index < len(slices) - 1:
            if masks is not None:
                masks.append(hidden > 0)
            hidden = torch.relu(hidden)

    out = hidden.squeeze(-1)
    return out[0] if single else out


def _require_finite(params: TargetNetParams) -> None:
    if not params.is_finite():
        raise NonFiniteParams(ErrorMessages.NON_FINITE_PARAMS)


def forward(params: TargetNetParams, t: float) -> float:
    """
    Amplitude of the represented signal at time coordinate t.

    Coordinates outside [0, 1] are evaluated as they are (extrapolation).

    Raises:
        NonFiniteParams: If theta holds NaN or Inf values.
    """
    _require_finite(params)
    with torch.no_grad():
        times = torch.tensor([t], dtype=params.theta.dtype)
        return float(target_forward(params.theta, params.config, times)[0])


def render(params: TargetNetParams, grid: CoordinateGrid, chunk_size: int = RENDER_CHUNK) -> AudioBuffer:
    """
    Evaluates the target network on every grid coordinate.

    Grid points are processed in chunks of `chunk_size`; every point is evaluated
    independently, so the chunking does not change the result.

    Args:
        params (TargetNetParams): Network to evaluate.
        grid (CoordinateGrid): Coordinates and the nominal rate of the output.
        chunk_size (int): Number of coordinates per evaluation.

    Returns:
        AudioBuffer: One sample per grid point at grid.nominal_rate.

    Raises:
        TooFewSamples: If the grid is empty.
        NonFiniteParams: If theta holds NaN or Inf values.
    """
    if len(grid) == 0:
        raise TooFewSamples(ErrorMessages.EMPTY_GRID)
    _require_finite(params)

    times = torch.from_numpy(grid.times)
    pieces = []
    with torch.no_grad():
        for start in range(0, len(grid), chunk_size):
            pieces.append(target_forward(params.theta, params.config, times[start:start + chunk_size]))
    samples = torch.cat(pieces).double().numpy()
    return AudioBuffer(samples, grid.nominal_rate)
