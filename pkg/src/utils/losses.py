import logging

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from src.config.config import Config
from src.data.audio import AudioBuffer
from src.utils.constants import ErrorMessages
from src.utils.dsp import build_mel_filterbank, hann_window, reflect_indices
from src.utils.errors import ConfigError, LengthMismatch, SilentReference, UnknownPreset

logger = logging.getLogger(__name__)

MAGNITUDE_FLOOR = 1e-12
MEL_FFT_SIZES = (512, 1024, 2048)
WIDE_FFT_SIZES = (128, 256, 512, 1024, 2048)
OVERLAP_DIVISOR = 8


@dataclass(frozen=True)
class Resolution:
    fft_size: int
    hop: int
    win_length: int

    @classmethod
    def from_fft_size(cls, fft_size: int) -> "Resolution":
        """Window as long as the FFT, 87.5% overlap."""
        return cls(fft_size, fft_size // OVERLAP_DIVISOR, fft_size)


@dataclass(frozen=True)
class LossConfig:
    """
    Weights and spectral settings of the training objective.

    Attributes:
        lambda_sl1 (float): Weight of the smooth L1 term.
        lambda_stft (float): Weight of the multi-resolution STFT term.
        beta (float): Smooth L1 threshold.
        resolutions (tuple[Resolution, ...]): STFT analysis settings.
        mel_bins (int | None): Mel projection size; None compares linear magnitudes.
        f_min (float): Lowest mel filter edge in Hz.
        f_max (float | None): Highest mel filter edge in Hz; None means Nyquist.
        log_epsilon (float): Offset inside the log-magnitude term.
    """
    lambda_sl1: float = 1.0
    lambda_stft: float = 1.0
    beta: float = 0.1
    resolutions: tuple[Resolution, ...] = field(
        default_factory=lambda: tuple(Resolution.from_fft_size(n) for n in MEL_FFT_SIZES))
    mel_bins: int | None = 128
    f_min: float = 0.0
    f_max: float | None = None
    log_epsilon: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "resolutions", tuple(self.resolutions))
        if not self.resolutions:
            raise ConfigError(ErrorMessages.INVALID_LOSS_CONFIG.format(reason="resolutions must not be empty"))
        if self.lambda_sl1 < 0 or self.lambda_stft < 0:
            raise ConfigError(ErrorMessages.INVALID_LOSS_CONFIG.format(reason="loss weights must be non-negative"))
        if self.beta <= 0 or self.log_epsilon <= 0:
            raise ConfigError(ErrorMessages.INVALID_LOSS_CONFIG.format(reason="beta and log_epsilon must be positive"))

    @property
    def fft_sizes(self) -> list[int]:
        return [r.fft_size for r in self.resolutions]

    def with_fft_sizes(self, fft_sizes) -> "LossConfig":
        return _replace(self, resolutions=tuple(Resolution.from_fft_size(int(n)) for n in fft_sizes))

    def to_dict(self) -> dict:
        return {
            "lambda_sl1": self.lambda_sl1,
            "lambda_stft": self.lambda_stft,
            "beta": self.beta,
            "fft_sizes": self.fft_sizes,
            "mel_bins": self.mel_bins,
            "log_epsilon": self.log_epsilon,
        }

    @classmethod
    def from_dict(cls, values: dict, base: "LossConfig | None" = None) -> "LossConfig":
        """Loss config from the JSON "loss" block; missing keys keep the values of `base`."""
        base = base or cls()
        unknown = set(values) - {"preset", "lambda_sl1", "lambda_stft", "beta", "fft_sizes", "mel_bins", "log_epsilon"}
        if unknown:
            raise ConfigError(ErrorMessages.UNKNOWN_CONFIG_KEYS.format(keys=sorted(unknown)))
        if "preset" in values:
            base = paper_loss_presets(values["preset"])
        config = _replace(
            base,
            lambda_sl1=float(values.get("lambda_sl1", base.lambda_sl1)),
            lambda_stft=float(values.get("lambda_stft", base.lambda_stft)),
            beta=float(values.get("beta", base.beta)),
            mel_bins=values.get("mel_bins", base.mel_bins),
            log_epsilon=float(values.get("log_epsilon", base.log_epsilon)),
        )
        if "fft_sizes" in values:
            config = config.with_fft_sizes(values["fft_sizes"])
        return config


def _replace(config: LossConfig, **changes) -> LossConfig:
    values = {name: getattr(config, name) for name in config.__dataclass_fields__}
    values.update(changes)
    return LossConfig(**values)


LOSS_PRESETS = {
    "l1_melstft": dict(lambda_sl1=1.0, mel_bins=128, fft_sizes=MEL_FFT_SIZES),
    "l1_stft": dict(lambda_sl1=1.0, mel_bins=None, fft_sizes=WIDE_FFT_SIZES),
    "stft_only": dict(lambda_sl1=0.0, mel_bins=None, fft_sizes=WIDE_FFT_SIZES),
    "melstft_only": dict(lambda_sl1=0.0, mel_bins=128, fft_sizes=MEL_FFT_SIZES),
}


def paper_loss_presets(name: str) -> LossConfig:
    """
    Loss configuration of one of the four objective variants.

    l1_melstft is the default objective; l1_stft and stft_only drop the mel projection and
    use five FFT sizes from 128 to 2048; stft_only and melstft_only drop the smooth L1 term.

    Raises:
        UnknownPreset: For any other name.
    """
    if name not in LOSS_PRESETS:
        raise UnknownPreset(ErrorMessages.UNKNOWN_LOSS_PRESET.format(name=name, available=sorted(LOSS_PRESETS)))
    preset = LOSS_PRESETS[name]
    return LossConfig(
        lambda_sl1=preset["lambda_sl1"],
        lambda_stft=1.0,
        beta=0.1,
        resolutions=tuple(Resolution.from_fft_size(n) for n in preset["fft_sizes"]),
        mel_bins=preset["mel_bins"],
    )


def magnitude_spectrogram(x: torch.Tensor, fft_size: int, hop: int, window: torch.Tensor) -> torch.Tensor:
    """
    Differentiable magnitude STFT of a batch [B, T] with the framing of `dsp.stft`.

    Magnitudes are sqrt(re^2 + im^2 + 1e-12) so the gradient stays finite at silent bins.

    Returns:
        torch.Tensor: Shape [B, 1 + T // hop, fft_size // 2 + 1].
    """
    index = torch.from_numpy(reflect_indices(x.shape[-1], fft_size // 2))
    frames = x[:, index].unfold(-1, fft_size, hop)
    spectrum = torch.fft.rfft(frames * window, dim=-1)
    return torch.sqrt(spectrum.real ** 2 + spectrum.imag ** 2 + MAGNITUDE_FLOOR)


def _check_pair(x: torch.Tensor, xhat: torch.Tensor) -> None:
    if x.shape[-1] != xhat.shape[-1]:
        raise LengthMismatch(ErrorMessages.SIGNAL_LENGTH_MISMATCH.format(left=x.shape[-1], right=xhat.shape[-1]))


def _check_reference(x: torch.Tensor) -> None:
    if bool(torch.any(torch.all(x == 0, dim=-1))):
        raise SilentReference(ErrorMessages.SILENT_REFERENCE)


class STFTLoss(nn.Module):
    """
    Spectral convergence plus log-magnitude distance at one resolution.

    With M the magnitude (optionally mel-projected) spectrogram:
    L_sc = ||M(x) - M(xhat)||_F / ||M(x)||_F and L_mag = mean |log(M(x) + eps) - log(M(xhat) + eps)|,
    both computed per example and averaged over the batch.
    """

    def __init__(self, resolution: Resolution, sample_rate: int, mel_bins: int | None = None,
                 f_min: float = 0.0, f_max: float | None = None, log_epsilon: float = 1e-7):
        super().__init__()
        self.resolution = resolution
        self.log_epsilon = log_epsilon
        window = hann_window(resolution.fft_size, resolution.win_length)
        self.register_buffer("window", torch.from_numpy(window), persistent=False)
        if mel_bins is None:
            self.mel = None
        else:
            filters = build_mel_filterbank(mel_bins, resolution.fft_size, sample_rate, f_min, f_max)
            self.register_buffer("mel", torch.from_numpy(filters.weights), persistent=False)

    def spectrogram(self, x: torch.Tensor) -> torch.Tensor:
        magnitudes = magnitude_spectrogram(x, self.resolution.fft_size, self.resolution.hop, self.window.to(x.dtype))
        if self.mel is not None:
            magnitudes = magnitudes @ self.mel.to(x.dtype).T
        return magnitudes

    def forward(self, x: torch.Tensor, xhat: torch.Tensor, masks: list | None = None) -> torch.Tensor:
        reference = self.spectrogram(x)
        estimate = self.spectrogram(xhat)
        convergence = torch.linalg.norm(reference - estimate, dim=(1, 2)) / torch.linalg.norm(reference, dim=(1, 2))
        difference = torch.log(reference + self.log_epsilon) - torch.log(estimate + self.log_epsilon)
        if masks is not None:
            masks.append(difference > 0)
        log_distance = difference.abs()
        return (convergence + log_distance.mean(dim=(1, 2))).mean()


class MultiResolutionSTFTLoss(nn.Module):
    """Mean of STFTLoss over every configured resolution."""

    def __init__(self, config: LossConfig, sample_rate: int):
        super().__init__()
        self.losses = nn.ModuleList(
            STFTLoss(resolution, sample_rate, config.mel_bins, config.f_min, config.f_max, config.log_epsilon)
            for resolution in config.resolutions
        )

    def forward(self, x: torch.Tensor, xhat: torch.Tensor, masks: list | None = None) -> torch.Tensor:
        _check_pair(x, xhat)
        _check_reference(x)
        return torch.stack([loss(x, xhat, masks) for loss in self.losses]).mean()


class TotalLoss(nn.Module):
    """
    Weighted objective lambda_sl1 * smooth L1 + lambda_stft * multi-resolution STFT loss.

    A term whose weight is zero is not computed and reported as 0. When `masks` is given to
    forward, it receives the smooth L1 quadratic region and the sign of every log-magnitude
    difference, the branch points of the objective.
    """

    def __init__(self, config: LossConfig, sample_rate: int):
        super().__init__()
        self.config = config
        self.sample_rate = sample_rate
        self.stft = MultiResolutionSTFTLoss(config, sample_rate)

    def forward(self, x: torch.Tensor, xhat: torch.Tensor, masks: list | None = None) -> tuple[torch.Tensor, dict]:
        _check_pair(x, xhat)
        if masks is not None:
            masks.append((xhat - x).abs() < self.config.beta)
        zero = xhat.new_zeros(())
        sl1 = F.smooth_l1_loss(xhat, x, beta=self.config.beta) if self.config.lambda_sl1 > 0 else zero
        stft = self.stft(x, xhat, masks) if self.config.lambda_stft > 0 else zero
        total = self.config.lambda_sl1 * sl1 + self.config.lambda_stft * stft
        return total, {"sl1": sl1, "stft": stft}


def _to_batch(signal) -> torch.Tensor:
    if isinstance(signal, AudioBuffer):
        signal = signal.samples
    tensor = torch.as_tensor(np.asarray(signal, dtype=np.float64)) if not torch.is_tensor(signal) else signal
    return tensor.unsqueeze(0) if tensor.dim() == 1 else tensor


def _rate_of(x, sample_rate: int | None) -> int:
    if sample_rate is not None:
        return sample_rate
    return x.sample_rate if isinstance(x, AudioBuffer) else Config.SAMPLE_RATE


def smooth_l1(x, xhat, beta: float = 0.1) -> float:
    """
    Mean of 0.5 d^2 / beta where |d| < beta, |d| - 0.5 beta elsewhere, with d = x - xhat.

    Raises:
        LengthMismatch: If the signals differ in length.
    """
    left, right = _to_batch(x), _to_batch(xhat)
    _check_pair(left, right)
    return float(F.smooth_l1_loss(right, left, beta=beta))


def stft_loss_single(x, xhat, resolution: Resolution, mel: tuple | None = None, sample_rate: int | None = None,
                     log_epsilon: float = 1e-7) -> float:
    """
    Spectral convergence plus log-magnitude loss at one resolution.

    Args:
        mel (tuple | None): (mel_bins, f_min, f_max) to project magnitudes first, or None.

    Raises:
        LengthMismatch: If the signals differ in length.
        SilentReference: If x is all zeros.
    """
    left, right = _to_batch(x), _to_batch(xhat)
    _check_pair(left, right)
    _check_reference(left)
    mel_bins, f_min, f_max = mel if mel is not None else (None, 0.0, None)
    loss = STFTLoss(resolution, _rate_of(x, sample_rate), mel_bins, f_min, f_max, log_epsilon)
    with torch.no_grad():
        return float(loss(left, right))


def multires_stft_loss(x, xhat, config: LossConfig, sample_rate: int | None = None) -> float:
    """Mean of stft_loss_single over config.resolutions."""
    left, right = _to_batch(x), _to_batch(xhat)
    with torch.no_grad():
        return float(MultiResolutionSTFTLoss(config, _rate_of(x, sample_rate))(left, right))


def total_loss(x, xhat, config: LossConfig, sample_rate: int | None = None) -> tuple[float, dict]:
    """
    Weighted training objective and its parts.

    Returns:
        tuple[float, dict]: Total value and {"sl1": ..., "stft": ...}.
    """
    left, right = _to_batch(x), _to_batch(xhat)
    with torch.no_grad():
        total, parts = TotalLoss(config, _rate_of(x, sample_rate))(left, right)
    return float(total), {name: float(value) for name, value in parts.items()}
