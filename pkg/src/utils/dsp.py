import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window
from scipy.special import i0

from src.data.audio import AudioBuffer, MelFilterbank, Spectrogram
from src.utils.constants import ErrorMessages
from src.utils.errors import EmptySignal, InvalidRange

logger = logging.getLogger(__name__)

KAISER_BETA = 14.77
ZERO_CROSSINGS = 64
RESAMPLE_CHUNK = 4096


def retarget_length(num_samples: int, source_rate: float, target_rate: float) -> int:
    """
    Number of samples a signal of `num_samples` at `source_rate` has at `target_rate`.

    Rounds half up, e.g. 32768 samples at 22050 Hz become 11889 samples at 8000 Hz.
    """
    return int(np.floor(num_samples * target_rate / source_rate + 0.5))


def reflect_indices(length: int, pad: int) -> np.ndarray:
    """
    Source indices of a signal reflect-padded by `pad` samples on each side.

    The edge sample is not repeated. Pads longer than the signal reflect back and forth,
    so any length >= 1 is accepted.
    """
    positions = np.arange(-pad, length + pad)
    if length == 1:
        return np.zeros_like(positions)
    period = 2 * (length - 1)
    folded = np.mod(positions, period)
    return np.where(folded > length - 1, period - folded, folded)


def hann_window(fft_size: int, win_length: int | None = None) -> np.ndarray:
    """
    Periodic Hann window of `win_length` samples, zero-padded symmetrically to `fft_size`.
    """
    win_length = fft_size if win_length is None else win_length
    if win_length > fft_size:
        raise InvalidRange(ErrorMessages.WINDOW_TOO_LONG.format(win=win_length, fft_size=fft_size))
    window = get_window("hann", win_length, fftbins=True)
    left = (fft_size - win_length) // 2
    return np.pad(window, (left, fft_size - win_length - left))


def _validate_resolution(fft_size: int, hop: int) -> None:
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise InvalidRange(ErrorMessages.FFT_SIZE_NOT_POWER_OF_TWO.format(fft_size=fft_size))
    if hop < 1:
        raise InvalidRange(ErrorMessages.HOP_TOO_SMALL.format(hop=hop))


def stft(x: AudioBuffer, fft_size: int, hop: int, win_length: int | None = None) -> Spectrogram:
    """
    Magnitude short-time Fourier transform with centred frames.

    The signal is reflect-padded by fft_size/2 on both sides; frame f starts at f * hop in
    the padded signal and is weighted by a periodic Hann window. Magnitudes of bins
    0..fft_size/2 are returned, computed in float64.

    Args:
        x (AudioBuffer): Signal to analyse.
        fft_size (int): FFT length, a power of two.
        hop (int): Frame advance in samples.
        win_length (int | None): Window length; defaults to fft_size.

    Returns:
        Spectrogram: Matrix of shape [1 + len(x) // hop, fft_size // 2 + 1].

    Raises:
        EmptySignal: If `x` has no samples.
        InvalidRange: For a non power-of-two FFT size or a hop below 1.
    """
    _validate_resolution(fft_size, hop)
    if len(x) == 0:
        raise EmptySignal(ErrorMessages.EMPTY_SIGNAL)

    padded = x.samples[reflect_indices(len(x), fft_size // 2)]
    frames = sliding_window_view(padded, fft_size)[::hop]
    spectrum = np.fft.rfft(frames * hann_window(fft_size, win_length), axis=-1)
    return Spectrogram(np.abs(spectrum), fft_size, hop, x.sample_rate)


def mel_scale(f):
    """
    HTK mel value of a frequency in Hz: 2595 * log10(1 + f / 700).

    Accepts scalars and arrays.

    Raises:
        InvalidRange: If any frequency is negative.
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise InvalidRange(ErrorMessages.NEGATIVE_FREQUENCY.format(freq=f.min()))
    mel = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(mel) if mel.ndim == 0 else mel


def mel_to_hz(mel):
    mel = np.asarray(mel, dtype=np.float64)
    return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)


def build_mel_filterbank(mel_bins: int, fft_size: int, sample_rate: float,
                         f_min: float = 0.0, f_max: float | None = None) -> MelFilterbank:
    """
    Builds peak-normalized triangular mel filters over the FFT bins of `fft_size`.

    Filter centres are equally spaced on the mel scale between mel(f_min) and mel(f_max);
    each triangle rises from its left neighbour's centre to 1.0 at its own centre and falls
    to zero at its right neighbour's centre. A filter narrower than the FFT bin spacing gets
    a unit weight at the bin nearest its centre.

    Args:
        mel_bins (int): Number of filters.
        fft_size (int): FFT length the filters apply to.
        sample_rate (float): Sampling rate in Hz.
        f_min (float): Lower edge in Hz.
        f_max (float | None): Upper edge in Hz; defaults to sample_rate / 2.

    Returns:
        MelFilterbank: Filters of shape [mel_bins, fft_size // 2 + 1].

    Raises:
        InvalidRange: If mel_bins < 1 or the frequency range is not 0 <= f_min < f_max <= sample_rate / 2.
    """
    f_max = sample_rate / 2.0 if f_max is None else f_max
    if mel_bins < 1:
        raise InvalidRange(ErrorMessages.INVALID_MEL_BINS.format(mel_bins=mel_bins))
    if not (0.0 <= f_min < f_max <= sample_rate / 2.0):
        raise InvalidRange(ErrorMessages.INVALID_MEL_RANGE.format(f_min=f_min, f_max=f_max, rate=sample_rate))

    edges = mel_to_hz(np.linspace(mel_scale(f_min), mel_scale(f_max), mel_bins + 2))
    bin_freqs = np.arange(fft_size // 2 + 1) * sample_rate / fft_size

    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_freqs[None, :] - left) / (center - left)
    falling = (right - bin_freqs[None, :]) / (right - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))

    empty = ~np.any(weights > 0.0, axis=1)
    if np.any(empty):
        nearest = np.abs(bin_freqs[None, :] - edges[1:-1, None]).argmin(axis=1)
        weights[np.flatnonzero(empty), nearest[empty]] = 1.0
        logger.debug("mel_filterbank narrow_filters=%d fft_size=%d", int(empty.sum()), fft_size)

    return MelFilterbank(weights, float(f_min), float(f_max), edges[1:-1].copy())


def _kaiser(u: np.ndarray) -> np.ndarray:
    inside = np.abs(u) <= 1.0
    arg = KAISER_BETA * np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    return np.where(inside, i0(arg) / i0(KAISER_BETA), 0.0)


def sinc_resample(x: AudioBuffer, target_rate: float) -> AudioBuffer:
    """
    Band-limited resampling with a Kaiser-windowed sinc kernel.

    Output sample j is located at source position j * source_rate / target_rate. The kernel
    is a low-pass sinc with cutoff min(source_rate, target_rate) / 2 spanning 64 zero
    crossings on each side, shaped by a Kaiser window with beta 14.77. Samples beyond the
    signal edges count as zero.

    Args:
        x (AudioBuffer): Signal to resample.
        target_rate (float): Output sampling rate in Hz.

    Returns:
        AudioBuffer: Signal of round(len(x) * target_rate / source_rate) samples.

    Raises:
        InvalidRange: If target_rate is not positive.
    """
    if target_rate <= 0:
        raise InvalidRange(ErrorMessages.NON_POSITIVE_TARGET_RATE.format(rate=target_rate))
    if target_rate == x.sample_rate:
        return x.with_samples(x.samples)

    source = x.samples
    num_out = retarget_length(len(source), x.sample_rate, target_rate)
    step = x.sample_rate / target_rate
    cutoff = min(1.0, target_rate / x.sample_rate)
    half_width = ZERO_CROSSINGS / cutoff
    offsets = np.arange(-int(np.ceil(half_width)), int(np.ceil(half_width)) + 1)

    out = np.zeros(num_out, dtype=np.float64)
    for start in range(0, num_out, RESAMPLE_CHUNK):
        positions = np.arange(start, min(start + RESAMPLE_CHUNK, num_out)) * step
        taps = np.floor(positions)[:, None].astype(np.int64) + offsets[None, :]
        tau = positions[:, None] - taps
        kernel = cutoff * np.sinc(cutoff * tau) * _kaiser(tau / half_width)
        valid = (taps >= 0) & (taps < len(source))
        values = np.where(valid, source[np.clip(taps, 0, len(source) - 1)], 0.0)
        out[start:start + len(positions)] = np.sum(kernel * values, axis=1)

    return AudioBuffer(out, int(round(target_rate)))
