import logging
import warnings

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from src.utils.constants import ErrorMessages
from src.utils.errors import CorruptHeader, InvalidAudio, IoError, UnsupportedFormat

logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0
PCM16_MAX = 1.0 - 1.0 / PCM16_SCALE
ENCODINGS = ("pcm16", "float32")


@dataclass(frozen=True)
class AudioBuffer:
    """
    Mono audio signal sampled on a regular grid.

    Attributes:
        samples (np.ndarray): One-dimensional float64 amplitudes, nominally in [-1, 1].
        sample_rate (int): Sampling rate in Hz.
    """
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidAudio(ErrorMessages.NOT_MONO)
        if not np.all(np.isfinite(samples)):
            raise InvalidAudio(ErrorMessages.NON_FINITE_SAMPLES)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidAudio(ErrorMessages.NON_POSITIVE_SAMPLE_RATE.format(rate=self.sample_rate))
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate)


@dataclass(frozen=True)
class Spectrogram:
    """
    Magnitude spectrogram of an AudioBuffer.

    Attributes:
        magnitudes (np.ndarray): Non-negative matrix of shape [frames, fft_size // 2 + 1].
        fft_size (int): FFT length used per frame.
        hop (int): Frame advance in samples.
        sample_rate (int): Sampling rate of the analysed signal in Hz.
    """
    magnitudes: np.ndarray
    fft_size: int
    hop: int
    sample_rate: int

    @property
    def num_frames(self) -> int:
        return int(self.magnitudes.shape[0])

    @property
    def num_bins(self) -> int:
        return int(self.magnitudes.shape[1])

    def to_csv(self, path) -> None:
        """
        Writes the spectrogram as CSV with header "frame,bin,magnitude" in frame-major order.

        Args:
            path (str | Path): Destination file.

        Raises:
            IoError: If the file cannot be written.
        """
        frames, bins = np.meshgrid(np.arange(self.num_frames), np.arange(self.num_bins), indexing="ij")
        table = np.column_stack([frames.ravel(), bins.ravel(), self.magnitudes.ravel()])
        try:
            np.savetxt(path, table, fmt=["%d", "%d", "%.9g"], delimiter=",",
                       header="frame,bin,magnitude", comments="")
        except OSError as error:
            raise IoError(ErrorMessages.WRITE_FAILED.format(path=path, reason=error)) from error


@dataclass(frozen=True)
class MelFilterbank:
    """
    Triangular mel filters projecting linear-frequency magnitudes onto the mel scale.

    Attributes:
        weights (np.ndarray): Non-negative matrix of shape [mel_bins, fft_size // 2 + 1].
        f_min (float): Lower edge of the first filter in Hz.
        f_max (float): Upper edge of the last filter in Hz.
        center_frequencies (np.ndarray): Peak frequency of every filter in Hz.
    """
    weights: np.ndarray
    f_min: float
    f_max: float
    center_frequencies: np.ndarray = field(repr=False)

    @property
    def mel_bins(self) -> int:
        return int(self.weights.shape[0])

    def apply(self, spectrogram: Spectrogram) -> np.ndarray:
        """
        Projects a magnitude spectrogram onto the mel bins.

        Returns:
            np.ndarray: Matrix of shape [frames, mel_bins].
        """
        return spectrogram.magnitudes @ self.weights.T


def _check_riff_header(path: Path) -> None:
    with open(path, "rb") as handle:
        header = handle.read(12)
    if len(header) < 12 or header[:4] not in (b"RIFF", b"RIFX") or header[8:12] != b"WAVE":
        raise CorruptHeader(ErrorMessages.NOT_A_WAV_FILE.format(path=path))


def read_wav(path) -> AudioBuffer:
    """
    Reads a PCM16 or 32-bit float WAV file into a mono AudioBuffer.

    Multichannel files are averaged to mono. PCM16 samples are scaled by 1/32768.

    Args:
        path (str | Path): File to read.

    Returns:
        AudioBuffer: The decoded signal.

    Raises:
        IoError: If the file does not exist or cannot be opened.
        CorruptHeader: If the RIFF structure is missing or damaged.
        UnsupportedFormat: For compressed encodings and sample formats other than int16/float32.
    """
    path = Path(path)
    try:
        _check_riff_header(path)
    except FileNotFoundError as error:
        raise IoError(ErrorMessages.FILE_NOT_FOUND.format(path=path)) from error
    except IsADirectoryError as error:
        raise IoError(ErrorMessages.FILE_NOT_FOUND.format(path=path)) from error

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(path)
    except ValueError as error:
        reason = str(error)
        if "Unknown wave file format" in reason or "not supported" in reason.lower() \
                or "unsupported" in reason.lower():
            raise UnsupportedFormat(ErrorMessages.UNSUPPORTED_WAV_ENCODING.format(path=path, reason=reason)) from error
        raise CorruptHeader(ErrorMessages.CORRUPT_WAV_HEADER.format(path=path, reason=reason)) from error
    except (EOFError, IndexError) as error:
        raise CorruptHeader(ErrorMessages.CORRUPT_WAV_HEADER.format(path=path, reason=error)) from error

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormat(ErrorMessages.UNSUPPORTED_SAMPLE_FORMAT.format(dtype=data.dtype))

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioBuffer(samples, sample_rate)


def write_wav(buffer: AudioBuffer, path, encoding: str = "float32") -> None:
    """
    Writes an AudioBuffer as a mono WAV file.

    PCM16 output clamps samples to [-1, 1 - 1/32768] before quantizing.

    Args:
        buffer (AudioBuffer): Signal to write.
        path (str | Path): Destination file.
        encoding (str): Either "pcm16" or "float32".

    Raises:
        UnsupportedFormat: If the encoding is unknown.
        IoError: If the file cannot be written.
    """
    if encoding == "pcm16":
        clamped = np.clip(buffer.samples, -1.0, PCM16_MAX)
        data = np.round(clamped * PCM16_SCALE).astype(np.int16)
    elif encoding == "float32":
        data = buffer.samples.astype(np.float32)
    else:
        raise UnsupportedFormat(ErrorMessages.UNKNOWN_ENCODING.format(encoding=encoding))

    try:
        wavfile.write(path, buffer.sample_rate, data)
    except OSError as error:
        raise IoError(ErrorMessages.WRITE_FAILED.format(path=path, reason=error)) from error
    logger.debug("wav_written path=%s samples=%d rate=%d encoding=%s", path, len(buffer), buffer.sample_rate, encoding)
