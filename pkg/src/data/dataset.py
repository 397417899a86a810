import json
import logging
import math
import re

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from src.data.audio import AudioBuffer, read_wav, write_wav
from src.utils.constants import ErrorMessages
from src.utils.dsp import sinc_resample
from src.utils.errors import (ConfigError, EmptyDataset, InrAudioError, InvalidBreakFrequency, InvalidRange, IoError,
                              UnreadableFile)

logger = logging.getLogger(__name__)

CACHE_SUFFIX = re.compile(r"\.\d+\.wav$")
SILENT_REDRAWS = 8


@dataclass(frozen=True)
class DatasetEntry:
    path: str
    speaker_id: str
    num_samples: int
    sample_rate: int


@dataclass(frozen=True)
class DatasetManifest:
    """
    Audio files of one split, already at the training sampling rate.

    Attributes:
        entries (tuple[DatasetEntry, ...]): Files with their speaker and length.
        crop_length (int): Number of samples per training example.
        target_rate (int): Sampling rate of every entry in Hz.
    """
    entries: tuple[DatasetEntry, ...]
    crop_length: int
    target_rate: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.crop_length <= 0:
            raise InvalidRange(ErrorMessages.INVALID_CROP_LENGTH.format(crop_length=self.crop_length))

    @property
    def speakers(self) -> list[str]:
        return sorted({entry.speaker_id for entry in self.entries})

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {
            "crop_length": self.crop_length,
            "target_rate": self.target_rate,
            "entries": [asdict(entry) for entry in self.entries],
        }

    def save(self, path) -> None:
        try:
            Path(path).write_text(json.dumps(self.to_dict(), indent=2))
        except OSError as error:
            raise IoError(ErrorMessages.WRITE_FAILED.format(path=path, reason=error)) from error

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        try:
            values = json.loads(Path(path).read_text())
        except OSError as error:
            raise IoError(ErrorMessages.FILE_NOT_FOUND.format(path=path)) from error
        except json.JSONDecodeError as error:
            raise ConfigError(ErrorMessages.CONFIG_NOT_JSON.format(path=path, reason=error)) from error
        return cls(tuple(DatasetEntry(**entry) for entry in values["entries"]),
                   values["crop_length"], values["target_rate"])


def _ingest(path: Path, target_rate: int) -> tuple[Path, AudioBuffer]:
    """Reads a source file, resampling it to target_rate through a cache file beside it."""
    try:
        return _read_resampled(path, target_rate)
    except (InrAudioError, OSError) as error:
        raise UnreadableFile(ErrorMessages.UNREADABLE_FILE.format(path=path, reason=error)) from error


def _read_resampled(path: Path, target_rate: int) -> tuple[Path, AudioBuffer]:
    cached = path.with_name(f"{path.stem}.{target_rate}.wav")
    if cached.exists():
        buffer = read_wav(cached)
        if buffer.sample_rate == target_rate:
            return cached, buffer
    buffer = read_wav(path)
    if buffer.sample_rate == target_rate:
        return path, buffer
    resampled = sinc_resample(buffer, target_rate)
    write_wav(resampled, cached, encoding="float32")
    return cached, read_wav(cached)


def build_manifest(root, crop_length: int, target_rate: int, val_speakers: int) -> tuple[DatasetManifest, DatasetManifest]:
    """
    Scans a dataset root (one sub-directory of WAV files per speaker) and splits it by speaker.

    Files are resampled to `target_rate` on ingestion and cached beside their source as
    "<stem>.<rate>.wav". Speakers are sorted lexicographically and the last `val_speakers`
    form the validation split. Unreadable files are skipped and counted.

    Args:
        root (str | Path): Dataset directory.
        crop_length (int): Samples per training example.
        target_rate (int): Training sampling rate in Hz.
        val_speakers (int): Number of held-out speakers.

    Returns:
        tuple[DatasetManifest, DatasetManifest]: Training and validation manifests.

    Raises:
        EmptyDataset: If no readable files exist or no speaker is left for training.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(ErrorMessages.EMPTY_DATASET.format(reason=f"{root} is not a directory"))

    by_speaker: dict[str, list[DatasetEntry]] = {}
    skipped = 0
    for speaker_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for source in sorted(speaker_dir.glob("*.wav")):
            if CACHE_SUFFIX.search(source.name):
                continue
            try:
                path, buffer = _ingest(source, target_rate)
            except UnreadableFile as error:
                skipped += 1
                logger.warning(str(error))
                continue
            by_speaker.setdefault(speaker_dir.name, []).append(
                DatasetEntry(str(path), speaker_dir.name, len(buffer), buffer.sample_rate))

    speakers = sorted(by_speaker)
    if not speakers:
        raise EmptyDataset(ErrorMessages.EMPTY_DATASET.format(reason=f"no readable WAV files under {root}"))
    held_out = speakers[len(speakers) - val_speakers:] if val_speakers > 0 else []
    training = [s for s in speakers if s not in held_out]
    if not training:
        raise EmptyDataset(ErrorMessages.EMPTY_DATASET.format(
            reason=f"{val_speakers} validation speakers leave none of {len(speakers)} for training"))

    def manifest(names):
        return DatasetManifest(tuple(e for s in names for e in by_speaker[s]), crop_length, target_rate)

    logger.info("manifest_built train_speakers=%d val_speakers=%d skipped=%d", len(training), len(held_out), skipped)
    return manifest(training), manifest(held_out)


class AudioDataset:
    """Manifest plus an in-memory cache of decoded samples."""

    def __init__(self, manifest: DatasetManifest):
        self.manifest = manifest
        self._cache: dict[int, AudioBuffer] = {}

    def __len__(self) -> int:
        return len(self.manifest)

    @property
    def crop_length(self) -> int:
        return self.manifest.crop_length

    @property
    def sample_rate(self) -> int:
        return self.manifest.target_rate

    def load(self, index: int) -> AudioBuffer:
        if index not in self._cache:
            self._cache[index] = read_wav(self.manifest.entries[index].path)
        return self._cache[index]

    def item_id(self, index: int) -> str:
        return Path(self.manifest.entries[index].path).name


@dataclass(frozen=True)
class PhaseMangleConfig:
    enabled: bool = True
    f_min: float = 20.0
    f_max: float = 2000.0
    probability: float = 0.8


@dataclass(frozen=True)
class DequantizeConfig:
    enabled: bool = True
    lsb: float = 1.0 / 32768.0


@dataclass(frozen=True)
class AugmentConfig:
    """
    Augmentations applied to every training example.

    Attributes:
        crop (bool): Random crop position; when False the first crop_length samples are used.
        phase_mangle (PhaseMangleConfig): Random first-order all-pass with a log-uniform break frequency.
        dequantize (DequantizeConfig): Additive uniform noise of one quantization step.
        seed (int): Root of every per-example random stream.
    """
    crop: bool = True
    phase_mangle: PhaseMangleConfig = field(default_factory=PhaseMangleConfig)
    dequantize: DequantizeConfig = field(default_factory=DequantizeConfig)
    seed: int = 0

    @classmethod
    def disabled(cls, seed: int = 0) -> "AugmentConfig":
        return cls(crop=False, phase_mangle=PhaseMangleConfig(enabled=False),
                   dequantize=DequantizeConfig(enabled=False), seed=seed)

    def validate(self, rate: int) -> None:
        mangle = self.phase_mangle
        if mangle.enabled and not (0 < mangle.f_min < mangle.f_max < rate / 2):
            raise InvalidRange(ErrorMessages.INVALID_AUGMENT_RANGE.format(f_min=mangle.f_min, f_max=mangle.f_max, rate=rate))
        if self.dequantize.enabled and self.dequantize.lsb <= 0:
            raise InvalidRange(ErrorMessages.INVALID_LSB.format(lsb=self.dequantize.lsb))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "AugmentConfig":
        return cls(
            crop=values.get("crop", True),
            phase_mangle=PhaseMangleConfig(**values.get("phase_mangle", {})),
            dequantize=DequantizeConfig(**values.get("dequantize", {})),
            seed=values.get("seed", 0),
        )


def random_crop(x: AudioBuffer, crop_length: int, rng: np.random.Generator) -> AudioBuffer:
    """
    Uniformly placed window of crop_length samples; shorter signals are zero-padded on the right.
    """
    if crop_length <= 0:
        raise InvalidRange(ErrorMessages.INVALID_CROP_LENGTH.format(crop_length=crop_length))
    if len(x) < crop_length:
        return x.with_samples(np.pad(x.samples, (0, crop_length - len(x))))
    offset = int(rng.integers(0, len(x) - crop_length + 1))
    return x.with_samples(x.samples[offset:offset + crop_length])


def first_window(x: AudioBuffer, crop_length: int) -> AudioBuffer:
    """The first crop_length samples, zero-padded when the signal is shorter."""
    window = x.samples[:crop_length]
    return x.with_samples(np.pad(window, (0, crop_length - len(window))))


def allpass_coefficient(break_freq: float, rate: float) -> float:
    tangent = math.tan(math.pi * break_freq / rate)
    return (1.0 - tangent) / (1.0 + tangent)


def phase_mangle(x: AudioBuffer, break_freq: float, rate: float | None = None) -> AudioBuffer:
    """
    First-order all-pass filter y[n] = p x[n] + x[n-1] - p y[n-1].

    p = (1 - tan(pi f / rate)) / (1 + tan(pi f / rate)); the magnitude spectrum is unchanged
    and only the phase is shifted around the break frequency f.

    Raises:
        InvalidBreakFrequency: Unless 0 < break_freq < rate / 2.
    """
    rate = x.sample_rate if rate is None else rate
    if not 0 < break_freq < rate / 2:
        raise InvalidBreakFrequency(ErrorMessages.INVALID_BREAK_FREQUENCY.format(nyquist=rate / 2, freq=break_freq))
    p = allpass_coefficient(break_freq, rate)
    return x.with_samples(lfilter([p, 1.0], [1.0, p], x.samples))


def dequantize(x: AudioBuffer, lsb: float, rng: np.random.Generator) -> AudioBuffer:
    """Adds uniform noise in [-lsb/2, lsb/2) to every sample."""
    if lsb <= 0:
        raise InvalidRange(ErrorMessages.INVALID_LSB.format(lsb=lsb))
    return x.with_samples(x.samples + rng.uniform(-lsb / 2, lsb / 2, size=len(x)))


def example_rng(seed: int, example_index: int) -> np.random.Generator:
    """Random stream of one training example, fixed by (seed, global example index)."""
    return np.random.default_rng([seed, example_index])


def make_example(dataset: AudioDataset, augment: AugmentConfig, example_index: int) -> AudioBuffer:
    rng = example_rng(augment.seed, example_index)
    crop_length = dataset.crop_length

    for _ in range(SILENT_REDRAWS):
        source = dataset.load(int(rng.integers(len(dataset))))
        crop = random_crop(source, crop_length, rng) if augment.crop else first_window(source, crop_length)
        if np.any(crop.samples != 0.0):
            break

    mangle = augment.phase_mangle
    if mangle.enabled and rng.random() < mangle.probability:
        break_freq = math.exp(rng.uniform(math.log(mangle.f_min), math.log(mangle.f_max)))
        crop = phase_mangle(crop, break_freq)
    if augment.dequantize.enabled:
        crop = dequantize(crop, augment.dequantize.lsb, rng)
    return crop


def make_batch(dataset: AudioDataset, augment: AugmentConfig, batch_size: int, batch_index: int,
               workers: int = 1) -> list[AudioBuffer]:
    """
    Draws batch_size augmented crops, with replacement, for one training step.

    Example i of the batch uses the random stream (augment.seed, batch_index * batch_size + i),
    so the batch does not depend on the number of workers.

    Raises:
        EmptyDataset: If the dataset has no entries.
        InvalidRange: If batch_size < 1 or the augmentation ranges are invalid.
    """
    if len(dataset) == 0:
        raise EmptyDataset(ErrorMessages.EMPTY_DATASET.format(reason="manifest has no entries"))
    if batch_size < 1:
        raise InvalidRange(ErrorMessages.INVALID_BATCH_SIZE.format(batch_size=batch_size))
    augment.validate(dataset.sample_rate)

    indices = [batch_index * batch_size + i for i in range(batch_size)]
    if workers <= 1:
        return [make_example(dataset, augment, index) for index in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda index: make_example(dataset, augment, index), indices))


def stack_batch(batch: list[AudioBuffer]) -> np.ndarray:
    return np.stack([buffer.samples for buffer in batch])
