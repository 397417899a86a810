import numpy as np
import pytest

from src.config.config import DeskConfig
from src.config.experiment import ExperimentConfig
from src.data.audio import AudioBuffer, write_wav
from src.data.dataset import AudioDataset, build_manifest
from src.data.models.encoder import EncoderConfig
from src.data.models.hypernet import init_model
from src.data.models.target import TargetNetConfig
from src.utils.losses import LossConfig, Resolution

RATE = 22050
CROP = 512


class TestConfig(DeskConfig):
    __test__ = False
    LOG_FILE = None
    LOG_LEVEL = "WARNING"
    THREADS = 0


TINY_ENCODER = EncoderConfig(base_channels=4, strides=(2, 4), dilations=(1, 3, 9), latent_dim=8)
TINY_TARGET = TargetNetConfig(embedding_size=4, hidden_widths=(8, 8))
TINY_HEAD_WIDTH = 16
TINY_LOSS = LossConfig(resolutions=(Resolution.from_fft_size(64), Resolution.from_fft_size(128)), mel_bins=16)


def sine(freq: float, num_samples: int = 4096, rate: int = RATE, amplitude: float = 0.5,
         phase: float = 0.0) -> AudioBuffer:
    """A pure tone as an AudioBuffer."""
    t = np.arange(num_samples) / rate
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * t + phase), rate)


def write_sine_dataset(root, speakers: int = 3, files_per_speaker: int = 2, num_samples: int = 4096,
                       rate: int = RATE, seed: int = 0):
    """
    Writes a dataset root with one folder per speaker and random-frequency sines inside.

    Returns:
        Path: The dataset root.
    """
    rng = np.random.default_rng(seed)
    for speaker in range(speakers):
        folder = root / f"spk{speaker:02d}"
        folder.mkdir(parents=True, exist_ok=True)
        for index in range(files_per_speaker):
            freq = float(rng.uniform(100.0, 2000.0))
            phase = float(rng.uniform(0.0, 2 * np.pi))
            write_wav(sine(freq, num_samples, rate, phase=phase), folder / f"clip{index:02d}.wav", "float32")
    return root


@pytest.fixture(scope="module")
def sine_dataset_dir(tmp_path_factory):
    """
    Provides a dataset root of three speakers with two 4096-sample sine clips each, at 22050 Hz.

    Returns:
        pathlib.Path: Directory with spk00, spk01 and spk02 sub-directories.
    """
    return write_sine_dataset(tmp_path_factory.mktemp("sines"))


@pytest.fixture(scope="module")
def datasets(sine_dataset_dir):
    """
    Builds the training (two speakers) and validation (one speaker) datasets with 512-sample crops.

    Returns:
        tuple[AudioDataset, AudioDataset]: Training and validation datasets.
    """
    train, val = build_manifest(sine_dataset_dir, CROP, RATE, val_speakers=1)
    return AudioDataset(train), AudioDataset(val)


@pytest.fixture
def tiny_model():
    """
    Supplies a freshly initialized small hypernetwork (hop 8, latent 8, target [8, 8] with L=4).

    Returns:
        HyperNetModel: Model in float32 initialized with seed 0.
    """
    return init_model(0, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET)


@pytest.fixture
def desk_model():
    """
    Supplies the desk-scale hypernetwork of the "desk" configuration preset.

    Returns:
        HyperNetModel: Model in float32 initialized with seed 0.
    """
    experiment = ExperimentConfig.from_profile("desk")
    return init_model(0, experiment.encoder, experiment.head_hidden_width, experiment.target)
