import json
import logging

from dataclasses import dataclass, field, replace
from pathlib import Path

from src.config.config import PROFILES, Config
from src.data.dataset import AugmentConfig
from src.data.models.encoder import EncoderConfig
from src.data.models.target import TargetNetConfig, target_preset
from src.utils.constants import ErrorMessages
from src.utils.errors import ConfigError, InrAudioError
from src.utils.losses import LossConfig, paper_loss_presets

logger = logging.getLogger(__name__)

TRAIN_KEYS = {
    "steps": "total_steps",
    "batch_size": "batch_size",
    "lr": "lr",
    "beta1": "beta1",
    "beta2": "beta2",
    "eps": "eps",
    "weight_decay": "weight_decay",
    "seed": "seed",
    "checkpoint_every": "checkpoint_every",
    "log_every": "log_every",
    "grad_clip": "grad_clip",
}
DATA_KEYS = {"sample_rate", "crop_length", "val_speakers", "eval_rates"}
ARCHITECTURE_KEYS = {
    "target_preset", "embedding_size", "hidden_widths", "latent_dim", "head_hidden_width",
    "base_channels", "strides", "dilations",
}
BLOCK_KEYS = {"preset", "loss", "architecture", "augment"}


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimization settings of one training run.

    Attributes:
        total_steps (int): Number of optimizer steps.
        batch_size (int): Examples per step.
        loss (LossConfig): Objective.
        seed (int): Seed of model initialization and data sampling.
        checkpoint_every (int): Steps between checkpoints.
        log_every (int): Steps between log records.
        lr, beta1, beta2, eps, weight_decay (float): AdamW hyper-parameters.
        grad_clip (float | None): Max global gradient norm; None disables clipping.
    """
    total_steps: int = 1
    batch_size: int = 16
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0
    checkpoint_every: int = 10000
    log_every: int = 100
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    grad_clip: float | None = None

    def __post_init__(self):
        if self.total_steps < 1:
            raise ConfigError(ErrorMessages.INVALID_TOTAL_STEPS.format(steps=self.total_steps))
        if self.batch_size < 1:
            raise ConfigError(ErrorMessages.INVALID_BATCH_SIZE.format(batch_size=self.batch_size))
        if self.checkpoint_every < 1 or self.log_every < 1:
            raise ConfigError(ErrorMessages.INVALID_LOSS_CONFIG.format(
                reason="checkpoint_every and log_every must be at least 1"))


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything needed to reproduce a run: data settings, architecture, objective and optimizer.

    Attributes:
        profile (str): Name of the configuration preset the run started from.
        sample_rate (int): Training sampling rate in Hz.
        crop_length (int): Samples per training example.
        val_speakers (int): Number of held-out speakers.
        eval_rates (tuple[int, ...]): Rates evaluated by default.
        target_preset (str | None): Name of the target preset, None for a custom architecture.
        target (TargetNetConfig): Target network architecture.
        encoder (EncoderConfig): Encoder architecture.
        head_hidden_width (int): Width of the head's hidden layers.
        augment (AugmentConfig): Training augmentations.
        train (TrainConfig): Optimization settings, including the loss.
    """
    profile: str
    sample_rate: int
    crop_length: int
    val_speakers: int
    eval_rates: tuple[int, ...]
    target_preset: str | None
    target: TargetNetConfig
    encoder: EncoderConfig
    head_hidden_width: int
    augment: AugmentConfig
    train: TrainConfig

    @classmethod
    def from_profile(cls, name: str) -> "ExperimentConfig":
        """
        Experiment defaults of a configuration class ("desk" or "full").

        Raises:
            ConfigError: For an unknown profile name.
        """
        if name not in PROFILES:
            raise ConfigError(ErrorMessages.UNKNOWN_PROFILE.format(name=name, available=sorted(PROFILES)))
        profile: type[Config] = PROFILES[name]

        loss = paper_loss_presets(profile.LOSS_PRESET)
        if profile.FFT_SIZES is not None:
            loss = loss.with_fft_sizes(profile.FFT_SIZES)

        return cls(
            profile=name,
            sample_rate=profile.SAMPLE_RATE,
            crop_length=profile.CROP_LENGTH,
            val_speakers=profile.VAL_SPEAKERS,
            eval_rates=tuple(profile.EVAL_RATES),
            target_preset=profile.TARGET_PRESET,
            target=target_preset(profile.TARGET_PRESET),
            encoder=EncoderConfig(
                base_channels=profile.ENCODER_BASE_CHANNELS,
                strides=tuple(profile.ENCODER_STRIDES),
                dilations=tuple(profile.ENCODER_DILATIONS),
                latent_dim=profile.LATENT_DIM,
                kernel_size=profile.ENCODER_KERNEL_SIZE,
            ),
            head_hidden_width=profile.HEAD_HIDDEN_WIDTH,
            augment=AugmentConfig(seed=profile.SEED),
            train=TrainConfig(
                total_steps=profile.TOTAL_STEPS,
                batch_size=profile.BATCH_SIZE,
                loss=loss,
                seed=profile.SEED,
                checkpoint_every=profile.CHECKPOINT_EVERY,
                log_every=profile.LOG_EVERY,
                lr=profile.LEARNING_RATE,
                beta1=profile.BETA1,
                beta2=profile.BETA2,
                eps=profile.EPS,
                weight_decay=profile.WEIGHT_DECAY,
            ),
        )

    def apply(self, values: dict) -> "ExperimentConfig":
        """
        Returns a copy with the keys of a JSON config (or override dict) applied.

        Raises:
            ConfigError: For unknown keys or values that violate a config invariant.
        """
        unknown = set(values) - set(TRAIN_KEYS) - DATA_KEYS - BLOCK_KEYS
        if unknown:
            raise ConfigError(ErrorMessages.UNKNOWN_CONFIG_KEYS.format(keys=sorted(unknown)))
        try:
            return self._apply(values)
        except ConfigError:
            raise
        except (InrAudioError, TypeError, ValueError) as error:
            raise ConfigError(str(error)) from error

    def _apply(self, values: dict) -> "ExperimentConfig":
        config = self
        train_changes = {TRAIN_KEYS[key]: values[key] for key in TRAIN_KEYS if key in values}
        if "loss" in values:
            train_changes["loss"] = LossConfig.from_dict(values["loss"], base=config.train.loss)
        if train_changes:
            config = replace(config, train=replace(config.train, **train_changes))
        if "seed" in values:
            config = replace(config, augment=replace(config.augment, seed=int(values["seed"])))

        data_changes = {key: values[key] for key in DATA_KEYS if key in values}
        if "eval_rates" in data_changes:
            data_changes["eval_rates"] = tuple(int(rate) for rate in data_changes["eval_rates"])
        if data_changes:
            config = replace(config, **data_changes)

        if "architecture" in values:
            config = config._apply_architecture(values["architecture"])
        if "augment" in values:
            augment = AugmentConfig.from_dict({**config.augment.to_dict(), **values["augment"]})
            config = replace(config, augment=augment)
        return config

    def _apply_architecture(self, values: dict) -> "ExperimentConfig":
        unknown = set(values) - ARCHITECTURE_KEYS
        if unknown:
            raise ConfigError(ErrorMessages.UNKNOWN_CONFIG_KEYS.format(keys=sorted(unknown)))
        config = self
        if "target_preset" in values:
            config = replace(config, target_preset=values["target_preset"], target=target_preset(values["target_preset"]))
        if "embedding_size" in values or "hidden_widths" in values:
            target = TargetNetConfig(values.get("embedding_size", config.target.embedding_size),
                                     tuple(values.get("hidden_widths", config.target.hidden_widths)))
            if target != config.target:
                config = replace(config, target_preset=None, target=target)
        encoder_changes = {key: values[key] for key in ("latent_dim", "base_channels", "strides", "dilations")
                           if key in values}
        if encoder_changes:
            config = replace(config, encoder=replace(config.encoder, **encoder_changes))
        if "head_hidden_width" in values:
            config = replace(config, head_hidden_width=int(values["head_hidden_width"]))
        return config

    def to_dict(self) -> dict:
        """Resolved configuration in the JSON layout accepted by `apply`."""
        train = self.train
        return {
            "preset": self.profile,
            "steps": train.total_steps,
            "batch_size": train.batch_size,
            "lr": train.lr,
            "beta1": train.beta1,
            "beta2": train.beta2,
            "eps": train.eps,
            "weight_decay": train.weight_decay,
            "seed": train.seed,
            "checkpoint_every": train.checkpoint_every,
            "log_every": train.log_every,
            "grad_clip": train.grad_clip,
            "sample_rate": self.sample_rate,
            "crop_length": self.crop_length,
            "val_speakers": self.val_speakers,
            "eval_rates": list(self.eval_rates),
            "loss": train.loss.to_dict(),
            "architecture": {
                "target_preset": self.target_preset,
                "embedding_size": self.target.embedding_size,
                "hidden_widths": list(self.target.hidden_widths),
                "latent_dim": self.encoder.latent_dim,
                "head_hidden_width": self.head_hidden_width,
                "base_channels": self.encoder.base_channels,
                "strides": list(self.encoder.strides),
                "dilations": list(self.encoder.dilations),
            },
            "augment": self.augment.to_dict(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def read_config_file(path) -> dict:
    """
    Parses a JSON experiment file.

    Raises:
        ConfigError: If the file is missing or not valid JSON.
    """
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as error:
        raise ConfigError(ErrorMessages.CONFIG_NOT_FOUND.format(path=path)) from error
    except json.JSONDecodeError as error:
        raise ConfigError(ErrorMessages.CONFIG_NOT_JSON.format(path=path, reason=error)) from error


def load_experiment(path=None, profile: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """
    Resolves an experiment: configuration preset, then the JSON file, then override flags.

    The preset comes from `profile`, else the file's "preset" key, else Config.APP_ENV.
    """
    values = read_config_file(path) if path else {}
    name = profile or values.get("preset") or Config.APP_ENV
    config = ExperimentConfig.from_profile(name).apply(values)
    if overrides:
        config = config.apply({key: value for key, value in overrides.items() if value is not None})
    logger.debug("experiment_resolved preset=%s steps=%d", config.profile, config.train.total_steps)
    return config
