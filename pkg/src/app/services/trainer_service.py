import csv
import logging
import math
import time

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from src.config.experiment import TrainConfig
from src.data.dataset import AudioDataset, AugmentConfig, make_batch, stack_batch
from src.data.models.hypernet import HyperNetModel
from src.data.models.target import make_grid, target_forward
from src.data.storage import Checkpoint, save_checkpoint
from src.utils.constants import ErrorMessages
from src.utils.errors import InvalidRange, IoError, NonFiniteLoss, SilentReference, TrainingDiverged
from src.utils.losses import TotalLoss

logger = logging.getLogger(__name__)

LAST_CHECKPOINT = "last.hsck"
LOG_FILE = "train_log.csv"


@dataclass(frozen=True)
class TrainLogEntry:
    step: int
    total_loss: float
    sl1: float
    stft: float
    wall_time: float


@dataclass
class TrainLog:
    """Loss records of a run in strictly increasing step order."""
    entries: list[TrainLogEntry] = field(default_factory=list)

    def append(self, entry: TrainLogEntry) -> None:
        if self.entries and entry.step <= self.entries[-1].step:
            raise InvalidRange(ErrorMessages.LOG_STEP_ORDER.format(step=entry.step, previous=self.entries[-1].step))
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self, path) -> None:
        try:
            with open(path, "w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(["step", "total_loss", "sl1", "stft", "wall_time"])
                for entry in self.entries:
                    writer.writerow([entry.step, repr(entry.total_loss), repr(entry.sl1), repr(entry.stft),
                                     f"{entry.wall_time:.3f}"])
        except OSError as error:
            raise IoError(ErrorMessages.WRITE_FAILED.format(path=path, reason=error)) from error


def loss_and_grads(model: HyperNetModel, batch: torch.Tensor, loss: TotalLoss) -> tuple[float, dict, dict]:
    """
    Reconstructs a batch through the hypernetwork and differentiates the objective.

    Each crop of length N is rendered on the grid i / (N - 1), so the target network sees
    the same coordinates the crop was sampled at.

    Args:
        model (HyperNetModel): Model whose parameters are differentiated.
        batch (torch.Tensor): Crops of shape [B, N] in the model's dtype.
        loss (TotalLoss): Objective.

    Returns:
        tuple[float, dict, dict]: Total loss, its parts, and the gradient of every named parameter.

    Raises:
        NonFiniteLoss: If the loss or any of its parts is NaN or Inf.
    """
    model.zero_grad(set_to_none=True)
    times = torch.from_numpy(make_grid(batch.shape[-1], loss.sample_rate).times)
    reconstruction = target_forward(model(batch), model.target_config, times)
    total, parts = loss(batch, reconstruction)

    values = {name: float(value) for name, value in parts.items()}
    if not math.isfinite(float(total)) or not all(math.isfinite(v) for v in values.values()):
        raise NonFiniteLoss(ErrorMessages.NON_FINITE_LOSS.format(step=-1, parts=values), parts=values)

    if total.requires_grad:
        total.backward()
    grads = {name: param.grad.detach().clone() if param.grad is not None else torch.zeros_like(param)
             for name, param in model.named_parameters()}
    return float(total), values, grads


def make_optimizer(model: HyperNetModel, config: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(model.parameters(), lr=config.lr, betas=(config.beta1, config.beta2),
                             eps=config.eps, weight_decay=config.weight_decay, foreach=False)


def adamw_step(optimizer: torch.optim.Optimizer, model: torch.nn.Module, grads: dict,
               grad_clip: float | None = None) -> None:
    """
    Applies one decoupled-weight-decay Adam update with the given gradients.

    Bias-corrected moments, then theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
    With grad_clip set, the gradients are first rescaled to a global norm of at most grad_clip.
    """
    for name, param in model.named_parameters():
        param.grad = grads[name].to(param.dtype)
    if grad_clip is not None:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()


def restore_optimizer(optimizer: torch.optim.Optimizer, model: torch.nn.Module, saved: dict, step: int) -> None:
    """Loads the AdamW moments of a checkpoint into a fresh optimizer."""
    moments = saved.get("moments") or {}
    for name, param in model.named_parameters():
        if name not in moments:
            continue
        exp_avg, exp_avg_sq = moments[name]
        optimizer.state[param] = {
            "step": torch.tensor(float(step)),
            "exp_avg": exp_avg.to(param.dtype).clone(),
            "exp_avg_sq": exp_avg_sq.to(param.dtype).clone(),
        }


class TrainerService:
    def __init__(self, model: HyperNetModel, dataset: AudioDataset, config: TrainConfig,
                 augment: AugmentConfig | None = None, out_dir=None, experiment: dict | None = None):
        """
        Initializes the TrainerService for one run.

        Args:
            model (HyperNetModel): Model to optimize in place.
            dataset (AudioDataset): Training crops.
            config (TrainConfig): Optimization settings and loss.
            augment (AugmentConfig | None): Augmentations; defaults to all enabled with config.seed.
            out_dir: Directory receiving checkpoints and the loss log; None keeps everything in memory.
            experiment (dict | None): Resolved experiment configuration stored in every checkpoint.
        """
        self.model = model
        self.dataset = dataset
        self.config = config
        self.augment = augment or AugmentConfig(seed=config.seed)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.experiment = experiment or {}
        self.loss = TotalLoss(config.loss, dataset.sample_rate)
        self.optimizer = make_optimizer(model, config)
        self.step = 0
        self.log = TrainLog()
        self.last_checkpoint: Path | None = None

    @classmethod
    def resume(cls, checkpoint: Checkpoint, dataset: AudioDataset, config: TrainConfig,
               augment: AugmentConfig | None = None, out_dir=None, experiment: dict | None = None) -> "TrainerService":
        """
        Continues a run from a checkpoint.

        Model weights, AdamW moments and the step counter are restored, and batches are drawn
        from the same per-step random streams, so the continued run matches an uninterrupted one.
        """
        service = cls(checkpoint.model, dataset, config, augment, out_dir, experiment or checkpoint.experiment)
        if checkpoint.optimizer is not None:
            restore_optimizer(service.optimizer, service.model, checkpoint.optimizer, checkpoint.step)
        service.step = checkpoint.step
        logger.info("training_resumed step=%d", checkpoint.step)
        return service

    def _checkpoint(self, name: str) -> Path:
        path = self.out_dir / name
        save_checkpoint(path, self.model, self.step, self.experiment, self.optimizer)
        return path

    def train(self) -> tuple[HyperNetModel, TrainLog]:
        """
        Runs the remaining optimizer steps.

        A log entry is recorded for every step whose zero-based index is a multiple of
        log_every. With an output directory, ckpt_<step>.hsck is written every
        checkpoint_every steps, last.hsck and train_log.csv at the end.

        Returns:
            tuple[HyperNetModel, TrainLog]: The trained model and its loss log.

        Raises:
            TrainingDiverged: If the loss becomes non-finite or a crop stays silent after every redraw;
                carries the last checkpoint written.
            EmptyDataset: If the dataset has no entries.
        """
        config = self.config
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)

        torch.use_deterministic_algorithms(True, warn_only=True)
        start = time.perf_counter()
        logger.info("training_started step=%d total_steps=%d batch_size=%d lr=%g",
                    self.step, config.total_steps, config.batch_size, config.lr)

        while self.step < config.total_steps:
            step_index = self.step
            examples = make_batch(self.dataset, self.augment, config.batch_size, step_index)
            batch = torch.from_numpy(stack_batch(examples)).to(self.model.dtype)

            try:
                total, parts, grads = loss_and_grads(self.model, batch, self.loss)
            except (NonFiniteLoss, SilentReference) as error:
                parts = getattr(error, "parts", {})
                logger.error("training_diverged step=%d parts=%s checkpoint=%s reason=%s",
                             step_index, parts, self.last_checkpoint, error)
                raise TrainingDiverged(
                    ErrorMessages.TRAINING_DIVERGED.format(step=step_index, checkpoint=self.last_checkpoint),
                    step=step_index, parts=parts, checkpoint=self.last_checkpoint,
                ) from error

            adamw_step(self.optimizer, self.model, grads, config.grad_clip)
            self.step += 1

            if step_index % config.log_every == 0:
                entry = TrainLogEntry(step_index, total, parts["sl1"], parts["stft"], time.perf_counter() - start)
                self.log.append(entry)
                logger.info("train_step step=%d total_loss=%.6f sl1=%.6f stft=%.6f",
                            step_index, total, parts["sl1"], parts["stft"])

            if self.out_dir is not None and self.step % config.checkpoint_every == 0:
                self.last_checkpoint = self._checkpoint(f"ckpt_{self.step}.hsck")

        if self.out_dir is not None:
            self.last_checkpoint = self._checkpoint(LAST_CHECKPOINT)
            self.log.to_csv(self.out_dir / LOG_FILE)
        logger.info("training_finished steps=%d seconds=%.1f", self.step, time.perf_counter() - start)
        return self.model, self.log


def train(model: HyperNetModel, dataset: AudioDataset, config: TrainConfig,
          augment: AugmentConfig | None = None) -> tuple[HyperNetModel, TrainLog]:
    """In-memory training run without checkpoints."""
    return TrainerService(model, dataset, config, augment).train()


def parameter_vector(model: torch.nn.Module) -> np.ndarray:
    """Every model parameter flattened into one float64 vector, in declaration order."""
    return torch.cat([param.detach().reshape(-1).double() for param in model.parameters()]).numpy()
