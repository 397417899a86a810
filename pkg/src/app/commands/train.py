import logging

from pathlib import Path

from src.app.commands import command
from src.app.services.trainer_service import TrainerService
from src.config.config import PROFILES
from src.config.experiment import load_experiment
from src.data.dataset import AudioDataset, build_manifest
from src.data.models.hypernet import init_model
from src.data.storage import load_checkpoint

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Train a hypernetwork on a directory of speaker folders.")
    parser.add_argument("--preset", choices=sorted(PROFILES), help="Configuration preset (default: INRAUDIO_ENV).")
    parser.add_argument("--config", help="JSON experiment file applied on top of the preset.")
    parser.add_argument("--data", required=True, help="Dataset root with one sub-directory of WAV files per speaker.")
    parser.add_argument("--out", required=True, help="Run directory for config, log and checkpoints.")
    parser.add_argument("--steps", type=int, help="Total optimizer steps.")
    parser.add_argument("--seed", type=int, help="Seed of initialization and data sampling.")
    parser.add_argument("--lr", type=float, help="AdamW learning rate.")
    parser.add_argument("--batch-size", type=int, help="Examples per step.")
    parser.add_argument("--grad-clip", type=float, help="Max global gradient norm.")
    parser.add_argument("--target", help="Target network preset (small, base, large, desk).")
    parser.add_argument("--loss", help="Loss preset (l1_melstft, l1_stft, stft_only, melstft_only).")
    parser.add_argument("--lambda-sl1", type=float, help="Weight of the smooth L1 term.")
    parser.add_argument("--lambda-stft", type=float, help="Weight of the multi-resolution STFT term.")
    parser.add_argument("--resume", help="Checkpoint to continue from.")
    parser.set_defaults(handler=train_command)


def overrides_from(args) -> dict:
    """Experiment keys set on the command line; flags win over the config file."""
    overrides = {
        "steps": args.steps,
        "seed": args.seed,
        "lr": args.lr,
        "batch_size": args.batch_size,
        "grad_clip": args.grad_clip,
    }
    loss = {key: value for key, value in {
        "preset": args.loss,
        "lambda_sl1": args.lambda_sl1,
        "lambda_stft": args.lambda_stft,
    }.items() if value is not None}
    if loss:
        overrides["loss"] = loss
    if args.target is not None:
        overrides["architecture"] = {"target_preset": args.target}
    return overrides


@command
def train_command(args):
    """
    Trains a model and writes config.json, the manifests, train_log.csv, ckpt_<step>.hsck
    and last.hsck into the run directory.
    """
    experiment = load_experiment(args.config, args.preset, overrides_from(args))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    experiment.save(out_dir / "config.json")

    train_manifest, val_manifest = build_manifest(args.data, experiment.crop_length, experiment.sample_rate,
                                                  experiment.val_speakers)
    train_manifest.save(out_dir / "manifest_train.json")
    val_manifest.save(out_dir / "manifest_val.json")
    dataset = AudioDataset(train_manifest)

    if args.resume:
        service = TrainerService.resume(load_checkpoint(args.resume), dataset, experiment.train,
                                        experiment.augment, out_dir, experiment.to_dict())
    else:
        model = init_model(experiment.train.seed, experiment.encoder, experiment.head_hidden_width, experiment.target)
        service = TrainerService(model, dataset, experiment.train, experiment.augment, out_dir, experiment.to_dict())

    _, log = service.train()
    final = log.entries[-1] if log.entries else None
    print(f"steps={service.step} checkpoint={service.last_checkpoint}"
          + (f" total_loss={final.total_loss:.6f}" if final else ""))
