import logging
import math

from src.app.commands import command
from src.app.services.evaluation_service import EvaluationService, write_reports
from src.config.config import PROFILES, Config
from src.data.dataset import AudioDataset, build_manifest
from src.data.storage import load_checkpoint
from src.utils.constants import ErrorMessages
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

SPLITS = ("val", "train", "all")


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Score reconstructions with MSE, LSD and SI-SNR.")
    parser.add_argument("--ckpt", required=True, help="Model checkpoint (HSCK).")
    parser.add_argument("--data", required=True, help="Dataset root with one sub-directory per speaker.")
    parser.add_argument("--rates", help="Comma separated target rates in Hz.")
    parser.add_argument("--out", required=True, help="Directory for report_<rate>.csv and .json.")
    parser.add_argument("--split", choices=SPLITS, default="val", help="Speakers to evaluate.")
    parser.set_defaults(handler=eval_command)


def parse_rates(text: str | None, default) -> list[int]:
    if text is None:
        return [int(rate) for rate in default]
    try:
        rates = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as error:
        raise ConfigError(ErrorMessages.INVALID_RATES.format(rates=text)) from error
    if not rates or any(rate <= 0 for rate in rates):
        raise ConfigError(ErrorMessages.INVALID_RATES.format(rates=text))
    return rates


def aggregate_line(rate: int, aggregate: dict) -> str:
    def number(value):
        return "nan" if isinstance(value, float) and math.isnan(value) else f"{value:.6g}"

    return (f"rate={rate} count={aggregate['count']} failed={aggregate['failed']} mse={number(aggregate['mse'])} "
            f"lsd={number(aggregate['lsd'])} si_snr_db={number(aggregate['si_snr_db'])} "
            f"si_snr_infinite={aggregate['si_snr_infinite']}")


@command
def eval_command(args):
    """Writes one report per rate and prints one aggregate line per rate."""
    checkpoint = load_checkpoint(args.ckpt)
    experiment = checkpoint.experiment or {}
    rates = parse_rates(args.rates, experiment.get("eval_rates", Config.EVAL_RATES))

    sample_rate = int(experiment.get("sample_rate", Config.SAMPLE_RATE))
    crop_length = int(experiment.get("crop_length", PROFILES.get(Config.APP_ENV, Config).CROP_LENGTH))
    val_speakers = 0 if args.split == "all" else int(experiment.get("val_speakers", Config.VAL_SPEAKERS))
    train_manifest, val_manifest = build_manifest(args.data, crop_length, sample_rate, val_speakers)
    manifest = val_manifest if args.split == "val" else train_manifest

    reports = EvaluationService(checkpoint.model, AudioDataset(manifest), workers=max(1, args.threads)) \
        .evaluate_rates(rates)
    write_reports(reports, args.out)
    for rate, report in reports.items():
        print(aggregate_line(rate, report.aggregate))
