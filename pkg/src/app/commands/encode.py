import logging

from src.app.commands import command, experiment_of
from src.data.audio import AudioBuffer, read_wav
from src.data.models.hypernet import predict_inr
from src.data.storage import load_checkpoint, save_inr
from src.utils.dsp import sinc_resample

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("encode", help="Predict the INR weights of a WAV file.")
    parser.add_argument("--ckpt", required=True, help="Model checkpoint (HSCK).")
    parser.add_argument("--in", dest="input", required=True, help="Input WAV file.")
    parser.add_argument("--out", required=True, help="Destination INR weight file (HSIR).")
    parser.set_defaults(handler=encode_command)


def at_training_rate(x: AudioBuffer, experiment: dict) -> AudioBuffer:
    """Resamples an input to the rate the model was trained at, if it differs."""
    rate = int(experiment["sample_rate"])
    if x.sample_rate == rate:
        return x
    logger.info("input_resampled from_rate=%d to_rate=%d", x.sample_rate, rate)
    return sinc_resample(x, rate)


@command
def encode_command(args):
    checkpoint = load_checkpoint(args.ckpt)
    x = at_training_rate(read_wav(args.input), experiment_of(checkpoint))
    params = predict_inr(checkpoint.model, x)
    save_inr(params, args.out)
    logger.info("inr_written path=%s params=%d", args.out, params.theta.numel())
