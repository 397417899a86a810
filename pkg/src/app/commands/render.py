import logging

from pathlib import Path

from src.app.commands import command, experiment_of
from src.app.commands.encode import at_training_rate
from src.data.audio import ENCODINGS, read_wav, write_wav
from src.data.models.hypernet import predict_inr
from src.data.models.target import make_grid, render
from src.data.storage import load_checkpoint, load_inr
from src.utils.dsp import retarget_length, stft

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("render", help="Evaluate an INR weight file on a grid.")
    parser.add_argument("--inr", required=True, help="INR weight file (HSIR).")
    parser.add_argument("--rate", type=int, required=True, help="Output sampling rate in Hz.")
    parser.add_argument("--samples", type=int, required=True, help="Number of output samples.")
    parser.add_argument("--out", required=True, help="Destination WAV file.")
    parser.add_argument("--encoding", choices=ENCODINGS, default="float32")
    parser.set_defaults(handler=render_command)

    parser = subparsers.add_parser("resample", help="Encode a WAV file and render it at another rate.")
    parser.add_argument("--ckpt", required=True, help="Model checkpoint (HSCK).")
    parser.add_argument("--in", dest="input", required=True, help="Input WAV file.")
    parser.add_argument("--rate", type=int, required=True, help="Output sampling rate in Hz.")
    parser.add_argument("--out", required=True, help="Destination WAV file.")
    parser.add_argument("--encoding", choices=ENCODINGS, default="float32")
    parser.set_defaults(handler=resample_command)

    parser = subparsers.add_parser("reconstruct", help="Write a WAV file, its reconstruction and both spectrograms.")
    parser.add_argument("--ckpt", required=True, help="Model checkpoint (HSCK).")
    parser.add_argument("--in", dest="input", required=True, help="Input WAV file.")
    parser.add_argument("--out", required=True, help="Output directory.")
    parser.add_argument("--fft", type=int, default=1024, help="FFT size of the spectrogram export.")
    parser.add_argument("--hop", type=int, default=256, help="Hop of the spectrogram export.")
    parser.set_defaults(handler=reconstruct_command)


@command
def render_command(args):
    params = load_inr(args.inr)
    output = render(params, make_grid(args.samples, args.rate))
    write_wav(output, args.out, args.encoding)
    logger.info("rendered path=%s rate=%d samples=%d", args.out, args.rate, len(output))


@command
def resample_command(args):
    """Renders the input on round(len * rate / training_rate) points at the requested rate."""
    checkpoint = load_checkpoint(args.ckpt)
    x = at_training_rate(read_wav(args.input), experiment_of(checkpoint))
    num_samples = retarget_length(len(x), x.sample_rate, args.rate)
    output = render(predict_inr(checkpoint.model, x), make_grid(num_samples, args.rate))
    write_wav(output, args.out, args.encoding)
    logger.info("resampled path=%s from_rate=%d rate=%d samples=%d", args.out, x.sample_rate, args.rate, len(output))


@command
def reconstruct_command(args):
    checkpoint = load_checkpoint(args.ckpt)
    x = at_training_rate(read_wav(args.input), experiment_of(checkpoint))
    reconstruction = render(predict_inr(checkpoint.model, x), make_grid(len(x), x.sample_rate))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, signal in (("original", x), ("reconstruction", reconstruction)):
        write_wav(signal, out_dir / f"{name}.wav")
        stft(signal, args.fft, args.hop).to_csv(out_dir / f"{name}_spectrogram.csv")
    logger.info("reconstructed out=%s samples=%d rate=%d", out_dir, len(x), x.sample_rate)
