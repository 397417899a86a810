import logging

from src.app.commands import command
from src.data.audio import read_wav
from src.utils.constants import ExitCode
from src.utils.dsp import build_mel_filterbank, stft
from src.utils.gradcheck import COMPONENTS, gradcheck

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("gradcheck", help="Compare analytic gradients with finite differences.")
    parser.add_argument("--component", required=True, help=f"One of {', '.join(COMPONENTS)}.")
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=gradcheck_command)

    parser = subparsers.add_parser("spectrogram", help="Export the magnitude spectrogram of a WAV file as CSV.")
    parser.add_argument("--in", dest="input", required=True, help="Input WAV file.")
    parser.add_argument("--fft", type=int, required=True, help="FFT size, a power of two.")
    parser.add_argument("--hop", type=int, required=True, help="Frame advance in samples.")
    parser.add_argument("--mel", type=int, help="Project onto this many mel bins before export.")
    parser.add_argument("--out", required=True, help="Destination CSV file.")
    parser.set_defaults(handler=spectrogram_command)


@command
def gradcheck_command(args):
    report = gradcheck(args.component, args.seed)
    print(f"component={report.component} max_rel_error={report.max_rel_error:.3e} "
          f"checked={report.checked} skipped={report.skipped} passed={str(report.passed).lower()}")
    return ExitCode.OK if report.passed else ExitCode.FAILURE


@command
def spectrogram_command(args):
    spectrogram = stft(read_wav(args.input), args.fft, args.hop)
    if args.mel:
        filters = build_mel_filterbank(args.mel, args.fft, spectrogram.sample_rate)
        spectrogram = type(spectrogram)(filters.apply(spectrogram), args.fft, args.hop, spectrogram.sample_rate)
    spectrogram.to_csv(args.out)
    logger.info("spectrogram_written path=%s frames=%d bins=%d", args.out, spectrogram.num_frames, spectrogram.num_bins)
