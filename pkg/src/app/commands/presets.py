from src.app.commands import command
from src.config.config import FullConfig
from src.data.models.target import ablation_table
from src.utils.losses import LOSS_PRESETS


def register(subparsers) -> None:
    parser = subparsers.add_parser("presets", help="List target network sizes and loss presets.")
    parser.add_argument("--crop", type=int, default=FullConfig.CROP_LENGTH,
                        help="Crop length the parameter counts are compared to.")
    parser.set_defaults(handler=presets_command)


@command
def presets_command(args):
    for row in ablation_table(args.crop):
        print(f"target={row['preset']} widths={row['widths']} params={row['params']} "
              f"params_per_sample={row['params_per_sample']:.4f}")
    for name, preset in LOSS_PRESETS.items():
        fft_sizes = ",".join(str(n) for n in preset["fft_sizes"])
        print(f"loss={name} lambda_sl1={preset['lambda_sl1']:g} mel_bins={preset['mel_bins']} fft_sizes={fft_sizes}")
