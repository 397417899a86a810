import sys

import torch
from dotenv import load_dotenv

from src.app import configure_logging, create_app
from src.config.config import PROFILES, Config
from src.utils.constants import ExitCode

load_dotenv()


def main(argv=None) -> int:
    """
    Parses the command line, runs the selected command and returns its exit code.

    Usage errors reported by the parser exit with code 2.
    """
    config_class = PROFILES.get(Config.APP_ENV, Config)
    parser = create_app(config_class)
    if parser is None:
        return ExitCode.FAILURE

    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return ExitCode.OK if exit_.code in (0, None) else ExitCode.USAGE

    if args.log_file:
        configure_logging(config_class.LOG_LEVEL, args.log_file)
    if args.threads > 0:
        torch.set_num_threads(args.threads)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
