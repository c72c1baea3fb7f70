import argparse
import logging
import sys
import traceback
from typing import List, Optional

from .commands import COMMANDS, EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_VERIFY_FAILED
from .errors import ConfigError, DataError, InvalidArgumentError, PhotonkdError
from .modes import MODE_NAMES
from .ui.console import Console
from .utils.logger import setup_logger


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--debug", action="store_true", help="Enable debug logging on stderr")
    common.add_argument("--log-file", help="Also write the log to this file")

    parser = argparse.ArgumentParser(
        prog="photonkd", description="BB84 key distribution with polarization and transverse-mode qubits"
    )
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    mubs_parser = subparsers.add_parser("mubs", parents=[common], help="Print the five mutually unbiased bases")
    mubs_parser.add_argument("--basis", help="Only this basis (B1..B5)")
    mubs_parser.add_argument("--format", choices=["text", "csv"], default="text", help="Output format")
    mubs_parser.add_argument("--verify", action="store_true", help="Exit 1 unless the table checks out")

    sim_parser = subparsers.add_parser("simulate", parents=[common], help="Run the key distribution protocol")
    sim_parser.add_argument("config", help="Run config (JSON or YAML)")
    sim_parser.add_argument("--seed", type=int, help="Override the root seed")
    sim_parser.add_argument("--rounds", type=int, help="Override the number of photons")
    sim_parser.add_argument("--workers", type=int, help="Worker processes")
    sim_parser.add_argument("--preset", help="MZEM preset (ideal, paper-tableIV)")
    sim_parser.add_argument("--stats", help="Write stats JSON here instead of stdout")
    sim_parser.add_argument("--records", help="Write per-round CSV here")
    sim_parser.add_argument("--alice-key", help="Write Alice's sifted key here")
    sim_parser.add_argument("--bob-key", help="Write Bob's sifted key here")
    sim_parser.add_argument("--expect-qber", type=float, help="Exit 1 if the QBER is off by more than --tol")
    sim_parser.add_argument("--tol", type=float, help="Tolerance for --expect-qber")
    sim_parser.add_argument(
        "--qber-kind", choices=["symbol", "bit"], default="symbol", help="Rate compared by --expect-qber"
    )

    mzem_parser = subparsers.add_parser("mzem", parents=[common], help="Interferometer models")
    mzem_parser.add_argument(
        "--scan-dx",
        nargs=3,
        type=float,
        metavar=("FROM", "TO", "STEPS"),
        help="Visibility versus displacement (waists)",
    )
    mzem_parser.add_argument("--mode", choices=MODE_NAMES, default="tem00", help="Mode profile for --scan-dx")
    mzem_parser.add_argument("--points", type=int, default=512, help="Grid points per axis")
    mzem_parser.add_argument("--preset", help="Print a preset's visibilities and detection matrix")

    distill_parser = subparsers.add_parser("distill", parents=[common], help="Reconcile and hash a key pair")
    distill_parser.add_argument("--alice", required=True, help="Alice's key file")
    distill_parser.add_argument("--bob", required=True, help="Bob's key file")
    distill_parser.add_argument("--block-size", type=int, default=8, help="Parity block size")
    distill_parser.add_argument("--passes", type=int, default=4, help="Reconciliation passes")
    distill_parser.add_argument("--margin", type=int, default=0, help="Security margin in bits")
    distill_parser.add_argument("--seed", type=int, default=0, help="Seed for permutations and the hash")
    distill_parser.add_argument("--out", help="Write the final key here")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the photonkd CLI."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG_ERROR

    logger = setup_logger("photonkd", args.log_file, logging.DEBUG if args.debug else logging.WARNING)
    console = Console()
    try:
        return COMMANDS[args.command](args, console)
    except ConfigError as e:
        console.print_error(str(e))
        return EXIT_CONFIG_ERROR
    except InvalidArgumentError as e:
        console.print_error(str(e))
        return EXIT_CONFIG_ERROR
    except DataError as e:
        console.print_error(str(e))
        return EXIT_DATA_ERROR
    except PhotonkdError as e:
        console.print_error(str(e))
        logger.debug(traceback.format_exc())
        return EXIT_VERIFY_FAILED


if __name__ == "__main__":
    sys.exit(main())
