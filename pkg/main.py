"""
affine_swarm - Main Entry Point

Runs and validates affine formation control scenarios. Equivalent to `python -m cli`;
without arguments the noiseless baseline preset is run.
"""
import sys

from cli.__main__ import main as cli_main
from util.logger_module import logger


def main():
    """Start the simulator command line"""
    argv = sys.argv[1:]
    if not argv:
        logger.info("=" * 70)
        logger.info("affine_swarm - no command given, running the noiseless baseline")
        logger.info("=" * 70)
        argv = ['run', 'noiseless-baseline']
    sys.exit(cli_main(argv))


if __name__ == "__main__":
    main()
