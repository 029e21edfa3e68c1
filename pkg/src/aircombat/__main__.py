"""Module entry point: ``python -m aircombat <subcommand>``."""

import sys

from .gateway.cli import main

if __name__ == "__main__":
    sys.exit(main())
