"""Module entry point so `python -m resdec_adapter` works as a backend command."""

import sys

from resdec_adapter.cli import main

if __name__ == "__main__":
    sys.exit(main())
