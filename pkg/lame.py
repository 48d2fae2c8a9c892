#!/usr/bin/env python3
"""Run the lamespec command line."""

import os, sys

# make sure the package is importable when run from a checkout
sys.path.insert(0, os.path.dirname(__file__))

from lamespec.cli import main

if __name__ == "__main__":
    sys.exit(main())
