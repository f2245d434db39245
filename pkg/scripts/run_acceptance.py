#!/usr/bin/env python3
"""Run the acceptance suite with one pass/fail line per criterion.

Equivalent to ``pytest -v -s tests/test_acceptance.py``; the -s keeps
the per-criterion summary lines visible.
"""

import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

if __name__ == "__main__":
    sys.exit(
        subprocess.call(
            [sys.executable, "-m", "pytest", "-v", "-s", os.path.join(ROOT, "tests", "test_acceptance.py")]
            + sys.argv[1:]
        )
    )
