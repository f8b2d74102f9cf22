#!/usr/bin/env python3
"""Run every bundled scenario and write one combined report.

Equivalent to: bdtrace --config scenarios --out bdtrace-out --tables
"""

import sys
from pathlib import Path

from bdtrace.cli import main

if __name__ == "__main__":
    scenarios = Path(__file__).resolve().parent.parent / "scenarios"
    sys.exit(main(["--config", str(scenarios), "--out", "bdtrace-out", "--tables"]
                  + sys.argv[1:]))
