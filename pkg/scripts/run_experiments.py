#!/usr/bin/env python3
"""
Run the negative binomial approximation experiments.

Usage:
    python scripts/run_experiments.py median-scan --p 0.25 --out median_p025.csv
    python scripts/run_experiments.py estimator-sim --n 50 --reps 10000
    python scripts/run_experiments.py llt-error --r-list 100 400 1600 6400
    python scripts/run_experiments.py tv-scaling --format json
    python scripts/run_experiments.py poisson-median --lambda-min 5 --lambda-max 500
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from nbapprox.cli import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
