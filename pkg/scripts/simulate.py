#!/usr/bin/env python3
"""
Run stqubit simulations from a checkout without installing the package.

Usage:
    python scripts/simulate.py tss
    python scripts/simulate.py fig4 --config run.json --out results/
"""
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from stqubit.cli import main

if __name__ == "__main__":
    sys.exit(main())
