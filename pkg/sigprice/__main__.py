"""
Main entry point for running sigprice as a module.

Usage:
    python -m sigprice price --scenario scenarios/asian_bm/scenario.json
"""

import sys

if __name__ == "__main__":
    from .cli import main
    sys.exit(main())
