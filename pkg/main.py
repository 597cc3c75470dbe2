#!/usr/bin/env python3
"""
Random Binning Toolkit

Entropy spectra, phase diagrams, error exponents and exact small-n
simulations of finite-temperature Slepian-Wolf decoding.

Usage:
    python main.py phase --source sources/dsbs01.json --grid 256 --out boundaries.csv
    python main.py exponent --source sources/dsbs01.json --rate 0.55 --beta 1
    python main.py simulate --source sources/dsbs01.json --n 12 --rate 0.55 --out report.json
    python main.py --help
"""

from random_binning.cli import main

if __name__ == "__main__":
    main()
