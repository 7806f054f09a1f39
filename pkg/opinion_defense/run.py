#!/usr/bin/env python
"""
Simple script to run the command-line tool from a source checkout
"""
import os
import sys

# Add the parent directory to the path so we can import opinion_defense as a package
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
sys.path.insert(0, parent_dir)

from opinion_defense.main import main  # noqa: E402

if __name__ == "__main__":
    raise SystemExit(main())
