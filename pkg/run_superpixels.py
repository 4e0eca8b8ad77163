"""
Startup script for the superpixel CLI
Run this script to segment an image or benchmark a dataset
"""

import os
import sys

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from superpixels.cli import main

if __name__ == "__main__":
    sys.exit(main())
