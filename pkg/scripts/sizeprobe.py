#!/usr/bin/env python3
"""
sizeprobe entry point

Usage:
    python3 scripts/sizeprobe.py run --config config/campaign.example.json
    python3 scripts/sizeprobe.py verify sizeprobe-work/campaign/reports
    python3 scripts/sizeprobe.py catalog
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from cli import main

if __name__ == "__main__":
    sys.exit(main())
