#!/usr/bin/env python3
"""
Balaton Tableware - Main Entry Point
Compiles Lake Balaton shore data into fabrication-ready tableware
"""

import os
import sys

# Add src to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def main():
    """Main application entry point"""
    from src.cli import main as cli_main

    sys.exit(cli_main())


if __name__ == "__main__":
    main()
