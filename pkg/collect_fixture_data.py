"""
Fixture Data Collection Script
Writes the constructed eleven-municipality dataset to disk for the CLI
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.fixture import write_fixture


def main(argv=None):
    parser = argparse.ArgumentParser(description="Write the fixture dataset")
    parser.add_argument("--out", default="datasets/fixture", help="Target directory")
    args = parser.parse_args(argv)

    print("\n" + "=" * 70)
    print("  FIXTURE DATA COLLECTION")
    print("=" * 70 + "\n")

    paths = write_fixture(args.out)
    for kind, path in paths.items():
        print(f"✓ {kind:<11} {path}")

    print("\nNext:")
    print(f"  python main.py derive --builtup {paths['builtup']} --zones {paths['zones']} "
          f"--dem {paths['dem']} --profiles {paths['profiles']} --out {args.out}/derived.csv")
    print(f"  python main.py generate --records {paths['records']} "
          f"--shorelines {paths['shorelines']} --derived {args.out}/derived.csv "
          f"--serving-subset @{paths['dinner']} --out output")
    return 0


if __name__ == "__main__":
    sys.exit(main())
