"""
Command Line Interface
derive / generate / validate / report subcommands with a stable exit-code contract
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src import __version__
from src.config import CONFIG_ENV_VAR, Config
from src.errors import ConfigError, InputError, TablewareError
from src.pipeline import (EXIT_FAILED, EXIT_INPUT_ERROR, run_derive, run_generate,
                          run_report, run_validate)
from src.records import load_records

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: str = "INFO", log_file: str = "", verbose: bool = False):
    """Console handler on stderr, plus a file handler when log_file is set"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(level=logging.DEBUG if verbose else getattr(logging, str(level).upper(),
                                                                    logging.INFO),
                        format=LOG_FORMAT, handlers=handlers, force=True)


def parse_names(value: Optional[str]) -> Optional[List[str]]:
    """Comma-separated names, or @file with one name per line"""
    if value is None:
        return None
    if value.startswith("@"):
        path = Path(value[1:])
        if not path.exists():
            raise InputError(f"file not found: {path}")
        names = path.read_text(encoding="utf-8").splitlines()
    else:
        names = value.split(",")
    names = [n.strip() for n in names if n.strip()]
    if not names:
        raise InputError(f"empty name list '{value}'")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help=f"TOML or JSON config file (default: ${CONFIG_ENV_VAR}, "
                             "then built-in defaults)")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="balaton-tableware",
        description="Compile Lake Balaton municipality data into tableware geometry")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    derive = sub.add_parser("derive", parents=[common],
                            help="Built-up fraction and slope from rasters")
    derive.add_argument("--builtup", help="ESRI ASCII built-up grid (scores 0-100)")
    derive.add_argument("--zones", help="GeoJSON municipality Polygons")
    derive.add_argument("--dem", help="ESRI ASCII elevation grid")
    derive.add_argument("--profiles", help="CSV of profile lines: name,ax,ay,bx,by")
    derive.add_argument("--lakebed-frame", action="store_true",
                        help="Count only built-up cells inside the lakebed contour")
    derive.add_argument("--lakebed-level", type=float, default=None,
                        help="Lakebed contour level in m (default: config lakebed_level)")
    derive.add_argument("--out", required=True, help="Derived-values CSV to write")
    derive.set_defaults(func=cmd_derive)

    generate = sub.add_parser("generate", parents=[common],
                              help="Meshes, outlines, manifest and booklet")
    generate.add_argument("--records", required=True, help="Municipality records CSV")
    generate.add_argument("--shorelines", required=True, help="GeoJSON shoreline LineStrings")
    generate.add_argument("--derived", default=None, help="Derived-values CSV from 'derive'")
    generate.add_argument("--out", required=True, help="Output directory")
    generate.add_argument("--only", default=None,
                          help="Comma-separated municipality names (or @file)")
    generate.add_argument("--jobs", type=int, default=1, help="Parallel municipalities (default: 1)")
    generate.add_argument("--serving-subset", default=None,
                          help="Names averaged by the serving plate (default: all generated)")
    generate.add_argument("--obj", action="store_true", help="Also write OBJ debug meshes")
    generate.set_defaults(func=cmd_generate)

    validate = sub.add_parser("validate", parents=[common],
                              help="Re-check an output tree against its manifest")
    validate.add_argument("--out", required=True, help="Output directory")
    validate.set_defaults(func=cmd_validate)

    report = sub.add_parser("report", parents=[common], help="Re-render the booklet")
    report.add_argument("--out", required=True, help="Output directory")
    report.set_defaults(func=cmd_report)
    return parser


def cmd_derive(args, config: Config) -> int:
    result = run_derive(config, args.out, builtup_path=args.builtup, zones_path=args.zones,
                        dem_path=args.dem, profiles_path=args.profiles,
                        use_lakebed=args.lakebed_frame, lakebed_level=args.lakebed_level)
    print(f"✓ Derived values for {len(result.table)} municipalities written to {args.out}")
    for name, error in result.failures:
        print(f"✗ {name}: {error}")
    return result.exit_code


def cmd_generate(args, config: Config) -> int:
    loaded = load_records(args.records, args.shorelines, args.derived)
    result = run_generate(loaded, config, args.out, only=parse_names(args.only),
                          serving_subset=parse_names(args.serving_subset),
                          jobs=args.jobs, obj=args.obj)
    for name in result.generated:
        print(f"✓ {name}")
    for name, error in result.failures:
        print(f"✗ {name}: {error}")
    print(f"{len(result.generated)} set(s) generated, {len(result.failures)} failed "
          f"-> {result.out_dir}")
    return result.exit_code


def cmd_validate(args, config: Config) -> int:
    result = run_validate(args.out)
    for problem in result.problems:
        print(f"✗ {problem}")
    if result.problems:
        print(f"✗ Validation failed: {len(result.problems)} problem(s) "
              f"in {result.checked} mesh file(s)")
    else:
        print(f"✓ All {result.checked} mesh file(s) valid")
    return result.exit_code


def cmd_report(args, config: Config) -> int:
    run_report(args.out)
    print(f"✓ Booklet written to {Path(args.out) / 'booklet.md'}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = Config.from_environment(args.config)
        setup_logging(config.get("log_level"), config.get("log_file"), args.verbose)
        return args.func(args, config)
    except (InputError, ConfigError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except TablewareError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
