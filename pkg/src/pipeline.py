"""
Pipeline Module
The derive, generate, validate and report runs behind the command line
"""

import logging
import os
import re
import tempfile
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src import __version__
from src.config import Config, EncoderConfig
from src.encoder import (MunicipalityRecord, VesselSet, encode_serving_plate,
                         encode_vessel_set, find_records)
from src.errors import GeometryError, InputError, MeshError, TablewareError
from src.geodata import (Polygon2D, RasterGrid, builtup_fraction, extract_contour,
                         extract_profile, parse_ascii_grid, read_geojson_features,
                         slope_percent)
from src.mesh_export import export_obj, export_stl, read_stl
from src.records import DERIVED_COLUMNS, LoadedRecords, select_names
from src.report import build_manifest, dumps, loads, render_booklet
from src.vessels import VesselMeshes, build_serving_meshes, build_vessel_meshes
from utils.mesh_metrics import MeshStats, mesh_stats

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT_ERROR = 2

MANIFEST_FILE = "manifest.json"
BOOKLET_FILE = "booklet.md"
SERVING_DIR = "serving_plate"
CONCRETE_TOLERANCE = 0.01
VOLUME_TOLERANCE = 1e-3


def slugify(name: str) -> str:
    """ASCII directory name for a municipality: 'Aszófő' -> 'aszofo'"""
    ascii_name = unicodedata.normalize("NFKD", name).encode("ascii", "ignore").decode("ascii")
    slug = re.sub(r"[^a-z0-9]+", "-", ascii_name.lower()).strip("-")
    if not slug:
        raise InputError(f"cannot derive a directory name from '{name}'")
    return slug


def write_atomic(path: Union[str, Path], data: Union[bytes, str]):
    """Write via a temporary file in the same directory and rename into place"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    return path.read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# derive
# ---------------------------------------------------------------------------

@dataclass
class DeriveResult:
    table: pd.DataFrame
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_FAILED if self.failures else EXIT_OK


def lakebed_frame(dem: RasterGrid, level: float) -> Optional[List[Polygon2D]]:
    """Polygons of the DEM below `level`; None when the whole grid lies below it"""
    valid = dem.values[dem.valid_mask]
    if valid.size and level > valid.max():
        return None
    polygons = extract_contour(dem, level, enclose="below")
    if not polygons:
        raise GeometryError(f"no lakebed below {level} m in the elevation grid")
    logger.info("✓ Lakebed frame: %d polygon(s) below %s m", len(polygons), level)
    return polygons


def read_profile_lines(path) -> Dict[str, Tuple[Tuple[float, float], Tuple[float, float]]]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        table = pd.read_csv(path, encoding="utf-8", dtype={"name": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"{path}: {e}") from e
    missing = [c for c in ("name", "ax", "ay", "bx", "by") if c not in table.columns]
    if missing:
        raise InputError(f"{path}: missing column(s): {', '.join(missing)}")
    lines = {}
    for row in table.itertuples(index=False):
        try:
            lines[str(row.name).strip()] = ((float(row.ax), float(row.ay)),
                                            (float(row.bx), float(row.by)))
        except ValueError as e:
            raise InputError(f"{path}: profile '{row.name}': {e}") from e
    return lines


def run_derive(config: Config, out_path, builtup_path=None, zones_path=None,
               dem_path=None, profiles_path=None, use_lakebed: bool = False,
               lakebed_level: Optional[float] = None) -> DeriveResult:
    """
    Built-up fraction per zone and slope per profile line, written as a CSV
    that load_records can merge by name

    Every input is parsed before anything is written.
    """
    if (builtup_path is None) != (zones_path is None):
        raise InputError("--builtup and --zones go together")
    if profiles_path is not None and dem_path is None:
        raise InputError("--profiles needs --dem")
    if builtup_path is None and profiles_path is None:
        raise InputError("nothing to derive: give --builtup/--zones and/or --dem/--profiles")
    if use_lakebed and dem_path is None:
        raise InputError("--lakebed-frame needs --dem")

    builtup = zones = dem = profiles = None
    if builtup_path is not None:
        builtup = parse_ascii_grid(_read_text(builtup_path), "builtup", str(builtup_path))
        zones = [(name, geom) for name, geom, _ in
                 read_geojson_features(_read_text(zones_path), str(zones_path))
                 if isinstance(geom, Polygon2D)]
    if dem_path is not None:
        dem = parse_ascii_grid(_read_text(dem_path), "elevation", str(dem_path))
    if profiles_path is not None:
        profiles = read_profile_lines(profiles_path)

    frame = None
    if use_lakebed:
        level = lakebed_level if lakebed_level is not None else config.get("lakebed_level")
        frame = lakebed_frame(dem, float(level))

    rows: Dict[str, dict] = {}
    failures: List[Tuple[str, str]] = []
    for name, polygon in zones or []:
        row = rows.setdefault(name, {"name": name})
        try:
            result = builtup_fraction(builtup, polygon, frame=frame)
            row["builtup_fraction"] = result.fraction
            row["builtup_cells"] = result.cell_count
        except GeometryError as e:
            logger.warning("✗ %s: built-up fraction: %s", name, e)
            failures.append((name, f"built-up fraction: {e}"))

    samples = int(config.get("profile_samples"))
    for name, (a, b) in (profiles or {}).items():
        row = rows.setdefault(name, {"name": name})
        try:
            row["slope_percent"] = slope_percent(extract_profile(dem, a, b, samples))
        except GeometryError as e:
            logger.warning("✗ %s: slope: %s", name, e)
            failures.append((name, f"slope: {e}"))

    table = pd.DataFrame(list(rows.values()), columns=DERIVED_COLUMNS)
    table["builtup_cells"] = table["builtup_cells"].astype("Int64")
    write_atomic(out_path, table.to_csv(index=False))
    logger.info("✓ Derived values for %d municipalities written to %s", len(table), out_path)
    return DeriveResult(table=table, failures=failures)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

@dataclass
class MunicipalityResult:
    vessel_set: VesselSet
    meshes: VesselMeshes
    stats: Dict[str, MeshStats]


@dataclass
class GenerateResult:
    out_dir: Path
    generated: List[str] = field(default_factory=list)
    failures: List[Tuple[str, str]] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_FAILED if self.failures else EXIT_OK


def process_municipality(record: MunicipalityRecord, config: EncoderConfig) -> MunicipalityResult:
    """Encode, mesh and diagnose one municipality's set"""
    vessel_set = encode_vessel_set(record, config)
    meshes = build_vessel_meshes(vessel_set, config)
    stats = {name: mesh_stats(mesh) for name, mesh in meshes.meshes.items()}
    for name, s in stats.items():
        if not s.watertight or s.signed_volume_mm3 <= 0:
            raise MeshError(f"{name} mesh is not a closed positive solid")
    return MunicipalityResult(vessel_set=vessel_set, meshes=meshes, stats=stats)


def _write_meshes(out_dir: Path, directory: str, meshes: VesselMeshes, obj: bool) -> Dict[str, str]:
    files = {}
    for key, mesh in meshes.meshes.items():
        rel = f"{directory}/{key}.stl"
        write_atomic(out_dir / rel, export_stl(mesh))
        files[key] = rel
        if obj:
            write_atomic(out_dir / f"{directory}/{key}.obj", export_obj(mesh, key))
    for key, text in meshes.outlines.items():
        rel = f"{directory}/{key}.svg"
        write_atomic(out_dir / rel, text)
        files[key] = rel
    return files


def run_generate(loaded: LoadedRecords, config: Config, out_dir,
                 only: Optional[Sequence[str]] = None,
                 serving_subset: Optional[Sequence[str]] = None,
                 jobs: int = 1, obj: bool = False) -> GenerateResult:
    """
    Generate every selected municipality's set, the serving plate, the
    manifest and the booklet

    A municipality that fails is reported and skipped; the others still run.
    """
    encoder_config = EncoderConfig.from_config(config)
    out_dir = Path(out_dir)
    selected = select_names(loaded.names, only)
    serving_names = select_names(loaded.names, serving_subset)
    if jobs < 1:
        raise InputError("--jobs must be >= 1")

    records = [r for r in loaded.records if selected is None or r.name in selected]
    failures = [(n, e) for n, e in loaded.failures if selected is None or n in selected]

    slugs = [slugify(r.name) for r in records]
    if len(set(slugs)) != len(slugs) or SERVING_DIR in slugs:
        raise InputError("municipality names collide after conversion to directory names")

    def process(record):
        try:
            return process_municipality(record, encoder_config), None
        except TablewareError as e:
            return None, str(e)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = list(pool.map(process, records))

    result = GenerateResult(out_dir=out_dir)
    done_records, sets, stats, files, volumes = [], [], [], [], []
    for record, slug, (outcome, error) in zip(records, slugs, outcomes):
        if outcome is None:
            logger.warning("✗ %s: %s", record.name, error)
            failures.append((record.name, error))
            continue
        files.append(_write_meshes(out_dir, slug, outcome.meshes, obj))
        done_records.append(record)
        sets.append(outcome.vessel_set)
        stats.append(outcome.stats)
        volumes.append(outcome.meshes.volumes)
        result.generated.append(record.name)
        logger.info("✓ %s: %d files", record.name, len(files[-1]))

    serving = None
    if serving_names is None:
        members = done_records
    else:
        loaded_names = {r.name for r in loaded.records}
        members = find_records(loaded.records, [n for n in serving_names if n in loaded_names])
        skipped = [n for n in serving_names if n not in loaded_names]
        if skipped:
            logger.warning("Serving plate skips failed record(s): %s", ", ".join(skipped))
    try:
        spec = encode_serving_plate(members, encoder_config)
        serving_meshes = build_serving_meshes(spec, encoder_config)
        serving_stats = {k: mesh_stats(m) for k, m in serving_meshes.meshes.items()}
        serving_files = _write_meshes(out_dir, SERVING_DIR, serving_meshes, obj)
        serving = (spec, serving_stats, serving_files, serving_meshes.volumes)
        logger.info("✓ Serving plate: %.2f° over %d municipalities",
                    spec.segment_angle, len(members))
    except TablewareError as e:
        logger.warning("✗ serving plate: %s", e)
        failures.append((SERVING_DIR, str(e)))

    manifest = build_manifest(done_records, sets, stats, config=encoder_config,
                              config_snapshot=config.snapshot(), files=files,
                              volumes=volumes, serving=serving, failures=failures,
                              version=__version__)
    write_atomic(out_dir / MANIFEST_FILE, dumps(manifest))
    write_atomic(out_dir / BOOKLET_FILE, render_booklet(manifest))

    result.failures = failures
    result.manifest = manifest
    return result


# ---------------------------------------------------------------------------
# validate / report
# ---------------------------------------------------------------------------

@dataclass
class ValidationResult:
    checked: int = 0
    problems: List[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_FAILED if self.problems else EXIT_OK


def read_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_FILE
    if not path.exists():
        raise InputError(f"no {MANIFEST_FILE} in {out_dir}")
    return loads(path.read_text(encoding="utf-8"))


def _relative_error(actual: float, expected: float) -> float:
    if expected == 0:
        return abs(actual)
    return abs(actual / expected - 1.0)


class _Validator:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.result = ValidationResult()
        self.volumes: Dict[str, float] = {}

    def problem(self, message: str):
        logger.warning("✗ %s", message)
        self.result.problems.append(message)

    def check_mesh(self, entry: dict, expected_genus: int) -> Optional[float]:
        """Re-read one STL; return its volume, or None when unreadable"""
        path = entry.get("file")
        if not path:
            self.problem("mesh entry without a file")
            return None
        self.result.checked += 1
        target = self.out_dir / path
        if not target.exists():
            self.problem(f"{path}: missing")
            return None
        try:
            mesh = read_stl(target.read_bytes(), source=path)
        except TablewareError as e:
            self.problem(str(e))
            return None
        stats = mesh_stats(mesh)
        if not stats.watertight:
            self.problem(f"{path}: not watertight")
        elif stats.genus != expected_genus:
            self.problem(f"{path}: genus {stats.genus}, expected {expected_genus}")
        if stats.signed_volume_mm3 <= 0:
            self.problem(f"{path}: nonpositive volume")
        recorded = entry.get("signed_volume_mm3")
        if recorded is not None and _relative_error(stats.signed_volume_mm3, recorded) > VOLUME_TOLERANCE:
            self.problem(f"{path}: volume {stats.signed_volume_mm3:.6g} mm3 differs from "
                         f"manifest {recorded:.6g} mm3")
        return stats.signed_volume_mm3

    def check_ratio(self, label: str, concrete: Optional[float], reference: Optional[float],
                    expected: float):
        if concrete is None or not reference:
            self.problem(f"{label}: cannot check concrete ratio")
            return
        ratio = concrete / reference
        if _relative_error(ratio, expected) > CONCRETE_TOLERANCE:
            self.problem(f"{label}: concrete ratio {ratio:.4f} does not match "
                         f"manifest fraction {expected:.4f}")

    def check_segment(self, label: str, meshes: dict, volumes: dict,
                      concrete_key: str, recess_key: str, angle: float, present: bool):
        has_mesh = concrete_key in meshes
        if present != has_mesh:
            self.problem(f"{label}: concrete {'missing' if present else 'unexpected'}")
            return
        if present:
            vol = self.check_mesh(meshes[concrete_key], 0)
            self.check_ratio(label, vol, volumes.get(recess_key), angle / 360.0)


def run_validate(out_dir) -> ValidationResult:
    """Re-check every listed STL against the manifest"""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    validator = _Validator(out_dir)

    for entry in manifest["municipalities"]:
        name = entry["name"]
        vessels = entry["vessels"]
        volumes = entry.get("volumes_mm3", {})

        mug = vessels["mug"]
        validator.check_mesh(mug["meshes"]["mug"], mug["spec"]["perforation_count"])

        jug = vessels["jug"]
        validator.check_mesh(jug["meshes"]["jug"], 0)
        fraction = jug["spec"]["concrete_fraction"]
        has_insert = "jug_concrete" in jug["meshes"]
        if (fraction > 0) != has_insert:
            validator.problem(f"{name} jug: concrete {'missing' if fraction > 0 else 'unexpected'}")
        elif has_insert:
            vol = validator.check_mesh(jug["meshes"]["jug_concrete"], 0)
            validator.check_ratio(f"{name} jug", vol, volumes.get("jug_cavity_mm3"), fraction)

        for key in ("deep_plate_uncut", "deep_plate"):
            validator.check_mesh(vessels["deep_plate"]["meshes"][key], 0)

        small = vessels["small_plate"]
        validator.check_mesh(small["meshes"]["small_plate"], 0)
        validator.check_segment(f"{name} small plate", small["meshes"], volumes,
                                "small_plate_concrete", "small_plate_recess_mm3",
                                small["spec"]["segment_angle"], not small["spec"]["suppressed"])

        validator.check_mesh(vessels["flat_plate"]["meshes"]["flat_plate"], 0)
        for path in vessels["flat_plate"]["files"]:
            if path.endswith(".svg") and not (out_dir / path).exists():
                validator.problem(f"{path}: missing")

    serving = manifest.get("serving_plate")
    if serving is not None:
        spec = serving["spec"]
        validator.check_mesh(serving["meshes"]["serving_plate"], 0)
        validator.check_segment("serving plate", serving["meshes"],
                                serving.get("volumes_mm3", {}), "serving_plate_concrete",
                                "serving_plate_recess_mm3", spec["segment_angle"],
                                not spec["suppressed"])

    result = validator.result
    logger.info("Validated %d mesh file(s), %d problem(s)", result.checked, len(result.problems))
    return result


def run_report(out_dir) -> str:
    """Re-render the booklet from an existing manifest"""
    out_dir = Path(out_dir)
    booklet = render_booklet(read_manifest(out_dir))
    write_atomic(out_dir / BOOKLET_FILE, booklet)
    return booklet
