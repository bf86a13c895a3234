"""
Records Module
Loads MunicipalityRecords from the records CSV, the shoreline GeoJSON and an
optional derived-values CSV
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.encoder import MunicipalityRecord
from src.errors import InputError, TablewareError
from src.geodata import Polyline2D, read_geojson_features

logger = logging.getLogger(__name__)

# CSV column -> MunicipalityRecord field
RECORD_COLUMNS: Dict[str, str] = {
    "name": "name",
    "reedbed_length_m": "reedbed_length",
    "reedbed_cuts": "reedbed_cuts",
    "avg_cut_distance_m": "avg_cut_distance",
    "coastline_length_m": "coastline_length",
    "artificial_shoreline_m": "artificial_shoreline",
    "builtup_fraction": "builtup_fraction",
    "slope_percent": "slope",
    "reconstructed": "reconstructed",
}
OPTIONAL_COLUMNS = ("avg_cut_distance_m", "reconstructed")
DERIVED_COLUMNS = ["name", "builtup_fraction", "builtup_cells", "slope_percent"]


@dataclass
class LoadedRecords:
    """Valid records in file order plus (name, reason) for rows that failed"""

    records: List[MunicipalityRecord] = field(default_factory=list)
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def names(self) -> List[str]:
        return [r.name for r in self.records] + [name for name, _ in self.failures]


def _read_csv(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        return pd.read_csv(path, encoding="utf-8", dtype={"name": str},
                           keep_default_na=False, na_values=[""])
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputError(f"{path}: {e}") from e


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        return value.strip().lower() in ("true", "1", "yes", "y")
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return False
    return bool(value)


def read_records_table(path) -> pd.DataFrame:
    """Records CSV with every required column present and names unique"""
    table = _read_csv(path)
    missing = [c for c in RECORD_COLUMNS if c not in table.columns and c not in OPTIONAL_COLUMNS]
    if missing:
        raise InputError(f"{path}: missing column(s): {', '.join(missing)}")
    if "avg_cut_distance_m" not in table.columns:
        table["avg_cut_distance_m"] = 0.0
    if "reconstructed" not in table.columns:
        table["reconstructed"] = False

    table["name"] = table["name"].fillna("").astype(str).str.strip()
    duplicated = table.loc[table["name"].duplicated() & (table["name"] != ""), "name"]
    if len(duplicated):
        raise InputError(f"{path}: duplicate municipality name(s): "
                         f"{', '.join(sorted(set(duplicated)))}")

    numeric = [c for c in RECORD_COLUMNS if c not in ("name", "reconstructed")]
    for column in numeric:
        table[column] = pd.to_numeric(table[column], errors="coerce")
    table["reconstructed"] = table["reconstructed"].map(_as_bool)
    return table


def read_shorelines(path) -> Dict[str, Polyline2D]:
    """Named LineString features from a GeoJSON FeatureCollection"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    shorelines = {}
    for name, geometry, _ in read_geojson_features(path.read_text(encoding="utf-8"),
                                                   source=str(path)):
        if isinstance(geometry, Polyline2D):
            shorelines[name] = geometry
    return shorelines


def read_derived(path) -> pd.DataFrame:
    table = _read_csv(path)
    if "name" not in table.columns:
        raise InputError(f"{path}: missing column(s): name")
    for column in ("builtup_fraction", "slope_percent"):
        if column not in table.columns:
            table[column] = float("nan")
        table[column] = pd.to_numeric(table[column], errors="coerce")
    table["name"] = table["name"].astype(str).str.strip()
    return table[["name", "builtup_fraction", "slope_percent"]]


def merge_derived(table: pd.DataFrame, derived: pd.DataFrame) -> pd.DataFrame:
    """Derived built-up fraction and slope replace the CSV values where present"""
    merged = table.merge(derived, on="name", how="left", suffixes=("", "_derived"))
    for column in ("builtup_fraction", "slope_percent"):
        override = merged[f"{column}_derived"]
        replaced = int(override.notna().sum())
        merged[column] = override.where(override.notna(), merged[column])
        merged = merged.drop(columns=f"{column}_derived")
        logger.info("Derived %s applied to %d record(s)", column, replaced)
    return merged


def _row_to_record(row: pd.Series, shorelines: Dict[str, Polyline2D]) -> MunicipalityRecord:
    name = row["name"]
    if not name:
        raise TablewareError("name is empty")
    values = {}
    for column, attr in RECORD_COLUMNS.items():
        if column in ("name", "reconstructed"):
            continue
        value = row[column]
        if pd.isna(value):
            if column == "avg_cut_distance_m":
                value = 0.0
            else:
                raise TablewareError(f"{column} is missing or not a number")
        values[attr] = float(value)
    cuts = values["reedbed_cuts"]
    if cuts != int(cuts):
        raise TablewareError("reedbed_cuts must be a non-negative integer")
    values["reedbed_cuts"] = int(cuts)
    if name not in shorelines:
        raise TablewareError("no shoreline feature with this name")
    return MunicipalityRecord(name=name, shoreline=shorelines[name],
                              reconstructed=bool(row["reconstructed"]), **values)


def load_records(records_path, shorelines_path, derived_path=None) -> LoadedRecords:
    """
    Build one MunicipalityRecord per CSV row

    File-level problems raise InputError; a row that violates a record
    invariant is reported in `failures` and the other rows still load.
    """
    table = read_records_table(records_path)
    shorelines = read_shorelines(shorelines_path)
    if derived_path is not None:
        table = merge_derived(table, read_derived(derived_path))

    loaded = LoadedRecords()
    for index, row in table.iterrows():
        name = row["name"] or f"<row {index + 2}>"
        try:
            loaded.records.append(_row_to_record(row, shorelines))
        except TablewareError as e:
            message = str(e)
            if message.startswith(f"{name}: "):
                message = message[len(name) + 2:]
            logger.warning("✗ %s: %s", name, message)
            loaded.failures.append((name, message))
    logger.info("✓ Loaded %d record(s), %d failed", len(loaded.records), len(loaded.failures))
    return loaded


def records_to_frame(records: Sequence[MunicipalityRecord]) -> pd.DataFrame:
    """Inverse of load_records for the CSV columns"""
    rows = []
    for record in records:
        rows.append({column: getattr(record, attr) for column, attr in RECORD_COLUMNS.items()})
    return pd.DataFrame(rows, columns=list(RECORD_COLUMNS))


def select_names(available: Sequence[str], names: Optional[Sequence[str]]) -> Optional[List[str]]:
    """Validate a user name selection against the input, None meaning all"""
    if names is None:
        return None
    missing = [n for n in names if n not in available]
    if missing:
        raise InputError(f"unknown municipality name(s): {', '.join(missing)}")
    return list(names)
