"""
Fixture Dataset
Constructed measurements for eleven northern-shore municipalities. The numbers
are invented to respect the orderings reported for the real tableware (most
perforations in Balatonkenese, shortest mug in Vonyarcvashegy, no cuts, no
hardened shoreline and almost no built-up area in Aszófő, Balatonfüred's jug
shorter but more concreted than Badacsonytomaj's); they are not survey data.
"""

import math
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from src.encoder import MunicipalityRecord
from src.geodata import (Polygon2D, Polyline2D, RasterGrid, features_to_geojson,
                         format_ascii_grid)

# name, reedbed m, cuts, avg cut distance m, coastline m, artificial m,
# built-up fraction, slope %, reconstructed, shoreline extent (m, m)
FIXTURE_ROWS = [
    ("Vonyarcvashegy", 2010.0, 4, 380.0, 6400.0, 3300.0, 0.21, 5.0, False, (4000.0, 1400.0)),
    ("Balatongyörök", 3200.0, 6, 420.0, 5200.0, 1500.0, 0.12, 17.0, False, (3600.0, 1200.0)),
    ("Badacsonytomaj", 6150.0, 12, 410.0, 6150.0, 1845.0, 0.09, 25.0, False, (4200.0, 1600.0)),
    ("Ábrahámhegy", 2900.0, 5, 450.0, 4300.0, 900.0, 0.07, 14.0, False, (3000.0, 900.0)),
    ("Balatonszepezd", 3600.0, 3, 900.0, 4800.0, 600.0, 0.05, 9.0, False, (3400.0, 1000.0)),
    ("Zánka", 4100.0, 9, 380.0, 5600.0, 2000.0, 0.11, 7.0, False, (3900.0, 1300.0)),
    ("Balatonakali", 3300.0, 7, 390.0, 5100.0, 1400.0, 0.08, 10.0, False, (3500.0, 1100.0)),
    ("Aszófő", 2300.0, 0, 0.0, 2600.0, 0.0, 0.004, 1.5, True, (1800.0, 600.0)),
    ("Tihany", 5200.0, 10, 420.0, 11800.0, 3900.0, 0.14, 19.0, False, (6500.0, 5200.0)),
    ("Balatonfüred", 2040.0, 8, 230.0, 6120.0, 3366.0, 0.24, 12.0, True, (4300.0, 1500.0)),
    ("Balatonkenese", 5400.0, 18, 270.0, 8900.0, 4600.0, 0.17, 6.0, False, (5200.0, 1800.0)),
]

# the eight municipalities whose plates were on the dinner table
DINNER_SUBSET = ["Vonyarcvashegy", "Badacsonytomaj", "Ábrahámhegy", "Balatonszepezd",
                 "Aszófő", "Tihany", "Balatonfüred", "Balatonkenese"]

ORIGIN_X = 530000.0
ORIGIN_Y = 160000.0
BAND_SPACING = 9000.0
CELL_SIZE = 10.0
BAND_CELLS = 10
DEM_ROWS = 20
WATER_LEVEL = 104.5


def shoreline(index: int, extent, vertices: int = 41) -> Polyline2D:
    """Deterministic wavy shoreline spanning `extent` metres"""
    width, height = extent
    t = np.linspace(0.0, 1.0, vertices)
    x = ORIGIN_X + index * BAND_SPACING + width * t
    y = ORIGIN_Y + height * (0.5 + 0.5 * np.sin(2 * math.pi * (1.5 * t + 0.1 * index)))
    y = y - (y.min() - ORIGIN_Y)
    return Polyline2D(np.column_stack([x, y]))


def fixture_records() -> List[MunicipalityRecord]:
    records = []
    for index, (name, reed, cuts, dist, coast, artificial, builtup, slope,
                reconstructed, extent) in enumerate(FIXTURE_ROWS):
        records.append(MunicipalityRecord(
            name=name, reedbed_length=reed, reedbed_cuts=cuts, avg_cut_distance=dist,
            coastline_length=coast, artificial_shoreline=artificial,
            builtup_fraction=builtup, slope=slope, shoreline=shoreline(index, extent),
            reconstructed=reconstructed))
    return records


def zone(index: int) -> Polygon2D:
    """Square zone covering one band of BAND_CELLS x BAND_CELLS built-up cells"""
    x0 = index * BAND_CELLS * CELL_SIZE
    side = BAND_CELLS * CELL_SIZE
    return Polygon2D([(x0, 0), (x0 + side, 0), (x0 + side, side), (x0, side)])


def builtup_grid(fractions: Sequence[float]) -> RasterGrid:
    """
    One 10 x 10 band per municipality whose cell scores average exactly to
    the fraction (fraction x 10000 must be a whole number)
    """
    cells = BAND_CELLS * BAND_CELLS
    values = np.zeros((BAND_CELLS, BAND_CELLS * len(fractions)))
    for index, fraction in enumerate(fractions):
        total = int(round(fraction * cells * 100))
        band = np.zeros(cells)
        full, rest = divmod(total, 100)
        band[:full] = 100.0
        if rest:
            band[full] = float(rest)
        values[:, index * BAND_CELLS:(index + 1) * BAND_CELLS] = band.reshape(BAND_CELLS, BAND_CELLS)
    return RasterGrid(ncols=values.shape[1], nrows=BAND_CELLS, cell_size=CELL_SIZE,
                      origin_x=0.0, origin_y=0.0, values=values, quantity="builtup")


def dem_grid(slopes: Sequence[float]) -> RasterGrid:
    """One band per municipality rising northward from the water at its slope"""
    ys = (np.arange(DEM_ROWS) + 0.5) * CELL_SIZE
    values = np.zeros((DEM_ROWS, BAND_CELLS * len(slopes)))
    for index, slope in enumerate(slopes):
        values[:, index * BAND_CELLS:(index + 1) * BAND_CELLS] = \
            (WATER_LEVEL + slope / 100.0 * ys)[:, None]
    return RasterGrid(ncols=values.shape[1], nrows=DEM_ROWS, cell_size=CELL_SIZE,
                      origin_x=0.0, origin_y=0.0, values=values)


def profile_endpoints(index: int):
    """South-north segment between the outer cell centres of a band"""
    x = (index * BAND_CELLS + BAND_CELLS // 2 + 0.5) * CELL_SIZE
    return (x, 0.5 * CELL_SIZE), (x, (DEM_ROWS - 0.5) * CELL_SIZE)


def write_fixture(directory) -> Dict[str, Path]:
    """Write records, shorelines, rasters, zones and profile lines; return their paths"""
    from src.records import records_to_frame

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = fixture_records()
    names = [r.name for r in records]

    paths = {
        "records": directory / "records.csv",
        "shorelines": directory / "shorelines.geojson",
        "builtup": directory / "builtup.asc",
        "dem": directory / "dem.asc",
        "zones": directory / "zones.geojson",
        "profiles": directory / "profiles.csv",
        "dinner": directory / "dinner.txt",
    }
    records_to_frame(records).to_csv(paths["records"], index=False, encoding="utf-8")
    paths["shorelines"].write_text(
        features_to_geojson([(r.name, r.shoreline, {}) for r in records]), encoding="utf-8")
    paths["builtup"].write_text(
        format_ascii_grid(builtup_grid([r.builtup_fraction for r in records])), encoding="utf-8")
    paths["dem"].write_text(format_ascii_grid(dem_grid([r.slope for r in records])),
                            encoding="utf-8")
    paths["zones"].write_text(
        features_to_geojson([(name, zone(i), {}) for i, name in enumerate(names)]),
        encoding="utf-8")

    lines = ["name,ax,ay,bx,by"]
    for index, name in enumerate(names):
        (ax, ay), (bx, by) = profile_endpoints(index)
        lines.append(f"{name},{ax!r},{ay!r},{bx!r},{by!r}")
    paths["profiles"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths["dinner"].write_text("\n".join(DINNER_SUBSET) + "\n", encoding="utf-8")
    return paths
