"""
Geodata Module
ESRI ASCII grids, GeoJSON shorelines/zones and the raster-derived quantities
the encoder consumes: built-up fraction, slope, lakebed contour, scaled outline
"""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import shapely
from scipy import stats
from shapely.geometry import LineString, Polygon, shape

from src.errors import GeodataParseError, GeometryError

logger = logging.getLogger(__name__)

DEFAULT_CELL_SIZE = 10.0
_TOKEN = re.compile(r"\S+")


def _frozen_array(values, shape_=None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if shape_ is not None:
        arr = arr.reshape(shape_)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """Regular grid; values[row, col] with row 0 at the bottom"""

    ncols: int
    nrows: int
    cell_size: float
    origin_x: float
    origin_y: float
    values: np.ndarray
    nodata: Optional[float] = None
    quantity: str = "elevation"  # or "builtup"

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise GeometryError("grid needs ncols >= 1 and nrows >= 1")
        if not self.cell_size > 0:
            raise GeometryError("nonpositive cellsize")
        size = np.asarray(self.values).size
        if size != self.ncols * self.nrows:
            raise GeometryError(
                f"values length {size} != ncols x nrows ({self.ncols * self.nrows})")
        object.__setattr__(self, "values",
                           _frozen_array(self.values, (self.nrows, self.ncols)))
        if self.quantity == "builtup":
            scores = self.values[self.valid_mask]
            if scores.size and (scores.min() < 0 or scores.max() > 100):
                raise GeometryError("built-up values must lie in [0, 100]")

    @property
    def valid_mask(self) -> np.ndarray:
        mask = np.isfinite(self.values)
        if self.nodata is not None:
            mask &= self.values != self.nodata
        return mask

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the cell edges"""
        return (self.origin_x, self.origin_y,
                self.origin_x + self.ncols * self.cell_size,
                self.origin_y + self.nrows * self.cell_size)

    def cell(self, col: int, row: int) -> float:
        """Value at column col, row row counted from the bottom"""
        return float(self.values[row, col])

    def is_nodata(self, col: int, row: int) -> bool:
        return not bool(self.valid_mask[row, col])

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """X and Y arrays of cell centres, shaped like values"""
        xs = self.origin_x + (np.arange(self.ncols) + 0.5) * self.cell_size
        ys = self.origin_y + (np.arange(self.nrows) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)


@dataclass(frozen=True, eq=False)
class Polygon2D:
    """Closed ring; the closing vertex is implicit"""

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        if len(verts) >= 2 and np.array_equal(verts[0], verts[-1]):
            verts = verts[:-1]
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", _frozen_array(verts))
        if self.signed_area == 0:
            raise GeometryError("polygon has zero area")

    @property
    def signed_area(self) -> float:
        ring = self.to_shapely()
        return ring.area if shapely.is_ccw(ring.exterior) else -ring.area

    def to_shapely(self) -> Polygon:
        return Polygon(self.vertices)


@dataclass(frozen=True, eq=False)
class Polyline2D:
    vertices: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        if len(verts) < 2:
            raise GeometryError("polyline needs at least 2 vertices")
        object.__setattr__(self, "vertices", _frozen_array(verts))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())

    def to_shapely(self) -> LineString:
        return LineString(self.vertices)


@dataclass(frozen=True, eq=False)
class ElevationProfile:
    distances: np.ndarray
    elevations: np.ndarray

    def __post_init__(self):
        d = _frozen_array(self.distances)
        z = _frozen_array(self.elevations)
        if d.shape != z.shape or d.ndim != 1:
            raise GeometryError("profile distances and elevations must pair up")
        if len(d) < 2:
            raise GeometryError("profile needs at least 2 samples")
        if d[0] != 0 or np.any(np.diff(d) <= 0):
            raise GeometryError("profile distances must start at 0 and increase strictly")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "elevations", z)

    def reversed(self) -> "ElevationProfile":
        return ElevationProfile(self.distances[-1] - self.distances[::-1],
                                self.elevations[::-1])


@dataclass(frozen=True)
class ZonalResult:
    fraction: float
    cell_count: int


@dataclass(frozen=True, eq=False)
class ScaledOutline:
    """Polyline in mm centred in a frame, with its fit report"""

    outline: Polyline2D
    frame: Tuple[float, float]
    width: float
    height: float
    fits: bool = field(default=True)


# ---------------------------------------------------------------------------
# ESRI ASCII grid
# ---------------------------------------------------------------------------

_REQUIRED_KEYS = ("ncols", "nrows", "cellsize")


def parse_ascii_grid(text: str, quantity: str = "elevation",
                     source: Optional[str] = None) -> RasterGrid:
    """
    Parse an ESRI ASCII grid

    Header keys are case-insensitive; the first data line is the top row.
    Values are stored bottom row first.
    """
    lines = text.splitlines()
    header: Dict[str, Tuple[str, int]] = {}
    data_start = len(lines)

    for number, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens:
            continue
        if not tokens[0][0].isalpha():
            data_start = number - 1
            break
        if len(tokens) != 2:
            raise GeodataParseError(f"malformed header line '{line.strip()}'",
                                    number, 1, source)
        key = tokens[0].lower()
        known = _REQUIRED_KEYS + ("xllcorner", "yllcorner", "xllcenter",
                                  "yllcenter", "nodata_value")
        if key not in known:
            raise GeodataParseError(f"unknown header key '{tokens[0]}'", number, 1, source)
        header[key] = (tokens[1], number)

    header_end = data_start + 1
    for key in _REQUIRED_KEYS:
        if key not in header:
            raise GeodataParseError(f"missing header key '{key}'", header_end, 1, source)
    for axis in ("x", "y"):
        if f"{axis}llcorner" not in header and f"{axis}llcenter" not in header:
            raise GeodataParseError(f"missing header key '{axis}llcorner'",
                                    header_end, 1, source)

    def header_number(key, kind=float):
        token, number = header[key]
        try:
            return kind(token)
        except ValueError:
            raise GeodataParseError(f"non-numeric header value '{token}' for {key}",
                                    number, len(key) + 2, source) from None

    ncols = header_number("ncols", int)
    nrows = header_number("nrows", int)
    if ncols < 1 or nrows < 1:
        raise GeodataParseError("ncols and nrows must be >= 1", header["ncols"][1], 1, source)
    cell_size = header_number("cellsize")
    if not cell_size > 0:
        raise GeodataParseError("nonpositive cellsize", header["cellsize"][1], 1, source)

    if "xllcorner" in header:
        origin_x = header_number("xllcorner")
    else:
        origin_x = header_number("xllcenter") - cell_size / 2
    if "yllcorner" in header:
        origin_y = header_number("yllcorner")
    else:
        origin_y = header_number("yllcenter") - cell_size / 2
    nodata = header_number("nodata_value") if "nodata_value" in header else None

    values: List[float] = []
    positions: List[Tuple[int, int]] = []
    last_line = header_end
    for number in range(data_start + 1, len(lines) + 1):
        line = lines[number - 1]
        for match in _TOKEN.finditer(line):
            token = match.group()
            try:
                value = float(token)
            except ValueError:
                value = float("nan")
            if not np.isfinite(value):
                raise GeodataParseError(f"non-numeric token '{token}'",
                                        number, match.start() + 1, source)
            values.append(value)
            positions.append((number, match.start() + 1))
            last_line = number

    expected = ncols * nrows
    if len(values) != expected:
        raise GeodataParseError(
            f"value count mismatch: expected {expected} values, found {len(values)}",
            last_line, None, source)

    if quantity == "builtup":
        for value, (number, column) in zip(values, positions):
            if value != nodata and not (0 <= value <= 100):
                raise GeodataParseError(f"built-up value {value} outside [0, 100]",
                                        number, column, source)

    top_first = np.array(values, dtype=np.float64).reshape(nrows, ncols)
    return RasterGrid(ncols=ncols, nrows=nrows, cell_size=cell_size,
                      origin_x=origin_x, origin_y=origin_y,
                      values=top_first[::-1], nodata=nodata, quantity=quantity)


def format_ascii_grid(grid: RasterGrid) -> str:
    """Serialise a grid so that parse_ascii_grid reproduces it exactly"""
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {float(grid.origin_x)!r}",
        f"yllcorner {float(grid.origin_y)!r}",
        f"cellsize {float(grid.cell_size)!r}",
    ]
    if grid.nodata is not None:
        lines.append(f"NODATA_value {float(grid.nodata)!r}")
    for row in grid.values[::-1]:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# GeoJSON
# ---------------------------------------------------------------------------

Geometry2D = Union[Polygon2D, Polyline2D]


def read_geojson_features(text: str, source: Optional[str] = None
                          ) -> List[Tuple[str, Geometry2D, dict]]:
    """Read (name, geometry, properties) triples from a FeatureCollection"""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise GeodataParseError(f"invalid JSON: {e.msg}", e.lineno, e.colno, source) from None

    if not isinstance(document, dict) or document.get("type") != "FeatureCollection":
        raise GeodataParseError("expected a GeoJSON FeatureCollection", source=source)

    features = []
    for index, feature in enumerate(document.get("features", [])):
        geometry = (feature or {}).get("geometry") or {}
        kind = geometry.get("type")
        if kind not in ("Polygon", "LineString"):
            raise GeodataParseError(
                f"unsupported geometry type '{kind}' in feature {index}; "
                "only Polygon and LineString are read", source=source)
        properties = feature.get("properties") or {}
        name = properties.get("name")
        if not name:
            raise GeodataParseError(f"feature {index} has no 'name' property", source=source)
        try:
            geom = shape(geometry)
            if kind == "Polygon":
                if len(geom.interiors):
                    logger.warning("Zone '%s' has holes; only the exterior ring is used", name)
                converted = Polygon2D(np.asarray(geom.exterior.coords)[:, :2])
            else:
                converted = Polyline2D(np.asarray(geom.coords)[:, :2])
        except (GeometryError, ValueError, TypeError) as e:
            raise GeodataParseError(f"feature {index} ('{name}'): {e}", source=source) from None
        features.append((str(name), converted, properties))
    return features


def features_to_geojson(features: Sequence[Tuple[str, Geometry2D, dict]]) -> str:
    """Write (name, geometry, properties) triples as a FeatureCollection"""
    out = []
    for name, geom, properties in features:
        coords = [[float(x), float(y)] for x, y in geom.vertices]
        if isinstance(geom, Polygon2D):
            geometry = {"type": "Polygon", "coordinates": [coords + [coords[0]]]}
        else:
            geometry = {"type": "LineString", "coordinates": coords}
        props = dict(properties)
        props["name"] = name
        out.append({"type": "Feature", "properties": props, "geometry": geometry})
    return json.dumps({"type": "FeatureCollection", "features": out},
                      ensure_ascii=False, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# Marching squares
# ---------------------------------------------------------------------------

# Cell edges in counter-clockwise traversal: (edge id offsets, from corner, to corner).
# Corners are (dr, dc) offsets from the cell's bottom-left node.
_CELL_EDGES = (
    (("h", 0, 0), (0, 0), (0, 1)),  # bottom, bl -> br
    (("v", 0, 1), (0, 1), (1, 1)),  # right,  br -> tr
    (("h", 1, 0), (1, 1), (1, 0)),  # top,    tr -> tl
    (("v", 0, 0), (1, 0), (0, 0)),  # left,   tl -> bl
)


def extract_contour(grid: RasterGrid, level: float,
                    enclose: str = "above") -> List[Polygon2D]:
    """
    Marching-squares iso-contours at `level`

    Samples are cell centres. Rings run counter-clockwise around the enclosed
    side (cells >= level for "above", < level for "below"). Nodata and
    off-grid samples count as outside, and crossings next to them snap to the
    valid centre, so contours leaving the grid close along the outer centres.
    Saddles are resolved by the mean of the four corners.
    """
    if enclose not in ("above", "below"):
        raise GeometryError("enclose must be 'above' or 'below'")
    valid = grid.valid_mask
    if not valid.any():
        raise GeometryError("all cells nodata")
    if grid.ncols < 2 or grid.nrows < 2 or valid.sum() < 4:
        raise GeometryError("contouring needs at least 2x2 valid cells")

    observed = grid.values[valid]
    if level < observed.min() or level > observed.max():
        return []

    sign = 1.0 if enclose == "above" else -1.0
    target = sign * level
    field_ = np.where(valid, sign * grid.values, 0.0)
    inside = valid & (field_ >= target)

    nr, nc = grid.nrows + 2, grid.ncols + 2
    f = np.zeros((nr, nc))
    f[1:-1, 1:-1] = field_
    ok = np.zeros((nr, nc), dtype=bool)
    ok[1:-1, 1:-1] = valid
    high = np.zeros((nr, nc), dtype=bool)
    high[1:-1, 1:-1] = inside

    def node_xy(r, c):
        return (grid.origin_x + (c - 0.5) * grid.cell_size,
                grid.origin_y + (r - 0.5) * grid.cell_size)

    points: Dict[tuple, Tuple[float, float]] = {}

    def crossing(edge_id, a, b):
        if edge_id not in points:
            (ax, ay), (bx, by) = node_xy(*a), node_xy(*b)
            if ok[a] and ok[b]:
                t = (target - f[a]) / (f[b] - f[a])
                points[edge_id] = (ax + t * (bx - ax), ay + t * (by - ay))
            else:
                points[edge_id] = (ax, ay) if ok[a] else (bx, by)
        return points[edge_id]

    case = (high[:-1, :-1] * 1 + high[:-1, 1:] * 2 + high[1:, 1:] * 4 + high[1:, :-1] * 8)
    successor: Dict[tuple, tuple] = {}
    order: List[tuple] = []

    for r, c in zip(*np.nonzero((case != 0) & (case != 15))):
        crossings = []
        for (kind, dr, dc), (fr, fc), (tr, tc) in _CELL_EDGES:
            a, b = (r + fr, c + fc), (r + tr, c + tc)
            if high[a] != high[b]:
                edge_id = (kind, r + dr, c + dc)
                crossing(edge_id, a, b)
                crossings.append((edge_id, "out" if high[a] else "in"))

        if len(crossings) == 2:
            start = next(e for e, label in crossings if label == "out")
            end = next(e for e, label in crossings if label == "in")
            pairs = [(start, end)]
        else:
            corners = [(r, c), (r, c + 1), (r + 1, c + 1), (r + 1, c)]
            center_high = (all(ok[k] for k in corners)
                           and np.mean([f[k] for k in corners]) >= target)
            step = 1 if center_high else -1
            pairs = [(crossings[k][0], crossings[(k + step) % 4][0])
                     for k in range(4) if crossings[k][1] == "out"]

        for start, end in pairs:
            successor[start] = end
            order.append(start)

    polygons = []
    visited = set()
    for start in order:
        if start in visited:
            continue
        ring = []
        edge = start
        while edge not in visited:
            visited.add(edge)
            ring.append(points[edge])
            edge = successor[edge]
        if edge != start:
            raise GeometryError("contour chaining failed")
        ring = _dedupe_ring(ring)
        if len(ring) < 3:
            continue
        try:
            polygons.append(Polygon2D(np.array(ring)))
        except GeometryError:
            continue

    logger.debug("Extracted %d contour ring(s) at level %s", len(polygons), level)
    return polygons


def _dedupe_ring(ring: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out = []
    for point in ring:
        if not out or point != out[-1]:
            out.append(point)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


# ---------------------------------------------------------------------------
# Zonal statistics
# ---------------------------------------------------------------------------

def _zone_geometry(zone: Polygon2D):
    geom = zone.to_shapely()
    if not geom.is_valid:
        raise GeometryError("zone polygon is not simple")
    shapely.prepare(geom)
    return geom


def zone_mask(grid: RasterGrid, zone: Polygon2D,
              frame: Optional[Sequence[Polygon2D]] = None) -> np.ndarray:
    """Valid cells whose centres lie inside or on the boundary of the zone"""
    xs, ys = grid.cell_centers()
    mask = grid.valid_mask & shapely.intersects_xy(_zone_geometry(zone), xs, ys)
    if frame is not None:
        region = shapely.union_all([_zone_geometry(p) for p in frame])
        shapely.prepare(region)
        mask &= shapely.intersects_xy(region, xs, ys)
    return mask


def builtup_fraction(grid: RasterGrid, zone: Polygon2D,
                     frame: Optional[Sequence[Polygon2D]] = None) -> ZonalResult:
    """
    Mean of score/100 over valid cells whose centres fall in the zone

    `frame` optionally restricts the cells further (e.g. to the lakebed).
    """
    scores = grid.values[grid.valid_mask]
    if scores.size and (scores.min() < 0 or scores.max() > 100):
        raise GeometryError("built-up values must lie in [0, 100]")

    mask = zone_mask(grid, zone, frame)
    count = int(mask.sum())
    if count == 0:
        raise GeometryError("empty zone")
    total = float(grid.values[mask].sum())
    return ZonalResult(fraction=total / (100.0 * count), cell_count=count)


# ---------------------------------------------------------------------------
# Profiles and slope
# ---------------------------------------------------------------------------

def _axis_weights(coord: np.ndarray, n: int):
    """Cell pair and fraction; the fraction leaves [0, 1] in the outer half-cells"""
    if n == 1:
        zero = np.zeros(coord.shape, dtype=int)
        return zero, zero, np.zeros_like(coord)
    i0 = np.clip(np.floor(coord).astype(int), 0, n - 2)
    return i0, i0 + 1, coord - i0


def _corner_weights(tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
    return np.stack([(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty])


def extract_profile(grid: RasterGrid, a: Sequence[float], b: Sequence[float],
                    n_samples: int = 256) -> ElevationProfile:
    """Evenly spaced bilinear samples of the grid along segment ab"""
    if n_samples < 2:
        raise GeometryError("n_samples must be >= 2")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.array_equal(a, b):
        raise GeometryError("profile endpoints coincide")
    xmin, ymin, xmax, ymax = grid.extent
    for point in (a, b):
        if not (xmin <= point[0] <= xmax and ymin <= point[1] <= ymax):
            raise GeometryError("segment leaves grid extent")

    t = np.linspace(0.0, 1.0, n_samples)
    pts = a + t[:, None] * (b - a)
    fx = (pts[:, 0] - grid.origin_x) / grid.cell_size - 0.5
    fy = (pts[:, 1] - grid.origin_y) / grid.cell_size - 0.5
    i0, i1, tx = _axis_weights(fx, grid.ncols)
    j0, j1, ty = _axis_weights(fy, grid.nrows)

    corners = [(j0, i0), (j0, i1), (j1, i0), (j1, i1)]
    valid = grid.valid_mask
    vals = np.stack([np.where(valid[j, i], grid.values[j, i], 0.0) for j, i in corners])
    ok = np.stack([valid[j, i] for j, i in corners]).astype(float)

    # outer half-cells extrapolate the edge pair linearly; with a nodata
    # neighbour the weights stay inside the cell and are renormalised
    complete = ok.all(axis=0)
    inner = _corner_weights(np.clip(tx, 0.0, 1.0), np.clip(ty, 0.0, 1.0)) * ok
    weights = np.where(complete, _corner_weights(tx, ty), inner)

    total = weights.sum(axis=0)
    # a sample sitting on a nodata centre falls back to its valid neighbours
    flat = (total == 0) & (ok.sum(axis=0) > 0)
    weights[:, flat] = ok[:, flat]
    total = weights.sum(axis=0)
    if np.any(total == 0):
        k = int(np.argmax(total == 0))
        raise GeometryError(f"all four neighbours nodata at sample {k}")

    elevations = (weights * vals).sum(axis=0) / total
    distances = t * float(np.linalg.norm(b - a))
    return ElevationProfile(distances, elevations)


def slope_percent(profile: ElevationProfile) -> float:
    """100 x |least-squares slope| of elevation against distance"""
    if profile.distances[-1] == profile.distances[0]:
        raise GeometryError("profile has zero distance span")
    fit = stats.linregress(profile.distances, profile.elevations)
    return 100.0 * abs(float(fit.slope))


# ---------------------------------------------------------------------------
# Map scaling
# ---------------------------------------------------------------------------

def parse_map_scale(scale: Union[str, float, int]) -> float:
    """Accept 22400, 22400.0 or '1:22,400' and return the denominator"""
    if isinstance(scale, str):
        text = scale.replace(",", "").replace(" ", "")
        if ":" in text:
            numerator, denominator = text.split(":", 1)
            value = float(denominator) / float(numerator)
        else:
            value = float(text)
    else:
        value = float(scale)
    if not value > 0:
        raise GeometryError("map scale must be > 0")
    return value


def scale_polyline(line: Polyline2D, map_scale: Union[str, float],
                   frame: Tuple[float, float]) -> ScaledOutline:
    """Scale a metre polyline to mm at 1:map_scale, centred in the frame"""
    denominator = parse_map_scale(map_scale)
    frame_w, frame_h = (float(v) for v in frame)
    if frame_w <= 0 or frame_h <= 0:
        raise GeometryError("frame dimensions must be > 0")
    verts = line.vertices
    if np.all(verts == verts[0]):
        raise GeometryError("degenerate line: all points equal")

    mm = verts / denominator * 1000.0
    lo, hi = mm.min(axis=0), mm.max(axis=0)
    centred = mm - (lo + hi) / 2 + np.array([frame_w / 2, frame_h / 2])
    width, height = (hi - lo).tolist()
    fits = width <= frame_w and height <= frame_h
    if not fits:
        logger.info("Outline %.1f x %.1f mm exceeds frame %.0f x %.0f mm",
                    width, height, frame_w, frame_h)
    return ScaledOutline(outline=Polyline2D(centred), frame=(frame_w, frame_h),
                         width=width, height=height, fits=fits)
