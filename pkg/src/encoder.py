"""
Encoder Module
Maps one municipality's ecological measurements to the parametric
dimensions of each vessel in its tableware set
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from src.config import EncoderConfig
from src.errors import EncodingError, InputError, RecordError
from src.geodata import Polyline2D, ScaledOutline, scale_polyline

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MunicipalityRecord:
    """One municipality's measurements; lengths in metres, slope in percent"""

    name: str
    reedbed_length: float
    reedbed_cuts: int
    avg_cut_distance: float
    coastline_length: float
    artificial_shoreline: float
    builtup_fraction: float
    slope: float
    shoreline: Polyline2D
    reconstructed: bool = False

    def __post_init__(self):
        problems = []
        if not self.name:
            problems.append("name is empty")
        if not self.reedbed_length >= 0:
            problems.append("reedbed_length must be >= 0")
        if not self.coastline_length > 0:
            problems.append("coastline_length must be > 0")
        elif not (0 <= self.artificial_shoreline <= self.coastline_length):
            problems.append("artificial_shoreline must lie in [0, coastline_length]")
        if self.reedbed_cuts < 0 or int(self.reedbed_cuts) != self.reedbed_cuts:
            problems.append("reedbed_cuts must be a non-negative integer")
        if self.reedbed_cuts > 0 and not self.avg_cut_distance >= 0:
            problems.append("avg_cut_distance must be >= 0")
        if not (0 <= self.builtup_fraction <= 1):
            problems.append("builtup_fraction must lie in [0, 1]")
        if not self.slope >= 0:
            problems.append("slope must be >= 0")
        if problems:
            raise RecordError(f"{self.name or '<unnamed>'}: " + "; ".join(problems))
        object.__setattr__(self, "reedbed_cuts", int(self.reedbed_cuts))

    def reedbed_ratio(self) -> float:
        """Reedbed length per metre of coastline"""
        return self.reedbed_length / self.coastline_length


@dataclass(frozen=True)
class MugSpec:
    height: float
    diameter: float
    spiral_turns: float
    spiral_length: float
    perforation_count: int
    perforation_spacing_along_spiral: float
    pitch: float
    requested_spacing: float = 0.0
    clamped: bool = False


@dataclass(frozen=True)
class JugSpec:
    height: float
    diameter: float
    concrete_fraction: float
    concrete_sector_angle: float
    mould: str = "short"


@dataclass(frozen=True)
class SmallPlateSpec:
    diameter: float
    segment_angle: float
    suppressed: bool
    fraction: float = 0.0
    raw_angle: float = 0.0


@dataclass(frozen=True)
class ServingPlateSpec:
    diameter: float
    segment_angle: float
    suppressed: bool
    fraction: float = 0.0
    raw_angle: float = 0.0
    members: Tuple[str, ...] = ()


@dataclass(frozen=True)
class DeepPlateSpec:
    diameter: float
    slope: float
    tilt_angle: float


@dataclass(frozen=True, eq=False)
class FlatPlateSpec:
    frame: Tuple[float, float]
    glass_outline: Polyline2D
    fits_frame: bool
    outline_width: float = 0.0
    outline_height: float = 0.0


@dataclass(frozen=True)
class Decision:
    """One defaulted, clamped, suppressed or omitted quantity"""

    kind: str
    vessel: str
    quantity: str
    value: object
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "vessel": self.vessel, "quantity": self.quantity,
                "value": self.value, "detail": self.detail}


@dataclass(frozen=True, eq=False)
class VesselSet:
    record: MunicipalityRecord
    mug: MugSpec
    jug: JugSpec
    deep_plate: DeepPlateSpec
    small_plate: SmallPlateSpec
    flat_plate: FlatPlateSpec
    decisions: Tuple[Decision, ...] = field(default=())


def spiral_turn_length(config: EncoderConfig) -> float:
    """Arc length of one helix turn around the mug, mm"""
    return math.hypot(math.pi * config.mug_diameter, config.spiral_pitch)


def height_per_metre(config: EncoderConfig) -> float:
    """Vessel mm of height per metre of shoreline data, shared by mugs and jugs"""
    return (1000.0 / config.map_scale_reedbed) * config.spiral_pitch / spiral_turn_length(config)


def encode_mug(record: MunicipalityRecord, config: EncoderConfig) -> MugSpec:
    """Reedbed length becomes a spiral; cuts become perforations along it"""
    if record.reedbed_length == 0:
        raise EncodingError(f"{record.name}: no reedbed; mug undefined")

    scale = 1000.0 / config.map_scale_reedbed
    spiral_length = record.reedbed_length * scale
    turns = spiral_length / spiral_turn_length(config)
    count = record.reedbed_cuts

    requested = record.avg_cut_distance * scale if count else 0.0
    spacing = requested
    clamped = False
    if count and count * spacing > spiral_length:
        spacing = spiral_length / count
        clamped = True
        logger.warning("%s: perforation spacing clamped from %.3f to %.3f mm",
                       record.name, requested, spacing)

    return MugSpec(height=turns * config.spiral_pitch, diameter=config.mug_diameter,
                   spiral_turns=turns, spiral_length=spiral_length,
                   perforation_count=count, perforation_spacing_along_spiral=spacing,
                   pitch=config.spiral_pitch, requested_spacing=requested, clamped=clamped)


def encode_jug(record: MunicipalityRecord, config: EncoderConfig) -> JugSpec:
    """Coastline sets the height, hardened shoreline share sets the concrete"""
    height = record.coastline_length * height_per_metre(config)
    tall = height >= config.jug_tall_threshold
    fraction = record.artificial_shoreline / record.coastline_length
    return JugSpec(height=height,
                   diameter=config.jug_diameter_tall if tall else config.jug_diameter_short,
                   concrete_fraction=fraction,
                   concrete_sector_angle=360.0 * fraction,
                   mould="tall" if tall else "short")


def _pie_angle(fraction: float, config: EncoderConfig) -> Tuple[float, bool, float]:
    raw = 360.0 * fraction
    suppressed = raw == 0 or raw < config.small_plate_min_angle
    return (0.0 if suppressed else raw), suppressed, raw


def encode_small_plate(record: MunicipalityRecord, config: EncoderConfig) -> SmallPlateSpec:
    angle, suppressed, raw = _pie_angle(record.builtup_fraction, config)
    return SmallPlateSpec(diameter=config.small_plate_diameter, segment_angle=angle,
                          suppressed=suppressed, fraction=record.builtup_fraction,
                          raw_angle=raw)


def encode_deep_plate(record: MunicipalityRecord, config: EncoderConfig) -> DeepPlateSpec:
    tilt = math.degrees(math.atan(record.slope / 100.0))
    return DeepPlateSpec(diameter=config.deep_plate_diameter, slope=record.slope,
                         tilt_angle=tilt)


def encode_flat_plate(record: MunicipalityRecord, config: EncoderConfig) -> FlatPlateSpec:
    scaled: ScaledOutline = scale_polyline(record.shoreline,
                                           config.map_scale_shoreline_outline,
                                           config.flat_plate_frame)
    return FlatPlateSpec(frame=scaled.frame, glass_outline=scaled.outline,
                         fits_frame=scaled.fits, outline_width=scaled.width,
                         outline_height=scaled.height)


def encode_serving_plate(records: Sequence[MunicipalityRecord],
                         config: EncoderConfig) -> ServingPlateSpec:
    """Pie chart of the mean built-up fraction over the given municipalities"""
    if not records:
        raise EncodingError("serving plate needs at least one municipality")
    mean = math.fsum(r.builtup_fraction for r in records) / len(records)
    angle, suppressed, raw = _pie_angle(mean, config)
    return ServingPlateSpec(diameter=config.serving_plate_diameter, segment_angle=angle,
                            suppressed=suppressed, fraction=mean, raw_angle=raw,
                            members=tuple(r.name for r in records))


def collect_decisions(record: MunicipalityRecord, mug: MugSpec, jug: JugSpec,
                      small: SmallPlateSpec, flat: FlatPlateSpec) -> List[Decision]:
    """Ledger entry for every quantity not taken verbatim from the data"""
    decisions = []
    if record.reedbed_cuts == 0:
        decisions.append(Decision("ignored", "mug", "avg_cut_distance",
                                  record.avg_cut_distance, "no reedbed cuts, no perforations"))
    if mug.clamped:
        decisions.append(Decision(
            "clamped", "mug", "perforation_spacing_along_spiral",
            mug.perforation_spacing_along_spiral,
            f"reduced from {mug.requested_spacing:.6g} mm so {mug.perforation_count} "
            f"perforations fit a {mug.spiral_length:.6g} mm spiral"))
    if jug.concrete_fraction == 0:
        decisions.append(Decision("omitted", "jug", "concrete_insert", 0.0,
                                  "no artificial shoreline"))
    if small.suppressed:
        decisions.append(Decision("suppressed", "small_plate", "segment_angle",
                                  small.raw_angle, "built-up segment below minimum angle"))
    if not flat.fits_frame:
        decisions.append(Decision(
            "overflow", "flat_plate", "glass_outline",
            [flat.outline_width, flat.outline_height],
            f"outline exceeds the {flat.frame[0]:g} x {flat.frame[1]:g} mm frame"))
    return decisions


def encode_vessel_set(record: MunicipalityRecord, config: EncoderConfig,
                      ) -> VesselSet:
    """Encode all five per-municipality vessels"""
    mug = encode_mug(record, config)
    jug = encode_jug(record, config)
    deep = encode_deep_plate(record, config)
    small = encode_small_plate(record, config)
    flat = encode_flat_plate(record, config)
    decisions = collect_decisions(record, mug, jug, small, flat)
    for decision in decisions:
        logger.info("%s: %s %s.%s", record.name, decision.kind, decision.vessel,
                    decision.quantity)
    return VesselSet(record=record, mug=mug, jug=jug, deep_plate=deep,
                     small_plate=small, flat_plate=flat, decisions=tuple(decisions))


def serving_plate_decisions(spec: ServingPlateSpec) -> List[Decision]:
    if spec.suppressed:
        return [Decision("suppressed", "serving_plate", "segment_angle", spec.raw_angle,
                         "built-up segment below minimum angle")]
    return []


def find_records(records: Sequence[MunicipalityRecord],
                 names: Optional[Sequence[str]]) -> List[MunicipalityRecord]:
    """Select records by name, preserving the order of `names`"""
    if names is None:
        return list(records)
    by_name = {r.name: r for r in records}
    missing = [n for n in names if n not in by_name]
    if missing:
        raise InputError(f"unknown municipality name(s): {', '.join(missing)}")
    return [by_name[n] for n in names]
