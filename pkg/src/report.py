"""
Report Module
Builds the deterministic JSON manifest, the markdown booklet and the
materials estimate from encodings and mesh diagnostics
"""

import json
import logging
import math
from dataclasses import asdict
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.config import EncoderConfig
from src.encoder import (FlatPlateSpec, MunicipalityRecord, ServingPlateSpec, VesselSet,
                         height_per_metre, serving_plate_decisions, spiral_turn_length)
from src.errors import ManifestError
from src.vessels import MESH_VESSELS, OUTLINE_VESSELS
from utils.mesh_metrics import MeshStats

logger = logging.getLogger(__name__)

VESSELS = ("mug", "jug", "deep_plate", "small_plate", "flat_plate")
PIECES_PER_SET = len(VESSELS)


def round_sig(value: float, digits: int = 6) -> float:
    """Round to `digits` significant digits"""
    if value == 0 or not math.isfinite(value):
        return float(value) + 0.0
    return float(f"{value:.{digits}g}") + 0.0


def normalise(value: Any) -> Any:
    """JSON-ready copy with floats rounded to 6 significant digits"""
    if isinstance(value, Mapping):
        return {str(k): normalise(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalise(v) for v in value]
    if isinstance(value, np.ndarray):
        return [normalise(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round_sig(float(value))
    return value


def record_entry(record: MunicipalityRecord) -> Dict[str, Any]:
    return {
        "reedbed_length_m": record.reedbed_length,
        "reedbed_cuts": record.reedbed_cuts,
        "avg_cut_distance_m": record.avg_cut_distance,
        "coastline_length_m": record.coastline_length,
        "artificial_shoreline_m": record.artificial_shoreline,
        "builtup_fraction": record.builtup_fraction,
        "slope_percent": record.slope,
        "reconstructed": record.reconstructed,
        "shoreline_vertices": len(record.shoreline.vertices),
    }


def flat_plate_entry(spec: FlatPlateSpec) -> Dict[str, Any]:
    return {
        "frame": list(spec.frame),
        "fits_frame": spec.fits_frame,
        "outline_width": spec.outline_width,
        "outline_height": spec.outline_height,
        "outline_vertices": len(spec.glass_outline.vertices),
    }


def _stats_entry(stats: Optional[MeshStats], path: Optional[str] = None) -> Optional[Dict[str, Any]]:
    if stats is None:
        return None
    entry = stats.to_dict()
    entry["file"] = path
    return entry


def vessel_entries(vessel_set: VesselSet, stats: Mapping[str, MeshStats],
                   files: Mapping[str, str]) -> Dict[str, Any]:
    """Per-vessel spec, mesh diagnostics and output files"""
    owners = {**MESH_VESSELS, **OUTLINE_VESSELS}
    specs = {
        "mug": asdict(vessel_set.mug),
        "jug": asdict(vessel_set.jug),
        "deep_plate": asdict(vessel_set.deep_plate),
        "small_plate": asdict(vessel_set.small_plate),
        "flat_plate": flat_plate_entry(vessel_set.flat_plate),
    }
    entries = {}
    for vessel in VESSELS:
        meshes = {mesh: _stats_entry(stats.get(mesh), files.get(mesh))
                  for mesh, owner in MESH_VESSELS.items() if owner == vessel and mesh in stats}
        entries[vessel] = {
            "spec": specs[vessel],
            "meshes": meshes,
            "files": sorted(path for key, path in files.items()
                            if owners.get(key) == vessel),
        }
    return entries


def build_manifest(records: Sequence[MunicipalityRecord], vessel_sets: Sequence[VesselSet],
                   stats: Sequence[Mapping[str, MeshStats]], *,
                   config: EncoderConfig,
                   config_snapshot: Optional[Mapping[str, Any]] = None,
                   files: Optional[Sequence[Mapping[str, str]]] = None,
                   volumes: Optional[Sequence[Mapping[str, float]]] = None,
                   serving: Optional[Tuple[ServingPlateSpec, Mapping[str, MeshStats],
                                           Mapping[str, str], Mapping[str, float]]] = None,
                   failures: Sequence[Tuple[str, str]] = (),
                   version: str = "") -> Dict[str, Any]:
    """
    Assemble the manifest document

    records, vessel_sets and stats are aligned one entry per municipality;
    files and volumes, when given, follow the same order.
    """
    if not (len(records) == len(vessel_sets) == len(stats)):
        raise ManifestError(f"{len(records)} records, {len(vessel_sets)} spec sets and "
                            f"{len(stats)} stats entries do not pair up")
    files = files if files is not None else [{} for _ in records]
    volumes = volumes if volumes is not None else [{} for _ in records]
    if len(files) != len(records) or len(volumes) != len(records):
        raise ManifestError("files/volumes do not pair up with records")

    municipalities = []
    for record, vessel_set, mesh_stats, paths, vols in zip(records, vessel_sets, stats,
                                                           files, volumes):
        if vessel_set.record.name != record.name:
            raise ManifestError(f"spec set for '{vessel_set.record.name}' "
                                f"paired with record '{record.name}'")
        municipalities.append({
            "name": record.name,
            "record": record_entry(record),
            "vessels": vessel_entries(vessel_set, mesh_stats, paths),
            "decisions": [d.to_dict() for d in vessel_set.decisions],
            "volumes_mm3": dict(vols),
        })

    serving_entry = None
    concrete = [v.get(k, 0.0) for v in volumes
                for k in ("jug_concrete_mm3", "small_plate_concrete_mm3")]
    pieces = PIECES_PER_SET * len(records)
    if serving is not None:
        spec, serving_stats, serving_files, serving_volumes = serving
        serving_entry = {
            "spec": asdict(spec),
            "meshes": {k: _stats_entry(v, serving_files.get(k)) for k, v in serving_stats.items()},
            "files": sorted(serving_files.values()),
            "decisions": [d.to_dict() for d in serving_plate_decisions(spec)],
            "volumes_mm3": dict(serving_volumes),
        }
        concrete.append(serving_volumes.get("serving_plate_concrete_mm3", 0.0))
        pieces += 1

    manifest = {
        "tool": {"name": "balaton-tableware", "version": version},
        "units": "mm",
        "config": dict(config_snapshot) if config_snapshot is not None
        else {"values": config.to_dict(), "defaults_applied": []},
        "encoding": {
            "spiral_turn_length_mm": spiral_turn_length(config),
            "height_per_metre_mm": height_per_metre(config),
        },
        "municipalities": municipalities,
        "serving_plate": serving_entry,
        "materials": materials_estimate(concrete, pieces, config),
        "failures": [{"name": name, "error": error} for name, error in failures],
    }
    return normalise(manifest)


def dumps(manifest: Mapping[str, Any]) -> str:
    """Stable serialisation: sorted keys, UTF-8 names, trailing newline"""
    return json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def loads(text: str) -> Dict[str, Any]:
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest is not valid JSON: {e}") from e
    if not isinstance(manifest, dict) or "municipalities" not in manifest:
        raise ManifestError("manifest has no municipalities list")
    return manifest


def materials_estimate(concrete_volumes_mm3: Sequence[float], piece_count: int,
                       config: EncoderConfig) -> Dict[str, float]:
    """Concrete mass from insert and segment volumes; firing energy per fired piece"""
    volume_mm3 = math.fsum(concrete_volumes_mm3)
    return {
        "concrete_volume_cm3": volume_mm3 / 1000.0,
        "concrete_mass_kg": volume_mm3 * 1e-9 * config.concrete_density,
        "piece_count": int(piece_count),
        "firing_energy_kwh": config.firing_kwh_per_piece * piece_count,
    }


# ---------------------------------------------------------------------------
# Booklet
# ---------------------------------------------------------------------------

def _mug_text(mug: Dict[str, Any], record: Dict[str, Any]) -> str:
    text = (f"**Mug.** {record['reedbed_length_m']:g} m of reedbed, scaled down, wind into a "
            f"{mug['spiral_length']:g} mm spiral of {mug['spiral_turns']:.2f} turns, so the "
            f"mug stands {mug['height']:.1f} mm tall. The spiral is pressed into the outer "
            "wall as a shallow groove. ")
    if mug["perforation_count"] == 0:
        text += ("The reeds here are uncut: the mug has no perforations, "
                 "because no reedbed cuts were recorded.")
    else:
        text += (f"Each of the {mug['perforation_count']} perforations is one reedbed cut, "
                 f"placed every {mug['perforation_spacing_along_spiral']:g} mm along the spiral.")
        if mug.get("clamped"):
            text += (f" The recorded average gap ({mug['requested_spacing']:g} mm) did not "
                     "fit, so the spacing was shortened.")
    return text


def _jug_text(jug: Dict[str, Any], record: Dict[str, Any]) -> str:
    text = (f"**Jug.** {record['coastline_length_m']:g} m of coastline give a "
            f"{jug['height']:.1f} mm jug from the {jug['mould']} mould. ")
    if jug["concrete_fraction"] == 0:
        return text + "It holds no concrete: the shoreline is natural."
    return text + (f"Concrete fills {jug['concrete_fraction'] * 100:.1f}% of its cross-section, "
                   "the share of hardened shoreline.")


def _small_plate_text(plate: Dict[str, Any]) -> str:
    if plate["suppressed"]:
        return (f"**Small plate.** Built-up land covers {plate['fraction'] * 100:.2f}% of the "
                "lakebed here, too little to show: the concrete segment is suppressed.")
    return (f"**Small plate.** A {plate['segment_angle']:.1f}° concrete segment shows the "
            f"{plate['fraction'] * 100:.1f}% built-up share of the ancient lakebed.")


def _deep_plate_text(plate: Dict[str, Any]) -> str:
    return (f"**Deep plate.** Cut at {plate['tilt_angle']:.2f}°, the {plate['slope']:g}% "
            "slope of the shore rising from the water.")


def _flat_plate_text(plate: Dict[str, Any]) -> str:
    text = (f"**Flat plate.** Its glass follows the shoreline outline, "
            f"{plate['outline_width']:.0f} x {plate['outline_height']:.0f} mm.")
    if not plate["fits_frame"]:
        text += (f" The outline overflows the {plate['frame'][0]:g} x {plate['frame'][1]:g} mm "
                 "frame.")
    return text


def render_booklet(manifest: Mapping[str, Any]) -> str:
    """Markdown booklet: one section per municipality, the serving plate, materials"""
    lines: List[str] = ["# Lake Balaton tableware", ""]
    lines.append("Each set holds five pieces, every one shaped by a single measurement of "
                 "its municipality's shore.")
    lines.append("")

    for entry in manifest["municipalities"]:
        record = entry["record"]
        vessels = entry["vessels"]
        lines.append(f"## {entry['name']}")
        lines.append("")
        if record.get("reconstructed"):
            lines.append("_Some of these measurements were reconstructed from satellite "
                         "imagery._")
            lines.append("")
        lines.append(_mug_text(vessels["mug"]["spec"], record))
        lines.append("")
        lines.append(_jug_text(vessels["jug"]["spec"], record))
        lines.append("")
        lines.append(_deep_plate_text(vessels["deep_plate"]["spec"]))
        lines.append("")
        lines.append(_small_plate_text(vessels["small_plate"]["spec"]))
        lines.append("")
        lines.append(_flat_plate_text(vessels["flat_plate"]["spec"]))
        lines.append("")

    serving = manifest.get("serving_plate")
    if serving is not None:
        spec = serving["spec"]
        lines.append("## Serving plate")
        lines.append("")
        members = ", ".join(spec["members"])
        if spec["suppressed"]:
            lines.append(f"Averaged over {members}, built-up land is too small a share to "
                         "show: the concrete segment is suppressed.")
        else:
            lines.append(f"Averaged over {members}, built-up land takes "
                         f"{spec['fraction'] * 100:.2f}% of the lakebed: a "
                         f"{spec['segment_angle']:.1f}° concrete segment, "
                         f"{spec['segment_angle'] / 360:.3f} of the plate.")
        lines.append("")

    materials = manifest.get("materials")
    if materials:
        lines.append("## Materials")
        lines.append("")
        lines.append(f"- Concrete: {materials['concrete_mass_kg']:.2f} kg "
                     f"({materials['concrete_volume_cm3']:.0f} cm³) in jugs and plates")
        lines.append(f"- Firing: about {materials['firing_energy_kwh']:.0f} kWh for "
                     f"{materials['piece_count']} pieces")
        lines.append("")

    failures = manifest.get("failures") or []
    if failures:
        lines.append("## Not produced")
        lines.append("")
        for failure in failures:
            lines.append(f"- {failure['name']}: {failure['error']}")
        lines.append("")

    return "\n".join(lines)
