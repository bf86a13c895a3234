"""
Vessel Geometry Module
Turns encoded vessel specs into the solid meshes and outlines of one tableware set
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

from src.config import EncoderConfig
from src.encoder import (DeepPlateSpec, JugSpec, MugSpec, ServingPlateSpec,
                         SmallPlateSpec, VesselSet)
from src.mesh_export import export_svg_outline
from src.mesher import (CupBody, HelixGroove, Profile2D, TriangleMesh, disc, perforate,
                        pie_segment, revolve, spiral_points, tilt_cut)

logger = logging.getLogger(__name__)

# mesh name -> vessel it belongs to, in output order
MESH_VESSELS: Dict[str, str] = {
    "mug": "mug",
    "jug": "jug",
    "jug_concrete": "jug",
    "deep_plate_uncut": "deep_plate",
    "deep_plate": "deep_plate",
    "small_plate": "small_plate",
    "small_plate_concrete": "small_plate",
    "flat_plate": "flat_plate",
}
OUTLINE_VESSELS: Dict[str, str] = {"flat_plate_glass": "flat_plate"}


@dataclass(frozen=True, eq=False)
class VesselMeshes:
    """Meshes of one set plus the reference volumes validation needs"""

    meshes: Dict[str, TriangleMesh]
    outlines: Dict[str, str] = field(default_factory=dict)
    volumes: Dict[str, float] = field(default_factory=dict)


def mug_body(spec: MugSpec, config: EncoderConfig) -> CupBody:
    # half a pitch of wall above and below the helix
    groove = HelixGroove(pitch=spec.pitch, turns=spec.spiral_turns, start=spec.pitch / 2,
                         depth=config.spiral_groove_depth, width=config.spiral_groove_width)
    return CupBody(outer_radius=spec.diameter / 2, wall=config.wall_thickness,
                   height=spec.height + spec.pitch, base=config.base_thickness,
                   segments=config.mesh_segments, groove=groove)


def build_mug(spec: MugSpec, config: EncoderConfig) -> TriangleMesh:
    return perforate(mug_body(spec, config), spiral_points(spec),
                     config.perforation_radius, spec.pitch)


def jug_body(spec: JugSpec, config: EncoderConfig) -> CupBody:
    return CupBody(outer_radius=spec.diameter / 2, wall=config.wall_thickness,
                   height=spec.height, base=config.base_thickness,
                   segments=config.mesh_segments)


def build_jug(spec: JugSpec, config: EncoderConfig) -> Tuple[TriangleMesh, TriangleMesh, float]:
    """Jug body, full-height concrete sector (None when fraction is 0), cavity volume"""
    body = jug_body(spec, config)
    insert = None
    if spec.concrete_fraction > 0:
        insert = pie_segment(body.inner_radius, body.height, spec.concrete_sector_angle,
                             config.mesh_segments)
    return body.mesh(), insert, body.cavity_volume()


def recessed_plate_profile(diameter: float, thickness: float, wall: float,
                           recess: float) -> Profile2D:
    """Flat plate with a round recess of depth `recess` inside a rim of width `wall`"""
    r = diameter / 2
    return Profile2D([(0, 0), (r, 0), (r, thickness), (r - wall, thickness),
                      (r - wall, thickness - recess), (0, thickness - recess)])


def build_pie_plate(diameter: float, thickness: float, segment_angle: float,
                    suppressed: bool, config: EncoderConfig):
    """Ceramic body, concrete segment (None when suppressed), full recess volume"""
    recess = config.concrete_thickness
    body = revolve(recessed_plate_profile(diameter, thickness, config.wall_thickness, recess),
                   config.mesh_segments)
    inner = diameter / 2 - config.wall_thickness
    recess_volume = disc(inner, recess, config.mesh_segments).signed_volume
    segment = None
    if not suppressed and segment_angle > 0:
        segment = pie_segment(inner, recess, segment_angle,
                              config.mesh_segments).translated((0, 0, thickness - recess))
    return body, segment, recess_volume


def deep_plate_profile(config: EncoderConfig) -> Profile2D:
    r = config.deep_plate_diameter / 2
    foot = config.deep_plate_foot_diameter / 2
    w, t, h = config.wall_thickness, config.base_thickness, config.deep_plate_height
    return Profile2D([(0, 0), (foot, 0), (r, h), (r - w, h), (foot - w, t), (0, t)])


def build_deep_plate(spec: DeepPlateSpec, config: EncoderConfig) -> Tuple[TriangleMesh, TriangleMesh]:
    """Uncut bowl and the bowl cut at its encoded tilt about the pivot height"""
    uncut = revolve(deep_plate_profile(config), config.mesh_segments)
    return uncut, tilt_cut(uncut, spec.tilt_angle, config.pivot_height)


def build_vessel_meshes(vessel_set: VesselSet, config: EncoderConfig) -> VesselMeshes:
    """Every mesh and outline for one municipality's set"""
    name = vessel_set.record.name
    meshes: Dict[str, TriangleMesh] = {}
    volumes: Dict[str, float] = {}

    meshes["mug"] = build_mug(vessel_set.mug, config)

    jug, insert, cavity = build_jug(vessel_set.jug, config)
    meshes["jug"] = jug
    volumes["jug_cavity_mm3"] = cavity
    if insert is not None:
        meshes["jug_concrete"] = insert
        volumes["jug_concrete_mm3"] = insert.signed_volume

    uncut, cut = build_deep_plate(vessel_set.deep_plate, config)
    meshes["deep_plate_uncut"] = uncut
    meshes["deep_plate"] = cut

    small: SmallPlateSpec = vessel_set.small_plate
    body, segment, recess = build_pie_plate(small.diameter, config.small_plate_thickness,
                                            small.segment_angle, small.suppressed, config)
    meshes["small_plate"] = body
    volumes["small_plate_recess_mm3"] = recess
    if segment is not None:
        meshes["small_plate_concrete"] = segment
        volumes["small_plate_concrete_mm3"] = segment.signed_volume

    meshes["flat_plate"] = disc(config.flat_plate_diameter / 2, config.flat_plate_thickness,
                                config.mesh_segments)
    outlines = {"flat_plate_glass": export_svg_outline(vessel_set.flat_plate.glass_outline,
                                                       vessel_set.flat_plate.frame)}

    logger.debug("%s: built %d meshes", name, len(meshes))
    return VesselMeshes(meshes=meshes, outlines=outlines, volumes=volumes)


def build_serving_meshes(spec: ServingPlateSpec, config: EncoderConfig) -> VesselMeshes:
    body, segment, recess = build_pie_plate(spec.diameter, config.serving_plate_thickness,
                                            spec.segment_angle, spec.suppressed, config)
    meshes = {"serving_plate": body}
    volumes = {"serving_plate_recess_mm3": recess}
    if segment is not None:
        meshes["serving_plate_concrete"] = segment
        volumes["serving_plate_concrete_mm3"] = segment.signed_volume
    return VesselMeshes(meshes=meshes, volumes=volumes)
