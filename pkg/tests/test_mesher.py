"""Tests for revolve, perforation, plane cuts, pie segments and mesh diagnostics"""

import math

import numpy as np
import pytest
from scipy import integrate

from src.config import EncoderConfig
from src.encoder import MugSpec, encode_deep_plate, encode_jug, encode_mug
from src.errors import MeshError
from src.mesher import (CupBody, HelixGroove, Profile2D, TriangleMesh, disc, perforate,
                        pie_segment, revolve, spiral_points, tilt_cut)
from src.vessels import (build_deep_plate, build_jug, build_mug, deep_plate_profile, jug_body,
                         mug_body)
from utils.mesh_metrics import MeshMetrics, mesh_stats

from tests.conftest import make_record

RECTANGLE = [(0, 0), (40, 0), (40, 50), (0, 50)]


def cylinder_error(segments):
    volume = revolve(Profile2D(RECTANGLE), segments).signed_volume
    return abs(volume / (math.pi * 40 ** 2 * 50) - 1)


class TestRevolve:
    def test_cylinder_volume(self):
        assert cylinder_error(256) < 0.005

    def test_error_decreases_with_segments(self):
        errors = [cylinder_error(n) for n in (32, 64, 256)]
        assert errors[0] > errors[1] > errors[2]

    def test_closed_genus_zero(self):
        mesh = revolve(deep_plate_profile(EncoderConfig()), 64)
        stats = mesh_stats(mesh)
        assert stats.euler == 2
        assert stats.watertight
        assert stats.genus == 0
        assert stats.signed_volume_mm3 > 0

    def test_three_segments_square(self):
        stats = mesh_stats(revolve(Profile2D([(0, 0), (10, 0), (10, 10), (0, 10)]), 3))
        assert stats.watertight
        assert stats.euler == 2

    def test_clockwise_profile_is_reoriented(self):
        mesh = revolve(Profile2D(RECTANGLE[::-1]), 64)
        assert mesh.signed_volume > 0

    def test_self_intersecting_profile(self):
        with pytest.raises(MeshError, match="self-intersecting profile"):
            Profile2D([(0, 0), (10, 10), (10, 0), (0, 10)])

    def test_profile_left_of_axis(self):
        with pytest.raises(MeshError, match="r < 0"):
            Profile2D([(0, 0), (-5, 0), (-5, 5), (0, 5)])


class TestSpiral:
    @staticmethod
    def spec(count, spacing, length=2000.0):
        config = EncoderConfig()
        return encode_mug(make_record(reedbed_length=length, reedbed_cuts=count,
                                      avg_cut_distance=spacing), config)

    def test_no_perforations(self):
        assert spiral_points(self.spec(0, 0.0)).shape == (0, 3)

    def test_single_point_at_spacing(self):
        spec = self.spec(1, 300.0)
        (x, y, z), = spiral_points(spec)
        rise = spec.pitch / (2 * math.pi)
        theta = (z - spec.pitch / 2) / rise
        assert math.hypot(x, y) == pytest.approx(spec.diameter / 2)
        assert theta * math.hypot(spec.diameter / 2, rise) == pytest.approx(300.0)

    def test_adjacent_arc_distances(self):
        spec = self.spec(6, 270.0)
        points = spiral_points(spec)
        radius = spec.diameter / 2
        rise = spec.pitch / (2 * math.pi)
        thetas = np.concatenate([[0.0], (points[:, 2] - spec.pitch / 2) / rise])

        def speed(t):
            dx, dy, dz = -radius * math.sin(t), radius * math.cos(t), rise
            return math.sqrt(dx * dx + dy * dy + dz * dz)

        for a, b in zip(thetas, thetas[1:]):
            arc, _ = integrate.quad(speed, a, b)
            assert arc == pytest.approx(spec.perforation_spacing_along_spiral, abs=1e-6)


class TestPerforate:
    @pytest.mark.parametrize("count", range(21))
    def test_genus_law(self, count):
        config = EncoderConfig()
        spec = encode_mug(make_record(reedbed_length=1300.0, reedbed_cuts=count,
                                      avg_cut_distance=60.0), config)
        stats = mesh_stats(build_mug(spec, config))
        assert stats.watertight
        assert stats.euler == 2 - 2 * count
        assert stats.genus == count
        assert stats.components == 1

    def test_no_centres_is_the_plain_cup(self):
        body = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=64)
        plain = body.mesh()
        same = perforate(body, np.zeros((0, 3)), 2.0)
        assert np.array_equal(plain.vertices, same.vertices)
        assert np.array_equal(plain.triangles, same.triangles)

    def test_one_hole(self):
        body = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=64)
        mesh = perforate(body, [(40.0, 0.0, 25.0)], 2.0)
        stats = mesh_stats(mesh)
        assert stats.euler == 0
        assert stats.genus == 1
        assert mesh.signed_volume < body.mesh().signed_volume

    def test_overlapping_holes(self):
        body = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=64)
        with pytest.raises(MeshError, match="overlapping holes 0 and 1"):
            perforate(body, [(40.0, 0.0, 25.0), (40.0, 0.0, 27.0)], 2.0)

    @staticmethod
    def pair_at_gap(gap):
        return [(40.0, 0.0, 25.0), (40 * math.cos(gap / 40), 40 * math.sin(gap / 40), 25.0)]

    @pytest.mark.parametrize("gap", [4.35, 4.45, 4.55])
    def test_close_holes_that_do_not_overlap(self, gap):
        body = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=64)
        stats = mesh_stats(perforate(body, self.pair_at_gap(gap), 2.0, pitch=5.0))
        assert stats.watertight
        assert stats.genus == 2

    def test_holes_too_close_to_stitch(self):
        body = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=64)
        with pytest.raises(MeshError, match="too close to stitch"):
            perforate(body, self.pair_at_gap(4.2), 2.0, pitch=5.0)
        with pytest.raises(MeshError, match="overlapping holes 0 and 1"):
            perforate(body, self.pair_at_gap(3.9), 2.0, pitch=5.0)

    def test_mug_with_tightly_spaced_cuts(self):
        config = EncoderConfig()
        spec = encode_mug(make_record(reedbed_length=2000.0, reedbed_cuts=3,
                                      avg_cut_distance=4.4), config)
        assert not spec.clamped
        stats = mesh_stats(build_mug(spec, config))
        assert stats.watertight
        assert stats.euler == 2 - 2 * 3

    def test_hole_off_the_wall(self):
        body = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=64)
        with pytest.raises(MeshError, match="off the wall"):
            perforate(body, [(40.0, 0.0, 49.0)], 2.0)
        with pytest.raises(MeshError, match="off the wall"):
            perforate(body, [(10.0, 0.0, 25.0)], 2.0)

    def test_spacing_beyond_spiral(self):
        spec = MugSpec(height=10.0, diameter=80.0, spiral_turns=2.0, spiral_length=100.0,
                       perforation_count=3, perforation_spacing_along_spiral=50.0, pitch=5.0)
        with pytest.raises(MeshError, match="exceed the spiral length"):
            spiral_points(spec)


class TestGroove:
    GROOVE = HelixGroove(pitch=5.0, turns=2.0, start=2.5, depth=0.8, width=2.5)

    def test_depth_profile(self):
        half_turn = math.pi * 40
        assert float(self.GROOVE.depth_at(0.0, 2.5, 40.0)) == pytest.approx(0.8)
        # half a turn on, the helix is half a pitch higher
        assert float(self.GROOVE.depth_at(half_turn, 5.0, 40.0)) == pytest.approx(0.8)
        assert float(self.GROOVE.depth_at(0.0, 5.0, 40.0)) == 0.0
        assert float(self.GROOVE.depth_at(0.0, 1.0, 40.0)) == 0.0
        # the helix stops after its last turn
        assert float(self.GROOVE.depth_at(half_turn, 15.0, 40.0)) == 0.0

    def test_mug_wall_carries_the_helix(self):
        config = EncoderConfig(mesh_segments=64)
        spec = encode_mug(make_record(reedbed_length=1300.0, reedbed_cuts=0,
                                      avg_cut_distance=0.0), config)
        body = mug_body(spec, config)
        mesh = build_mug(spec, config)
        v = mesh.vertices
        rho = np.hypot(v[:, 0], v[:, 1])
        outer = (v[:, 2] > 0) & (rho > body.inner_radius + body.wall / 2)
        depth = body.outer_radius - rho[outer]
        assert depth.min() >= -1e-9
        assert depth.max() <= config.spiral_groove_depth + 1e-9
        assert depth.max() > 0.6 * config.spiral_groove_depth

        deep = v[outer][depth > 0.5 * config.spiral_groove_depth]
        turn = (np.arctan2(deep[:, 1], deep[:, 0]) % (2 * math.pi)) / (2 * math.pi)
        offset = (deep[:, 2] - spec.pitch / 2 - spec.pitch * turn) % spec.pitch
        offset = np.minimum(offset, spec.pitch - offset)
        assert offset.max() < config.spiral_groove_width / 2

        stats = mesh_stats(mesh)
        assert stats.watertight
        assert stats.euler == 2

    def test_jug_wall_is_plain(self):
        config = EncoderConfig(mesh_segments=64)
        jug = encode_jug(make_record(), config)
        assert jug_body(jug, config).groove is None

    def test_groove_must_leave_a_wall(self):
        with pytest.raises(MeshError, match="shallower than the wall"):
            CupBody(outer_radius=40, wall=4, height=50, base=4,
                    groove=HelixGroove(pitch=5.0, turns=2.0, start=2.5, depth=4.0, width=2.5))
        with pytest.raises(MeshError, match="width <= pitch"):
            HelixGroove(pitch=5.0, turns=2.0, start=2.5, depth=0.8, width=6.0)


class TestTiltCut:
    def test_plane_above_mesh(self):
        mesh = revolve(Profile2D(RECTANGLE), 64)
        assert tilt_cut(mesh, 0.0, 60.0) is mesh

    def test_half_cylinder(self):
        mesh = revolve(Profile2D(RECTANGLE), 256)
        half = tilt_cut(mesh, 0.0, 25.0)
        stats = mesh_stats(half)
        assert stats.watertight
        assert stats.euler == 2
        assert half.signed_volume == pytest.approx(math.pi * 40 ** 2 * 25, rel=0.005)
        assert half.signed_volume == pytest.approx(mesh.signed_volume / 2, rel=1e-9)

    def test_volume_shrinks_as_tilt_grows(self):
        config = EncoderConfig(mesh_segments=64)
        uncut = revolve(deep_plate_profile(config), config.mesh_segments)
        volumes = [uncut.signed_volume]
        for slope in (0.0, 5.0, 12.0, 17.0, 25.0, 40.0, 60.0, 80.0, 100.0):
            tilt = math.degrees(math.atan(slope / 100))
            cut = tilt_cut(uncut, tilt, config.pivot_height)
            stats = mesh_stats(cut)
            assert stats.watertight, f"slope {slope}%"
            assert stats.genus == 0, f"slope {slope}%"
            # the half behind the pivot line is never touched
            assert cut.signed_volume >= 0.5 * uncut.signed_volume * (1 - 1e-9), f"slope {slope}%"
            volumes.append(cut.signed_volume)
        assert all(b <= a + 1e-6 for a, b in zip(volumes, volumes[1:]))
        assert volumes[-1] < volumes[0]

    def test_steep_slope_keeps_a_plate(self):
        config = EncoderConfig(mesh_segments=128)
        spec = encode_deep_plate(make_record(slope=150.0), config)
        uncut, cut = build_deep_plate(spec, config)
        assert mesh_stats(cut).watertight
        assert cut.signed_volume >= 0.5 * uncut.signed_volume * (1 - 1e-9)

    @staticmethod
    def tilted_cylinder_error(segments):
        # z <= 25 - x tan(20 deg) stays inside the cylinder, so the kept
        # volume is the mid-height volume whatever the tilt
        mesh = revolve(Profile2D(RECTANGLE), segments)
        cut = tilt_cut(mesh, 20.0, 25.0)
        return abs(cut.signed_volume / (math.pi * 40 ** 2 * 25) - 1)

    def test_tilted_volume_converges(self):
        errors = [self.tilted_cylinder_error(n) for n in (32, 64, 256)]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.005

    def test_deep_plate_builder(self):
        config = EncoderConfig(mesh_segments=64)
        spec = encode_deep_plate(make_record(slope=25.0), config)
        uncut, cut = build_deep_plate(spec, config)
        assert uncut.signed_volume > cut.signed_volume > 0
        assert mesh_stats(cut).watertight

    def test_plane_below_everything(self):
        mesh = revolve(Profile2D(RECTANGLE), 32)
        with pytest.raises(MeshError, match="nothing left below"):
            tilt_cut(mesh, 0.0, -10.0)


class TestPieSegment:
    def test_full_disc(self):
        mesh = pie_segment(80, 5, 360, 256)
        assert mesh.signed_volume == pytest.approx(math.pi * 80 ** 2 * 5, rel=0.005)

    def test_quarter_exactly_proportional(self):
        full = pie_segment(80, 5, 360, 128).signed_volume
        quarter = pie_segment(80, 5, 90, 128).signed_volume
        assert quarter == pytest.approx(full / 4, rel=1e-12)

    def test_sliver(self):
        mesh = pie_segment(80, 5, 0.5, 128)
        stats = mesh_stats(mesh)
        assert stats.watertight
        assert stats.euler == 2
        assert mesh.signed_volume > 0

    def test_quarter_volume_converges(self):
        exact = math.pi * 80 ** 2 * 5 / 4
        errors = [abs(pie_segment(80, 5, 90, n).signed_volume / exact - 1) for n in (32, 64, 256)]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.005

    @pytest.mark.parametrize("fraction", [0.01, 0.37, 0.5, 0.93])
    def test_jug_sector_stays_inside_cavity(self, fraction):
        config = EncoderConfig(mesh_segments=48)
        jug = encode_jug(make_record(coastline_length=5000.0,
                                     artificial_shoreline=fraction * 5000.0), config)
        body = jug_body(jug, config)
        _, insert, _ = build_jug(jug, config)
        xy = insert.vertices[:, :2]
        rho = np.hypot(xy[:, 0], xy[:, 1])
        phi = np.arctan2(xy[:, 1], xy[:, 0]) % (2 * math.pi)
        step = 2 * math.pi / config.mesh_segments
        # distance from the axis to the cavity polygon's boundary along phi
        offset = (phi % step) - step / 2
        boundary = body.inner_radius * math.cos(step / 2) / np.cos(offset)
        assert np.all(rho <= boundary * (1 + 1e-12) + 1e-12)

    @pytest.mark.parametrize("angle", [0.0, -5.0, 361.0])
    def test_bad_angle(self, angle):
        with pytest.raises(MeshError):
            pie_segment(80, 5, angle)

    def test_jug_concrete_ratio_on_random_records(self):
        config = EncoderConfig()
        rng = np.random.default_rng(7)
        for _ in range(50):
            coastline = rng.uniform(1500, 9000)
            fraction = rng.uniform(0.01, 1.0)
            record = make_record(coastline_length=coastline,
                                 artificial_shoreline=fraction * coastline)
            jug = encode_jug(record, config)
            _, insert, cavity = build_jug(jug, config)
            assert insert.signed_volume / cavity == pytest.approx(jug.concrete_fraction, rel=0.01)


class TestMeshStats:
    def test_tetrahedron(self, tetrahedron):
        stats = mesh_stats(tetrahedron)
        assert (stats.V, stats.E, stats.F, stats.euler) == (4, 6, 4, 2)
        assert stats.watertight
        assert stats.signed_volume_mm3 == pytest.approx(math.sqrt(2) / 12)

    def test_cube(self, cube):
        stats = mesh_stats(cube)
        assert (stats.V, stats.E, stats.F, stats.euler) == (8, 18, 12, 2)
        assert stats.genus == 0
        assert stats.signed_volume_mm3 == pytest.approx(1.0)
        assert stats.degenerate == 0

    def test_missing_triangle(self, cube):
        opened = TriangleMesh(cube.vertices, cube.triangles[1:])
        stats = mesh_stats(opened)
        assert not stats.watertight
        assert stats.genus is None

    def test_flipped_triangle_breaks_orientation(self, cube):
        tris = cube.triangles.copy()
        tris[0] = tris[0][::-1]
        assert not MeshMetrics.is_watertight(tris)

    def test_two_components(self, tetrahedron):
        pair = TriangleMesh(np.vstack([tetrahedron.vertices, tetrahedron.vertices + 5]),
                            np.vstack([tetrahedron.triangles, tetrahedron.triangles + 4]))
        stats = mesh_stats(pair)
        assert stats.components == 2
        assert stats.euler == 4
        assert stats.genus == 0

    def test_min_wall_of_a_cup(self):
        cup = CupBody(outer_radius=40, wall=4, height=50, base=4, segments=128).mesh()
        assert mesh_stats(cup).min_wall_estimate == pytest.approx(4.0, abs=0.1)

    def test_disc_has_positive_volume(self):
        assert disc(10, 2, 64).signed_volume > 0
