"""Tests for the measurement-to-vessel encodings"""

import math

import numpy as np
import pytest
from scipy import integrate

from src.config import EncoderConfig
from src.encoder import (encode_deep_plate, encode_flat_plate, encode_jug, encode_mug,
                         encode_serving_plate, encode_small_plate, encode_vessel_set,
                         find_records, height_per_metre, spiral_turn_length)
from src.errors import EncodingError, InputError, RecordError
from src.fixture import DINNER_SUBSET
from src.geodata import Polyline2D

from tests.conftest import make_record


def kinds(vessel_set):
    return [(d.kind, d.vessel) for d in vessel_set.decisions]


class TestMug:
    def test_turn_length_matches_helix_integral(self, config):
        radius = config.mug_diameter / 2
        rise = config.spiral_pitch / (2 * math.pi)
        length, _ = integrate.quad(lambda t: math.hypot(radius, rise), 0.0, 2 * math.pi)
        assert spiral_turn_length(config) == pytest.approx(length, rel=1e-12)
        assert spiral_turn_length(config) == pytest.approx(251.38, abs=0.01)

    def test_ten_turns(self, config):
        mug = encode_mug(make_record(reedbed_length=2513.8), config)
        assert mug.spiral_turns == pytest.approx(10.0, abs=1e-3)
        assert mug.height == pytest.approx(50.0, abs=0.01)
        assert mug.spiral_length == pytest.approx(2513.8)

    def test_height_grows_with_reedbed(self, config):
        short = encode_mug(make_record(reedbed_length=2000.0), config)
        tall = encode_mug(make_record(reedbed_length=2001.0), config)
        assert tall.height > short.height
        assert tall.diameter == short.diameter

    def test_no_cuts_no_perforations(self, config):
        vessel_set = encode_vessel_set(make_record(reedbed_cuts=0, avg_cut_distance=0.0), config)
        assert vessel_set.mug.perforation_count == 0
        assert ("ignored", "mug") in kinds(vessel_set)

    def test_no_reedbed(self, config):
        with pytest.raises(EncodingError, match="no reedbed; mug undefined"):
            encode_mug(make_record(reedbed_length=0.0), config)

    def test_spacing_clamped_to_spiral(self, config):
        record = make_record(reedbed_length=1000.0, reedbed_cuts=5, avg_cut_distance=400.0)
        vessel_set = encode_vessel_set(record, config)
        mug = vessel_set.mug
        assert mug.clamped
        assert mug.requested_spacing == pytest.approx(400.0)
        assert mug.perforation_spacing_along_spiral == pytest.approx(200.0)
        assert mug.perforation_count * mug.perforation_spacing_along_spiral <= mug.spiral_length
        assert kinds(vessel_set).count(("clamped", "mug")) == 1

    def test_spacing_kept_when_it_fits(self, config):
        mug = encode_mug(make_record(reedbed_length=2000.0, reedbed_cuts=4,
                                     avg_cut_distance=300.0), config)
        assert not mug.clamped
        assert mug.perforation_spacing_along_spiral == pytest.approx(300.0)


class TestJug:
    def test_natural_shoreline(self, config):
        vessel_set = encode_vessel_set(make_record(artificial_shoreline=0.0), config)
        assert vessel_set.jug.concrete_fraction == 0
        assert vessel_set.jug.concrete_sector_angle == 0
        assert ("omitted", "jug") in kinds(vessel_set)

    def test_fully_artificial(self, config):
        jug = encode_jug(make_record(artificial_shoreline=5000.0), config)
        assert jug.concrete_fraction == 1.0
        assert jug.concrete_sector_angle == 360.0

    def test_half_artificial(self, config):
        jug = encode_jug(make_record(artificial_shoreline=2500.0), config)
        assert jug.concrete_sector_angle == 180.0

    def test_shares_scale_with_mug(self, config):
        record = make_record(reedbed_length=4000.0, coastline_length=4000.0,
                             artificial_shoreline=0.0)
        assert encode_jug(record, config).height == pytest.approx(encode_mug(record, config).height)
        assert encode_jug(record, config).height == pytest.approx(4000.0 * height_per_metre(config))

    def test_mould_by_height(self):
        config = EncoderConfig(jug_diameter_tall=100.0, jug_tall_threshold=50.0)
        short = encode_jug(make_record(coastline_length=2000.0, artificial_shoreline=0.0), config)
        tall = encode_jug(make_record(coastline_length=20000.0, artificial_shoreline=0.0), config)
        assert (short.mould, short.diameter) == ("short", 90.0)
        assert (tall.mould, tall.diameter) == ("tall", 100.0)


class TestPlates:
    @pytest.mark.parametrize("fraction, angle, suppressed", [
        (0.0, 0.0, True), (0.25, 90.0, False), (0.004, 0.0, True), (1.0, 360.0, False)])
    def test_small_plate(self, config, fraction, angle, suppressed):
        plate = encode_small_plate(make_record(builtup_fraction=fraction), config)
        assert plate.segment_angle == pytest.approx(angle)
        assert plate.suppressed is suppressed
        assert plate.raw_angle == pytest.approx(360.0 * fraction)

    def test_suppression_is_a_decision(self, config):
        vessel_set = encode_vessel_set(make_record(builtup_fraction=0.004), config)
        assert kinds(vessel_set).count(("suppressed", "small_plate")) == 1

    @pytest.mark.parametrize("slope, tilt", [(0.0, 0.0), (12.0, 6.84), (25.0, 14.04)])
    def test_deep_plate_tilt(self, config, slope, tilt):
        plate = encode_deep_plate(make_record(slope=slope), config)
        assert plate.tilt_angle == pytest.approx(tilt, abs=0.005)

    @pytest.mark.parametrize("slope", [5.0, 12.0, 17.0, 25.0])
    def test_tilt_is_arctangent(self, config, slope):
        plate = encode_deep_plate(make_record(slope=slope), config)
        assert math.tan(math.radians(plate.tilt_angle)) == pytest.approx(slope / 100, rel=1e-9)

    def test_flat_plate_overflow(self, config):
        vessel_set = encode_vessel_set(
            make_record(shoreline=Polyline2D([(0, 0), (22400, 0)])), config)
        flat = vessel_set.flat_plate
        assert flat.glass_outline.length == pytest.approx(1000.0)
        assert not flat.fits_frame
        assert ("overflow", "flat_plate") in kinds(vessel_set)

    def test_flat_plate_fits(self, config):
        flat = encode_flat_plate(make_record(shoreline=Polyline2D([(0, 0), (4480, 0)])), config)
        assert flat.glass_outline.length == pytest.approx(200.0)
        assert flat.fits_frame

    def test_flat_plate_congruent(self, config, record):
        flat = encode_flat_plate(record, config)
        scaled = record.shoreline.vertices / config.map_scale_shoreline_outline * 1000.0
        offsets = flat.glass_outline.vertices - scaled
        assert np.allclose(offsets, offsets[0])


class TestServingPlate:
    def test_mean_of_equals(self, config):
        records = [make_record(name=f"m{i}", builtup_fraction=0.25) for i in range(4)]
        assert encode_serving_plate(records, config).segment_angle == pytest.approx(90.0)

    def test_single_record_matches_small_plate(self, config, record):
        assert (encode_serving_plate([record], config).segment_angle
                == encode_small_plate(record, config).segment_angle)

    def test_dinner_subset_under_one_eighth(self, config, records):
        dinner = find_records(records, DINNER_SUBSET)
        spec = encode_serving_plate(dinner, config)
        assert spec.segment_angle < 45.0
        assert not spec.suppressed
        assert spec.members == tuple(DINNER_SUBSET)

    def test_empty(self, config):
        with pytest.raises(EncodingError):
            encode_serving_plate([], config)


class TestRecords:
    def test_zero_coastline(self):
        with pytest.raises(RecordError, match="coastline_length must be > 0"):
            make_record(coastline_length=0.0, artificial_shoreline=0.0)

    def test_artificial_exceeds_coastline(self):
        with pytest.raises(RecordError, match="artificial_shoreline"):
            make_record(artificial_shoreline=6000.0)

    def test_fraction_out_of_range(self):
        with pytest.raises(RecordError, match="builtup_fraction"):
            make_record(builtup_fraction=1.5)

    def test_find_records_unknown(self, records):
        with pytest.raises(InputError, match="Atlantis"):
            find_records(records, ["Tihany", "Atlantis"])

    def test_encoding_is_deterministic(self, config, by_name):
        first = encode_vessel_set(by_name["Tihany"], config)
        second = encode_vessel_set(by_name["Tihany"], config)
        assert first.mug == second.mug
        assert first.jug == second.jug
        assert first.decisions == second.decisions


class TestFixtureOrdinals:
    @pytest.fixture
    def sets(self, config, records):
        return {r.name: encode_vessel_set(r, config) for r in records}

    def test_most_perforations(self, sets):
        best = max(sets, key=lambda n: sets[n].mug.perforation_count)
        assert best == "Balatonkenese"

    def test_shortest_mug(self, sets):
        assert min(sets, key=lambda n: sets[n].mug.height) == "Vonyarcvashegy"

    def test_aszofo(self, sets):
        aszofo = sets["Aszófő"]
        assert aszofo.mug.perforation_count == 0
        assert aszofo.jug.concrete_fraction == 0
        assert aszofo.small_plate.suppressed

    def test_balatonfured_against_badacsonytomaj(self, sets, by_name):
        fured, tomaj = sets["Balatonfüred"], sets["Badacsonytomaj"]
        assert fured.jug.height < tomaj.jug.height
        assert fured.jug.concrete_fraction > tomaj.jug.concrete_fraction
        ratio = by_name["Badacsonytomaj"].reedbed_ratio() / by_name["Balatonfüred"].reedbed_ratio()
        assert ratio == pytest.approx(3.0, rel=1e-12)

    def test_no_spacing_clamps(self, sets):
        assert not any(s.mug.clamped for s in sets.values())

    def test_tihany_outline_overflows(self, sets):
        assert not sets["Tihany"].flat_plate.fits_frame
        assert all(s.flat_plate.fits_frame for n, s in sets.items() if n != "Tihany")
