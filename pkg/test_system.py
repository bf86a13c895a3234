"""
System Testing Script
Runs the full tableware pipeline on the constructed fixture
"""

import sys
import os
import tempfile
import time
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import json
from dataclasses import replace

from src.cli import main
from src.config import Config, EncoderConfig
from src.encoder import encode_mug
from src.fixture import DINNER_SUBSET, fixture_records, write_fixture
from src.mesh_export import export_stl, read_stl
from src.vessels import build_mug
from utils.mesh_metrics import mesh_stats


def banner(title):
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


def test_config():
    """Test configuration module"""
    banner("Testing Configuration Module")

    config = Config()
    print(f"✓ Mug diameter: {config.get('mug_diameter')} mm")
    assert config.validate() == []
    print("✓ Defaults validate")

    encoder = EncoderConfig.from_config(config)
    assert encoder.pivot_height == encoder.deep_plate_height
    print("✓ Encoder constants built")

    print("✅ Configuration module PASSED")


def test_genus_sweep():
    """Perforated mugs with 0..20 holes"""
    banner("Testing Perforation Genus Law")

    config = EncoderConfig()
    record = fixture_records()[0]
    start = time.perf_counter()
    for count in range(21):
        spec = encode_mug(replace(record, reedbed_length=1300.0, reedbed_cuts=count,
                                  avg_cut_distance=60.0), config)
        stats = mesh_stats(build_mug(spec, config))
        assert stats.watertight and stats.euler == 2 - 2 * count, count
    elapsed = time.perf_counter() - start
    print(f"✓ 21 mugs, euler = 2 - 2n throughout ({elapsed:.1f} s)")
    assert elapsed < 30

    print("✅ Genus law PASSED")


def test_full_pipeline():
    """derive -> generate -> validate -> report on all eleven municipalities"""
    banner("Testing Full Pipeline")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        paths = write_fixture(tmp / "fixture")
        print(f"✓ Fixture written to {tmp / 'fixture'}")

        derived = tmp / "derived.csv"
        code = main(["derive", "--builtup", str(paths["builtup"]), "--zones", str(paths["zones"]),
                     "--dem", str(paths["dem"]), "--profiles", str(paths["profiles"]),
                     "--out", str(derived)])
        assert code == 0

        out = tmp / "out"
        start = time.perf_counter()
        code = main(["generate", "--records", str(paths["records"]),
                     "--shorelines", str(paths["shorelines"]), "--derived", str(derived),
                     "--out", str(out), "--serving-subset", f"@{paths['dinner']}"])
        elapsed = time.perf_counter() - start
        assert code == 0
        print(f"✓ 11 sets generated in {elapsed:.1f} s")
        assert elapsed < 60

        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        sets = {m["name"]: m["vessels"] for m in manifest["municipalities"]}
        assert len(sets) == 11

        perforations = {n: v["mug"]["spec"]["perforation_count"] for n, v in sets.items()}
        heights = {n: v["mug"]["spec"]["height"] for n, v in sets.items()}
        assert max(perforations, key=perforations.get) == "Balatonkenese"
        assert min(heights, key=heights.get) == "Vonyarcvashegy"
        assert perforations["Aszófő"] == 0
        assert sets["Aszófő"]["jug"]["spec"]["concrete_fraction"] == 0
        assert sets["Aszófő"]["small_plate"]["spec"]["suppressed"]
        print("✓ Fixture orderings reproduced")

        serving = manifest["serving_plate"]["spec"]
        assert serving["members"] == DINNER_SUBSET
        assert serving["segment_angle"] < 45
        print(f"✓ Serving plate segment {serving['segment_angle']:.2f}°")

        firing = manifest["materials"]["firing_energy_kwh"]
        assert 50 <= firing <= 600
        print(f"✓ Firing estimate {firing:.0f} kWh")

        for stl in sorted(out.rglob("*.stl")):
            data = stl.read_bytes()
            assert export_stl(read_stl(data, str(stl))) == data, stl
        print("✓ Every STL re-exports byte-identically")

        assert main(["validate", "--out", str(out)]) == 0
        print("✓ Output tree validates")

        assert main(["report", "--out", str(out)]) == 0
        booklet = (out / "booklet.md").read_text(encoding="utf-8")
        for name in sets:
            assert f"## {name}" in booklet
        print("✓ Booklet names every municipality")

    print("✅ Full pipeline PASSED")


def run_all_tests():
    """Run all system tests"""
    print("\n" + "=" * 70)
    print("  BALATON TABLEWARE SYSTEM TESTS")
    print("=" * 70)

    tests = [
        ("Configuration", test_config),
        ("Genus Law", test_genus_sweep),
        ("Full Pipeline", test_full_pipeline),
    ]

    passed = 0
    failed = 0

    for name, test_func in tests:
        try:
            test_func()
            passed += 1
        except Exception as e:
            print(f"❌ {name} FAILED: {e}")
            import traceback
            traceback.print_exc()
            failed += 1

    # Summary
    print("\n" + "=" * 70)
    print("  TEST SUMMARY")
    print("=" * 70)
    print(f"Total Tests: {len(tests)}")
    print(f"✅ Passed: {passed}")
    print(f"❌ Failed: {failed}")

    if failed == 0:
        print("\n🎉 ALL TESTS PASSED!")
    else:
        print(f"\n⚠️  {failed} test(s) failed. Please review errors above.")

    return failed == 0


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
