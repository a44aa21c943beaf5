"""
A whole neighbourhood, end to end
=================================

The test fixture is ten buildings around Montpellier in WGS84.  The run
projects them, squares up the sections, orients them, fills in missing
pitches, packs modules, casts horizons and sums up the yearly energy.
The same steps are available from the shell:

    solarpot run --config tests/data/config.json --out report.geojson
    solarpot aggregate --in report.geojson --out cells.geojson --cell-size 50
"""

from collections import Counter
from pathlib import Path

from solarpot.ingest import load_config
from solarpot.pipeline import aggregate, run_pipeline

data = Path(__file__).resolve().parent.parent / "tests" / "data"
result = run_pipeline(load_config(data / "config.json"))
s = result.summary
print(f"{s['n_sections']} sections on {s['n_buildings']} buildings, {s['n_errors']} errors, {s['timing_s']:.2f} s")
print(f"{s['total_modules']} modules, {s['total_potential_kwh_per_year'] / 1000:.1f} MWh/year")

props = [f["properties"] for f in result.report["features"]]
print("pitch sources:", Counter(p.get("pitch_source", "given") for p in props))
print("\nsection    az    pitch  modules  PVout  potential")
for p in props:
    print(f"{p['id']:<9}{p['azimuth_deg']:6.0f}{p['pitch_deg']:8.1f}{p['n_modules']:9d}"
          f"{p['pvout_kwh_per_kwp']:7.0f}{p['potential_kwh_per_year']:11.0f}")

cells = aggregate(result.report, 50.0)["features"]
print(f"\n{len(cells)} grid cells of 50 m:")
for c in cells:
    q = c["properties"]
    print(f"  cell {q['id']:>5}: {q['potential_kwh_per_year'] / 1000:7.1f} MWh/year from {q['building_count']} buildings")
