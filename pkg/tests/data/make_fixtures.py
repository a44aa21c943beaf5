"""Regenerate the frozen pipeline fixtures in this directory.

    python3 tests/data/make_fixtures.py

The ten-building city is written in WGS84 around Montpellier so loading
exercises the projection.  The DEM is a flat grid in the local frame the
loader derives from the building vertices.
"""

import json
from pathlib import Path

import numpy as np

from solarpot.ingest import (
    LocalFrame,
    building_feature,
    collection_frame,
    dumps_doc,
    object_feature,
    read_collection,
    save_dem,
    save_weather,
    section_feature,
)
from solarpot.pitch import fit_pitch_models, write_training_csv
from solarpot.shading import DemRaster
from solarpot.solar import clearsky_year
from solarpot.synthetic import fixture_city, synthetic_pitch_rows

HERE = Path(__file__).parent
LON0, LAT0 = 3.87, 43.6
YEAR = 2021


def _geographic(features, frame):
    out = []
    for f in features:
        f = json.loads(json.dumps(f))
        rings = f["geometry"]["coordinates"]
        for ring in rings:
            lon, lat = frame.inverse(*np.asarray(ring).T)
            ring[:] = [[round(float(a), 10), round(float(b), 10)] for a, b in zip(lon, lat)]
        ridges = f["properties"].get("ridge_segments")
        if ridges:
            pts = np.asarray(ridges, dtype=float).reshape(-1, 2)
            lon, lat = frame.inverse(pts[:, 0], pts[:, 1])
            f["properties"]["ridge_segments"] = np.round(np.column_stack([lon, lat]), 10).reshape(-1, 2, 2).tolist()
        out.append(f)
    return {"type": "FeatureCollection", "features": out}


def main():
    frame = LocalFrame(LON0, LAT0)
    city = fixture_city()
    for name, feats in (("buildings", [building_feature(b) for b in city.buildings]),
                        ("sections", [section_feature(s) for s in city.sections]),
                        ("objects", [object_feature(o) for o in city.objects])):
        (HERE / f"{name}.geojson").write_text(dumps_doc(_geographic(feats, frame)))

    save_weather(HERE / "weather.csv", clearsky_year(YEAR, LAT0, LON0))

    local = collection_frame(read_collection(HERE / "buildings.geojson"))
    print("loader frame:", local)
    n, cell = 201, 20.0
    save_dem(HERE / "dem.asc", DemRaster((-n * cell / 2, -n * cell / 2), cell, np.zeros((n, n))))

    rows = synthetic_pitch_rows(400, seed=7)
    write_training_csv(HERE / "pitch_training.csv", rows)
    model = fit_pitch_models(rows, n_trees=100, max_depth=15, min_leaf=5, seed=0)
    (HERE / "pitch_model.json").write_text(model.to_json() + "\n")

    config = {
        "paths": {"buildings": "buildings.geojson", "sections": "sections.geojson",
                  "objects": "objects.geojson", "weather": "weather.csv", "dem": "dem.asc",
                  "pitch_model": "pitch_model.json"},
        "seed": 0,
        "workers": 1,
    }
    (HERE / "config.json").write_text(json.dumps(config, indent=1) + "\n")


if __name__ == "__main__":
    main()
