"""
Guessing roof pitch from cadastre attributes
============================================

Mean pitch drifts with latitude; a line fitted on per-city means captures
that.  A random forest then learns how roof type, material, height and
shape push a roof above or below the local mean.
"""

import numpy as np

from solarpot.pitch import FeatureVector, PitchModel, fit_pitch_models
from solarpot.synthetic import synthetic_pitch_rows

rows = synthetic_pitch_rows(400, seed=1)
model = fit_pitch_models(rows, n_trees=60, seed=0)
lin = model.linear
print(f"mean pitch ~ {lin.slope:.3f} * latitude + {lin.intercept:.2f}   (leave-one-out R2 {lin.loo_r2:.2f})")

test = synthetic_pitch_rows(200, seed=2)
pred = np.concatenate([model.predict([r.features], r.latitude_deg) for r in test])
print("held-out MAE:", round(float(np.mean(np.abs(pred - [r.pitch_deg for r in test]))), 2), "deg")

# Missing attributes are fine: categoricals fall back to "unknown",
# numbers to the training median.
for f in (FeatureVector("slate", "gable", 9.0, "rectangular", 120.0),
          FeatureVector("membrane", "flat", 25.0, "rectangular", 300.0),
          FeatureVector(None, None, None, None, None)):
    print(f"{f.roof_material!s:>9} {f.roof_type!s:>6} at 43.6N -> {model.predict([f], 43.6)[0]:5.1f} deg,"
          f" at 50.6N -> {model.predict([f], 50.6)[0]:5.1f} deg")

# The JSON form carries everything needed to predict again
again = PitchModel.from_json(model.to_json())
assert np.array_equal(again.predict([r.features for r in test], 45.0), model.predict([r.features for r in test], 45.0))
print("model JSON size:", len(model.to_json()) // 1024, "KiB")
