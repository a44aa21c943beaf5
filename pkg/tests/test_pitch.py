import inspect
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from solarpot.pitch import (
    FeatureEncoder,
    FeatureVector,
    LinearPitchModel,
    PitchModel,
    PitchTrainingRow,
    TrainingError,
    VOCABULARY,
    fit_mean_pitch,
    fit_pitch_models,
    normalized_pitch,
    predict_pitch,
    read_training_csv,
    train_forest,
    write_training_csv,
)


def synthetic_features(rng, n):
    feats = []
    for _ in range(n):
        feats.append(FeatureVector(
            roof_material=str(rng.choice(VOCABULARY["roof_material"][:5])),
            roof_type=str(rng.choice(["flat", "gable", "hipped", "shed"])),
            building_height_m=float(rng.uniform(3, 30)),
            roof_shape=str(rng.choice(VOCABULARY["roof_shape"][:4])),
            footprint_area_m2=float(rng.uniform(50, 400)),
        ))
    return feats


def synthetic_target(feats):
    return np.array([0.01 * f.building_height_m - 0.2 * (f.roof_type == "flat") for f in feats])


# -- linear mean-pitch model -----------------------------------------------------

def test_fit_exact_line():
    lin = fit_mean_pitch([(lat, 0.5 * lat + 10) for lat in (43.0, 45.0, 47.5, 48.6)])
    assert lin.slope == pytest.approx(0.5)
    assert lin.intercept == pytest.approx(10)
    assert lin.loo_r2 == pytest.approx(1.0)
    assert lin.loo_mae == pytest.approx(0.0, abs=1e-9)


def test_fit_two_points_has_no_loo():
    lin = fit_mean_pitch([(43.0, 30.0), (48.0, 40.0)])
    assert lin.slope == pytest.approx(2.0)
    assert lin.loo_r2 is None


def test_fit_identical_latitudes_singular():
    with pytest.raises(ValueError):
        fit_mean_pitch([(45.0, 30.0), (45.0, 35.0), (45.0, 32.0)])


def test_fit_noisy_matches_closed_form_and_loo_r2():
    rng = np.random.default_rng(2024)
    lat = np.array([43.3, 44.8, 45.8, 47.2, 48.6])
    pitch = 2.0 * lat - 55.0 + rng.normal(0, 1.0, 5)
    lin = fit_mean_pitch(list(zip(lat, pitch)))
    # closed-form oracle via the normal equations
    A = np.column_stack([lat, np.ones_like(lat)])
    slope, intercept = np.linalg.solve(A.T @ A, A.T @ pitch)
    assert lin.slope == pytest.approx(slope, rel=1e-12)
    assert lin.intercept == pytest.approx(intercept, rel=1e-12)
    assert lin.loo_r2 > 0.8


# -- normalized pitch / combination ---------------------------------------

@pytest.mark.parametrize("p, m, expected", [(30, 25, 0.2), (25, 25, 0.0), (0, 25, -1.0)])
def test_normalized_pitch(p, m, expected):
    assert normalized_pitch(p, m) == pytest.approx(expected)


def test_normalized_pitch_rejects_nonpositive_mean():
    with pytest.raises(ValueError):
        normalized_pitch(30, 0)


def test_predict_pitch_examples():
    f = FeatureVector()
    lin = LinearPitchModel(slope=0.0, intercept=25.0)
    assert predict_pitch(f, 45.0, lin, 0.0) == pytest.approx(25.0)
    assert predict_pitch(f, 45.0, lin, 0.2) == pytest.approx(30.0)
    assert predict_pitch(f, 45.0, lin, -2.0) == 0.0
    assert predict_pitch(f, 45.0, lin, 5.0) == 75.0


@given(p=st.floats(0, 89.9), m=st.floats(0.1, 80))
def test_round_trip(p, m):
    assert m * (1 + normalized_pitch(p, m)) == pytest.approx(p, abs=1e-12 * max(1, p, m))


# -- forest -----------------------------------------------------------------

def test_forest_default_sizes():
    rng = np.random.default_rng(0)
    feats = synthetic_features(rng, 40)
    forest, _ = train_forest(feats, synthetic_target(feats), n_trees=3)
    assert (forest.max_depth, forest.min_leaf) == (15, 5)
    defaults = inspect.signature(train_forest).parameters
    assert defaults["n_trees"].default == 100
    assert defaults["max_depth"].default == 15


def test_forest_constant_target():
    feats = synthetic_features(np.random.default_rng(1), 60)
    forest, enc = train_forest(feats, np.full(60, 0.3), n_trees=10)
    pred = forest.predict_matrix(enc.transform(synthetic_features(np.random.default_rng(2), 30)))
    assert pred == pytest.approx(np.full(30, 0.3), abs=1e-15)


def test_forest_rejects_small_or_empty():
    with pytest.raises(TrainingError):
        train_forest([], [])
    feats = synthetic_features(np.random.default_rng(1), 10)
    with pytest.raises(TrainingError):
        train_forest(feats, np.zeros(10))


def test_forest_leaves_respect_min_leaf():
    feats = synthetic_features(np.random.default_rng(3), 200)
    forest, _ = train_forest(feats, synthetic_target(feats), n_trees=5, seed=9)
    for t in forest.trees:
        leaves = t.feature == -1
        assert np.all(t.n_samples[leaves] >= 5)
        assert t.feature.size == 1 or np.all(t.left[~leaves] > 0)


def test_forest_beats_ols_on_same_features():
    rng = np.random.default_rng(11)
    train, test = synthetic_features(rng, 500), synthetic_features(rng, 300)
    y_train, y_test = synthetic_target(train), synthetic_target(test)
    forest, enc = train_forest(train, y_train, seed=5)
    Xtr, Xte = enc.transform(train), enc.transform(test)
    forest_mae = np.mean(np.abs(forest.predict_matrix(Xte) - y_test))
    # baseline: OLS with intercept on the identical encoded matrix
    A = np.column_stack([Xtr, np.ones(len(Xtr))])
    coef, *_ = np.linalg.lstsq(A, y_train, rcond=None)
    ols_mae = np.mean(np.abs(np.column_stack([Xte, np.ones(len(Xte))]) @ coef - y_test))
    assert forest_mae < ols_mae


def test_forest_deterministic():
    rng = np.random.default_rng(4)
    feats = synthetic_features(rng, 120)
    y = synthetic_target(feats)
    f1, enc = train_forest(feats, y, n_trees=20, seed=42)
    f2, _ = train_forest(feats, y, n_trees=20, seed=42)
    X = enc.transform(feats)
    assert np.array_equal(f1.predict_matrix(X), f2.predict_matrix(X))


def test_forest_is_mean_of_trees():
    feats = synthetic_features(np.random.default_rng(6), 100)
    forest, enc = train_forest(feats, synthetic_target(feats), n_trees=10)
    X = enc.transform(feats)
    per_tree = np.array([t.predict(X) for t in forest.trees])
    full = forest.predict_matrix(X)
    assert np.allclose(full, per_tree.mean(axis=0))
    # dropping one tree's contribution moves the output by at most max|tree| / n_trees
    bound = np.abs(per_tree).max() / forest.n_trees
    for k in range(forest.n_trees):
        without = np.delete(per_tree, k, axis=0).sum(axis=0) / forest.n_trees
        assert np.all(np.abs(full - without) <= bound + 1e-12)


def test_missing_values_use_unknown_and_median():
    f = FeatureVector(roof_material="gold", building_height_m=None)
    assert f.roof_material == "unknown"
    enc = FeatureEncoder.fit([FeatureVector(building_height_m=h) for h in (4.0, 6.0, 20.0)])
    X = enc.transform([f])
    assert X[0, 2] == 6.0


def test_invalid_numeric_feature():
    with pytest.raises(ValueError):
        FeatureVector(building_height_m=-1.0)


# -- combined model, persistence -----------------------------------------

def make_rows(rng, n=200):
    feats = synthetic_features(rng, n)
    lats = rng.choice([43.6, 44.8, 47.2, 48.1, 48.6], n)
    mean = 1.5 * lats - 40
    norm = synthetic_target(feats)
    return [PitchTrainingRow(f, float(l), float(np.clip(m * (1 + t), 0, 89)))
            for f, l, m, t in zip(feats, lats, mean, norm)]


def test_fit_pitch_models_and_json_round_trip(tmp_path):
    rows = make_rows(np.random.default_rng(8))
    model = fit_pitch_models(rows, n_trees=15, seed=3)
    assert model.linear.slope == pytest.approx(1.5, abs=0.3)
    feats = [r.features for r in rows[:30]]
    p1 = model.predict(feats, 45.0)
    loaded = PitchModel.from_json(model.to_json())
    assert np.array_equal(loaded.predict(feats, 45.0), p1)
    doc = json.loads(model.to_json())
    assert {"linear", "vocabulary", "seed", "forest", "medians"} <= doc.keys()
    assert np.all((p1 >= 0) & (p1 <= 75))


def test_training_csv_round_trip(tmp_path):
    rows = make_rows(np.random.default_rng(9), 25)
    path = tmp_path / "train.csv"
    write_training_csv(path, rows)
    assert path.read_text().splitlines()[0] == (
        "latitude_deg,roof_material,roof_type,building_height_m,roof_shape,footprint_area_m2,pitch_deg")
    assert read_training_csv(path) == rows
