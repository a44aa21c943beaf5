"""Roof pitch estimation.

Mean pitch is a straight-line function of latitude; a random forest predicts
the normalized deviation ``(pitch - mean) / mean`` from building attributes.
The forest is written from scratch on numpy so that the split rules
(one-vs-rest equality for categoricals, thresholds for numerics) and the
per-tree seeding are under our control.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

UNKNOWN = "unknown"

VOCABULARY = {
    "roof_material": ("tile", "slate", "metal", "concrete", "membrane", "other", UNKNOWN),
    "roof_type": ("flat", "gable", "hipped", "shed", "mansard", "other", UNKNOWN),
    "roof_shape": ("rectangular", "l_shaped", "t_shaped", "irregular", UNKNOWN),
}
FEATURES = ("roof_material", "roof_type", "building_height_m", "roof_shape", "footprint_area_m2")
CATEGORICAL = np.array([name in VOCABULARY for name in FEATURES])
NUMERIC = tuple(name for name in FEATURES if name not in VOCABULARY)

TRAINING_HEADER = ["latitude_deg", "roof_material", "roof_type", "building_height_m",
                   "roof_shape", "footprint_area_m2", "pitch_deg"]

MAX_PITCH_DEG = 75.0


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    roof_material: str = UNKNOWN
    roof_type: str = UNKNOWN
    building_height_m: Optional[float] = None
    roof_shape: str = UNKNOWN
    footprint_area_m2: Optional[float] = None

    def __post_init__(self):
        for name in NUMERIC:
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        for name, vocab in VOCABULARY.items():
            v = getattr(self, name)
            if v is None or v == "" or v not in vocab:
                object.__setattr__(self, name, UNKNOWN)

    @classmethod
    def from_mapping(cls, props: dict) -> "FeatureVector":
        kw = {}
        for name in FEATURES:
            v = props.get(name)
            if name in VOCABULARY:
                kw[name] = UNKNOWN if v in (None, "") else str(v)
            else:
                kw[name] = None if v in (None, "") else float(v)
        return cls(**kw)


@dataclass(frozen=True)
class PitchTrainingRow:
    features: FeatureVector
    latitude_deg: float
    pitch_deg: float

    def __post_init__(self):
        if not 0 <= self.pitch_deg < 90:
            raise ValueError(f"pitch_deg must be in [0, 90), got {self.pitch_deg}")


@dataclass(frozen=True)
class LinearPitchModel:
    slope: float
    intercept: float
    loo_r2: Optional[float] = None
    loo_mae: Optional[float] = None

    def __call__(self, latitude_deg):
        return self.slope * latitude_deg + self.intercept


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 1e-12 * max(1.0, float(np.sum(x ** 2))):
        raise ValueError("mean-pitch fit needs at least two distinct latitudes")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    return slope, float(ym - slope * xm)


def fit_mean_pitch(city_means: Sequence[tuple[float, float]]) -> LinearPitchModel:
    """Least-squares line of mean pitch against latitude.

    With three or more points the leave-one-out R^2 and MAE are attached.
    """
    data = np.asarray(city_means, dtype=float).reshape(-1, 2)
    x, y = data[:, 0], data[:, 1]
    if len(np.unique(x)) < 2:
        raise ValueError("mean-pitch fit needs at least two distinct latitudes")
    slope, intercept = _ols(x, y)

    loo_r2 = loo_mae = None
    if len(x) >= 3:
        preds = np.empty_like(y)
        for i in range(len(x)):
            keep = np.arange(len(x)) != i
            s, b = _ols(x[keep], y[keep])
            preds[i] = s * x[i] + b
        resid = y - preds
        loo_r2 = float(1 - np.sum(resid ** 2) / np.sum((y - y.mean()) ** 2))
        loo_mae = float(np.mean(np.abs(resid)))
    return LinearPitchModel(slope, intercept, loo_r2, loo_mae)


def normalized_pitch(pitch_deg, mean_pitch_deg):
    if np.any(np.asarray(mean_pitch_deg) <= 0):
        raise ValueError("mean pitch must be > 0")
    return (pitch_deg - mean_pitch_deg) / mean_pitch_deg


# --------------------------------------------------------------------------
# Regression trees and forest


@dataclass
class Tree:
    """Flat array encoding; ``feature == -1`` marks a leaf.

    Categorical nodes send a row left when its code equals ``threshold``;
    numeric nodes when the value is ``<= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return self.value[node]
            r, n, fa = rows[active], node[active], f[active]
            x = X[r, fa]
            thr = self.threshold[n]
            go_left = np.where(CATEGORICAL[fa], x == thr, x <= thr)
            node[active] = np.where(go_left, self.left[n], self.right[n])

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("feature", "threshold", "left", "right", "value", "n_samples")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=float), np.asarray(d["n_samples"], dtype=np.int64))


def _best_split(x: np.ndarray, y: np.ndarray, categorical: bool, min_leaf: int):
    """Return ``(sse, threshold)`` of the best split on one feature, or None."""
    n = len(y)
    total, total_sq = y.sum(), np.dot(y, y)
    if categorical:
        codes, inv = np.unique(x, return_inverse=True)
        if len(codes) < 2:
            return None
        cnt = np.bincount(inv).astype(float)
        sums = np.bincount(inv, weights=y)
        ok = (cnt >= min_leaf) & (n - cnt >= min_leaf)
        if not ok.any():
            return None
        sse = total_sq - sums ** 2 / cnt - (total - sums) ** 2 / np.maximum(n - cnt, 1)
        sse[~ok] = np.inf
        k = int(np.argmin(sse))
        return float(sse[k]), float(codes[k])

    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    csum = np.cumsum(ys)[:-1]
    n_left = np.arange(1, n, dtype=float)
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not valid.any():
        return None
    sse = total_sq - csum ** 2 / n_left - (total - csum) ** 2 / (n - n_left)
    sse[~valid] = np.inf
    k = int(np.argmin(sse))
    return float(sse[k]), float((xs[k] + xs[k + 1]) / 2)


def build_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_depth: int,
               min_leaf: int, max_features: int) -> Tree:
    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[idx])))
        n_samples.append(len(idx))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yi = y[idx]
        if depth >= max_depth or len(idx) < 2 * min_leaf or np.ptp(yi) <= 1e-15:
            continue
        feats = rng.choice(X.shape[1], size=max_features, replace=False)
        best = None
        for f in feats:
            found = _best_split(X[idx, f], yi, bool(CATEGORICAL[f]), min_leaf)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], int(f))
        if best is None:
            continue
        _, thr, f = best
        xf = X[idx, f]
        mask = xf == thr if CATEGORICAL[f] else xf <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value), np.array(n_samples, dtype=np.int64))


@dataclass
class Forest:
    trees: list
    n_trees: int = 100
    max_depth: int = 15
    min_leaf: int = 5
    seed: int = 0

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "max_depth": self.max_depth, "min_leaf": self.min_leaf,
                "seed": self.seed, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls([Tree.from_dict(t) for t in d["trees"]], d["n_trees"], d["max_depth"],
                   d["min_leaf"], d["seed"])


def train_forest_matrix(X: np.ndarray, y: np.ndarray, n_trees: int = 100, max_depth: int = 15,
                        min_leaf: int = 5, seed: int = 0, n_jobs: int = 1) -> Forest:
    """Bagged regression trees on an encoded feature matrix.

    Tree ``i`` draws its bootstrap sample and feature subsets from
    ``default_rng(seed + i)``, so results do not depend on ``n_jobs``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise TrainingError("no training rows")
    if not np.all(np.isfinite(y)):
        raise TrainingError("non-finite targets")
    max_features = math.ceil(math.sqrt(X.shape[1]))

    def fit_one(i):
        rng = np.random.default_rng(seed + i)
        boot = rng.integers(0, len(y), size=len(y))
        return build_tree(X[boot], y[boot], rng, max_depth, min_leaf, max_features)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            trees = list(pool.map(fit_one, range(n_trees)))
    else:
        trees = [fit_one(i) for i in range(n_trees)]
    return Forest(trees, n_trees, max_depth, min_leaf, seed)


# --------------------------------------------------------------------------
# Feature encoding and the combined model


@dataclass
class FeatureEncoder:
    vocabulary: dict = field(default_factory=lambda: {k: list(v) for k, v in VOCABULARY.items()})
    medians: dict = field(default_factory=dict)

    @classmethod
    def fit(cls, features: Sequence[FeatureVector]) -> "FeatureEncoder":
        medians = {}
        for name in NUMERIC:
            vals = [getattr(f, name) for f in features if getattr(f, name) is not None]
            medians[name] = float(np.median(vals)) if vals else 0.0
        return cls(medians=medians)

    def transform(self, features: Sequence[FeatureVector]) -> np.ndarray:
        X = np.empty((len(features), len(FEATURES)))
        for i, f in enumerate(features):
            for j, name in enumerate(FEATURES):
                v = getattr(f, name)
                if name in self.vocabulary:
                    vocab = self.vocabulary[name]
                    X[i, j] = vocab.index(v if v in vocab else UNKNOWN)
                else:
                    X[i, j] = self.medians.get(name, 0.0) if v is None else v
        return X


def train_forest(features: Sequence[FeatureVector], targets: Sequence[float], n_trees: int = 100,
                 max_depth: int = 15, min_leaf: int = 5, seed: int = 0, n_jobs: int = 1,
                 encoder: Optional[FeatureEncoder] = None) -> tuple[Forest, FeatureEncoder]:
    if len(features) < 20:
        raise TrainingError(f"need at least 20 training rows, got {len(features)}")
    encoder = encoder or FeatureEncoder.fit(features)
    forest = train_forest_matrix(encoder.transform(features), targets, n_trees, max_depth,
                                 min_leaf, seed, n_jobs)
    return forest, encoder


def predict_pitch(features: FeatureVector, latitude_deg: float, lin: LinearPitchModel,
                  forest_prediction: float) -> float:
    """Absolute pitch from the latitude line and a normalized-pitch prediction, clamped to [0, 75]."""
    pitch = lin(latitude_deg) * (1.0 + forest_prediction)
    return float(min(max(pitch, 0.0), MAX_PITCH_DEG))


@dataclass
class PitchModel:
    linear: LinearPitchModel
    forest: Forest
    encoder: FeatureEncoder
    seed: int = 0

    def predict_normalized(self, features: Sequence[FeatureVector]) -> np.ndarray:
        return self.forest.predict_matrix(self.encoder.transform(features))

    def predict(self, features: Sequence[FeatureVector], latitude_deg: float) -> np.ndarray:
        norm = self.predict_normalized(features)
        return np.array([predict_pitch(f, latitude_deg, self.linear, p) for f, p in zip(features, norm)])

    def to_json(self) -> str:
        doc = {
            "format": "solarpot-pitch-model",
            "version": 1,
            "seed": self.seed,
            "features": list(FEATURES),
            "linear": {"slope": self.linear.slope, "intercept": self.linear.intercept,
                       "loo_r2": self.linear.loo_r2, "loo_mae": self.linear.loo_mae},
            "vocabulary": self.encoder.vocabulary,
            "medians": self.encoder.medians,
            "forest": self.forest.to_dict(),
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "PitchModel":
        doc = json.loads(text)
        if doc.get("format") != "solarpot-pitch-model":
            raise ValueError("not a pitch model document")
        lin = LinearPitchModel(**doc["linear"])
        enc = FeatureEncoder(vocabulary=doc["vocabulary"], medians=doc["medians"])
        return cls(lin, Forest.from_dict(doc["forest"]), enc, doc["seed"])


def fit_pitch_models(rows: Sequence[PitchTrainingRow], n_trees: int = 100, max_depth: int = 15,
                     min_leaf: int = 5, seed: int = 0, n_jobs: int = 1) -> PitchModel:
    """Fit the latitude line on per-latitude means, then the forest on normalized pitch."""
    groups: dict = {}
    for r in rows:
        groups.setdefault(round(r.latitude_deg, 6), []).append(r.pitch_deg)
    lin = fit_mean_pitch(sorted((lat, float(np.mean(p))) for lat, p in groups.items()))
    means = np.array([lin(r.latitude_deg) for r in rows])
    targets = normalized_pitch(np.array([r.pitch_deg for r in rows]), means)
    forest, enc = train_forest([r.features for r in rows], targets, n_trees, max_depth,
                               min_leaf, seed, n_jobs)
    return PitchModel(lin, forest, enc, seed)


def read_training_csv(path) -> list[PitchTrainingRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRAINING_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for line in reader:
            rows.append(PitchTrainingRow(FeatureVector.from_mapping(line),
                                         float(line["latitude_deg"]), float(line["pitch_deg"])))
    return rows


def write_training_csv(path, rows: Sequence[PitchTrainingRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAINING_HEADER)
        for r in rows:
            f = r.features
            w.writerow([r.latitude_deg, f.roof_material, f.roof_type,
                        "" if f.building_height_m is None else f.building_height_m, f.roof_shape,
                        "" if f.footprint_area_m2 is None else f.footprint_area_m2, r.pitch_deg])
