"""Random forest of CART trees, written against numpy only.

Trees are grown on bootstrap resamples with a fresh feature subset drawn
at every node, splitting on the exhaustive midpoint threshold that
minimizes Gini impurity.  Each tree consumes its own named substream of
the master seed, so the ensemble is bitwise reproducible for any thread
count.  Ties, both inside leaves and across tree votes, resolve to the
positive class (1, malignant).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FitError, TrainingError
from .rng import substream

THREADS_ENV_VAR = "NODULEMORPH_THREADS"


def resolve_threads(requested: int | None) -> int:
    """Effective worker count: requested (default 1), capped by the env var."""
    threads = 1 if requested is None else int(requested)
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap is not None:
        try:
            cap_value = int(cap)
        except ValueError as exc:
            raise TrainingError(f"{THREADS_ENV_VAR} must be an integer, got {cap!r}") from exc
        if cap_value < 1:
            raise TrainingError(f"{THREADS_ENV_VAR} must be >= 1, got {cap_value}")
        threads = min(threads, cap_value)
    return max(1, threads)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    features_per_split: int | None = None  # None: ceil(sqrt(n_features))
    n_threads: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise TrainingError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise TrainingError("max_depth must be >= 1 or None")
        if self.min_samples_split < 2:
            raise TrainingError("min_samples_split must be >= 2")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise TrainingError("features_per_split must be >= 1 or None")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "features_per_split": self.features_per_split,
        }


def _best_split(x: np.ndarray, y: np.ndarray, idx: np.ndarray, features: np.ndarray):
    """Minimum weighted-Gini midpoint split over the given feature subset.

    Returns (feature, threshold, weighted_gini) or None when no feature in
    the subset has two distinct values.  Ties keep the first candidate in
    (feature, threshold) order, which is deterministic because the subset
    arrives sorted.
    """
    n = idx.shape[0]
    ysub = y[idx]
    best = None
    sizes_l = np.arange(1, n, dtype=np.float64)
    sizes_r = n - sizes_l
    for f in features:
        vals = x[idx, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        valid = v[1:] > v[:-1]
        if not valid.any():
            continue
        cum1 = np.cumsum(ysub[order], dtype=np.float64)
        left1 = cum1[:-1]
        right1 = cum1[-1] - left1
        gini_l = 1.0 - (left1 / sizes_l) ** 2 - ((sizes_l - left1) / sizes_l) ** 2
        gini_r = 1.0 - (right1 / sizes_r) ** 2 - ((sizes_r - right1) / sizes_r) ** 2
        weighted = (sizes_l * gini_l + sizes_r * gini_r) / n
        weighted = np.where(valid, weighted, np.inf)
        pos = int(np.argmin(weighted))
        score = float(weighted[pos])
        if best is None or score < best[2]:
            best = (int(f), float((v[pos] + v[pos + 1]) / 2.0), score)
    return best


def _leaf(ysub: np.ndarray) -> dict:
    count1 = int(ysub.sum())
    count0 = int(ysub.shape[0] - count1)
    return {"leaf": True, "count0": count0, "count1": count1, "vote": 1 if count1 >= count0 else 0}


def _grow_tree(x: np.ndarray, y: np.ndarray, config: ForestConfig, tree_seed_parts, master_seed: int):
    """One bootstrap tree plus its out-of-bag sample indices."""
    rng = substream(master_seed, *tree_seed_parts)
    n, d = x.shape
    boot = rng.integers(0, n, size=n)
    oob = np.setdiff1d(np.arange(n), boot)
    m = config.features_per_split if config.features_per_split is not None else math.ceil(math.sqrt(d))
    m = min(m, d)

    root: dict = {}
    # Stack is LIFO with the left child pushed last, so growth is a fixed
    # depth-first order and the rng stream is identical for any thread count.
    stack = [(root, boot, 0)]
    while stack:
        node, idx, depth = stack.pop()
        ysub = y[idx]
        pure = ysub.min() == ysub.max()
        depth_capped = config.max_depth is not None and depth >= config.max_depth
        if pure or depth_capped or idx.shape[0] < config.min_samples_split:
            node.update(_leaf(ysub))
            continue
        features = np.sort(rng.choice(d, size=m, replace=False))
        split = _best_split(x, y, idx, features)
        if split is None:
            node.update(_leaf(ysub))
            continue
        f, thr, weighted = split
        total1 = float(ysub.sum())
        parent_gini = 1.0 - (total1 / idx.shape[0]) ** 2 - (1.0 - total1 / idx.shape[0]) ** 2
        if weighted >= parent_gini:
            node.update(_leaf(ysub))
            continue
        go_left = x[idx, f] <= thr
        left_node: dict = {}
        right_node: dict = {}
        node.update({"leaf": False, "feature": f, "threshold": thr, "left": left_node, "right": right_node})
        stack.append((right_node, idx[~go_left], depth + 1))
        stack.append((left_node, idx[go_left], depth + 1))
    return root, oob


def _tree_votes(tree: dict, x: np.ndarray) -> np.ndarray:
    """Vote of one tree for every row of x."""
    out = np.zeros(x.shape[0], dtype=np.int64)
    stack = [(tree, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.shape[0] == 0:
            continue
        if node["leaf"]:
            out[idx] = node["vote"]
            continue
        go_left = x[idx, node["feature"]] <= node["threshold"]
        stack.append((node["left"], idx[go_left]))
        stack.append((node["right"], idx[~go_left]))
    return out


class RandomForest:
    """Bagged CART ensemble for binary labels in {0, 1}."""

    def __init__(self, config: ForestConfig | None = None, seed: int = 0):
        self.config = config if config is not None else ForestConfig()
        self.seed = int(seed)
        self.trees: list[dict] = []
        self.n_features_: int | None = None
        self.oob_score_: float | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "RandomForest":
        x = np.ascontiguousarray(x, dtype=np.float64)
        y = np.asarray(y)
        if x.ndim != 2 or x.shape[0] == 0:
            raise FitError(f"need a nonempty 2-D feature matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise FitError(f"labels of shape {y.shape} do not match {x.shape[0]} rows")
        y = y.astype(np.int64)
        if not np.isin(y, (0, 1)).all():
            raise FitError("labels must be 0 or 1")
        if not np.all(np.isfinite(x)):
            raise FitError("feature matrix contains non-finite values")
        self.n_features_ = x.shape[1]

        def build(i: int):
            return _grow_tree(x, y, self.config, ("tree", i), self.seed)

        threads = resolve_threads(self.config.n_threads)
        indices = range(self.config.n_trees)
        if threads == 1:
            grown = [build(i) for i in indices]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                grown = list(pool.map(build, indices))
        self.trees = [tree for tree, _ in grown]

        oob_votes = np.zeros(x.shape[0], dtype=np.int64)
        oob_counts = np.zeros(x.shape[0], dtype=np.int64)
        for tree, oob in grown:
            if oob.shape[0] == 0:
                continue
            oob_votes[oob] += _tree_votes(tree, x[oob])
            oob_counts[oob] += 1
        covered = oob_counts > 0
        if covered.any():
            oob_pred = (2 * oob_votes[covered] >= oob_counts[covered]).astype(np.int64)
            self.oob_score_ = float((oob_pred == y[covered]).mean())
        else:
            self.oob_score_ = None
        return self

    def _require_fitted(self, x: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise FitError("forest is not fitted")
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features_:
            raise FitError(f"expected shape (n, {self.n_features_}), got {x.shape}")
        return x

    def predict_scores(self, x: np.ndarray) -> np.ndarray:
        """Fraction of trees voting 1 for each row."""
        x = self._require_fitted(x)
        votes = np.zeros(x.shape[0], dtype=np.int64)
        for tree in self.trees:
            votes += _tree_votes(tree, x)
        return votes / float(len(self.trees))

    def predict(self, x: np.ndarray) -> np.ndarray:
        """1 where at least half the trees vote 1."""
        return (self.predict_scores(x) >= 0.5).astype(np.int64)

    def to_json(self) -> str:
        if not self.trees:
            raise FitError("forest is not fitted")
        payload = {
            "kind": "random-forest",
            "seed": self.seed,
            "config": self.config.to_dict(),
            "n_features": self.n_features_,
            "oob_score": self.oob_score_,
            "trees": self.trees,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RandomForest":
        payload = json.loads(text)
        if payload.get("kind") != "random-forest":
            raise FitError("not a serialized random forest")
        cfg = payload["config"]
        model = cls(
            config=ForestConfig(
                n_trees=cfg["n_trees"],
                max_depth=cfg["max_depth"],
                min_samples_split=cfg["min_samples_split"],
                features_per_split=cfg["features_per_split"],
            ),
            seed=payload["seed"],
        )
        model.trees = payload["trees"]
        model.n_features_ = payload["n_features"]
        model.oob_score_ = payload["oob_score"]
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RandomForest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
