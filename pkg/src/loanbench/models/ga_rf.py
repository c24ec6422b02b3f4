"""
ga_rf.py
--------
The GA classifier kind: evolve a feature mask with the genetic search from
feature_selection, then train a random forest on the surviving columns.
Prediction applies the stored mask, so callers always pass full-width rows.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .trees import RandomForest


class GASelectedForest:
    """ga_select composed with RandomForest behind one fit/score surface."""

    def __init__(self, ga_params: dict | None = None, rf_params: dict | None = None, random_state=None):
        self.ga_params = dict(ga_params or {})
        self.rf_params = dict(rf_params or {})
        self.random_state = random_state
        self.forest_: RandomForest | None = None

    def fit_dataset(self, train):
        from ..feature_selection import GAParams, ga_select

        root = (
            self.random_state
            if isinstance(self.random_state, np.random.SeedSequence)
            else np.random.SeedSequence(self.random_state)
        )
        ga_seed, rf_seed = root.spawn(2)
        selected = ga_select(train, GAParams(**self.ga_params), seed=ga_seed)
        index = {name: j for j, name in enumerate(train.feature_names)}
        self.selected_features_ = selected
        self.feature_idx_ = np.array([index[name] for name in selected], dtype=np.intp)
        self.n_features_in_ = train.n_features
        self.forest_ = RandomForest(**self.rf_params, random_state=rf_seed)
        self.forest_.fit(train.rows[:, self.feature_idx_], train.labels)
        return self

    def _masked(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DataError(
                f"expected {self.n_features_in_} columns (pre-mask), got {X.shape[1]}"
            )
        return X[:, self.feature_idx_]

    def predict_score(self, X) -> np.ndarray:
        if self.forest_ is None:
            raise DataError("model not fitted")
        return self.forest_.predict_score(self._masked(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "selected_features": list(self.selected_features_),
            "feature_idx": self.feature_idx_.tolist(),
            "n_features_in": int(self.n_features_in_),
            "forest": self.forest_.get_state(),
        }

    def set_state(self, state: dict):
        self.selected_features_ = tuple(state["selected_features"])
        self.feature_idx_ = np.array(state["feature_idx"], dtype=np.intp)
        self.n_features_in_ = int(state["n_features_in"])
        self.forest_ = RandomForest().set_state(state["forest"])
        return self
