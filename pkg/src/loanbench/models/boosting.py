"""
boosting.py
-----------
AdaBoost and gradient boosting over the tree engine in trees.py.

AdaBoost is the discrete variant: each round fits a weighted shallow tree,
reweights so the round's learner lands at weighted error exactly 0.5 on the
updated distribution, and the ensemble scores by normalized signed margin.
Gradient boosting minimizes squared error: stage 0 is the target mean and
every later stage fits a regression tree to the current residuals, so the
training loss cannot increase at learning rates up to 1.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .trees import BinnedMatrix, DecisionTree

_PERFECT = 1e-12


class AdaBoost:
    """Discrete AdaBoost with depth-limited entropy trees as weak learners.

    post_round_weighted_errors_ holds, for every completed round, the just
    fit learner's weighted error measured on the updated weights; the
    reweighting rule makes each entry 0.5 up to float rounding. Boosting
    stops early on a perfect learner (nothing left to reweight) or one no
    better than chance (alpha would turn non-positive).
    """

    def __init__(
        self,
        n_rounds: int = 50,
        max_depth: int = 1,
        max_bins: int = 256,
        random_state=None,
    ):
        if n_rounds < 1:
            raise DataError(f"n_rounds must be >= 1, got {n_rounds}")
        self.n_rounds = int(n_rounds)
        self.max_depth = int(max_depth)
        self.max_bins = max_bins
        self.random_state = random_state
        self.learners_: list[DecisionTree] = []
        self.alphas_: list[float] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        n = len(X)
        s = 2.0 * y - 1.0
        w = np.full(n, 1.0 / n)
        binned = BinnedMatrix.build(X, self.max_bins)
        rng = np.random.default_rng(self.random_state)

        self.learners_ = []
        self.alphas_ = []
        self.post_round_weighted_errors_: list[float] = []
        self.prior_ = float(np.mean(y))
        self.converged_ = True

        for _ in range(self.n_rounds):
            stump = DecisionTree(
                max_depth=self.max_depth,
                task="classify",
                max_bins=self.max_bins,
                random_state=rng,
            )
            stump.fit(X, y, sample_weight=w, binned=binned)
            h = np.where(stump.predict_value(X) >= 0.5, 1.0, -1.0)
            miss = h != s
            err = float(w[miss].sum())
            if err < _PERFECT:
                self.learners_.append(stump)
                self.alphas_.append(1.0)
                break
            if err >= 0.5:
                # weak learner no better than chance; boosting has stalled
                break
            alpha = 0.5 * np.log((1.0 - err) / err)
            self.learners_.append(stump)
            self.alphas_.append(float(alpha))
            w = w * np.exp(np.where(miss, alpha, -alpha))
            w /= w.sum()
            self.post_round_weighted_errors_.append(float(w[miss].sum()))
        if not self.learners_:
            self.converged_ = False
        return self

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if not self.learners_:
            return np.full(len(X), self.prior_)
        margin = np.zeros(len(X))
        for alpha, learner in zip(self.alphas_, self.learners_):
            margin += alpha * np.where(learner.predict_value(X) >= 0.5, 1.0, -1.0)
        return (margin / sum(self.alphas_) + 1.0) / 2.0

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "learners": [t.get_state() for t in self.learners_],
            "alphas": list(self.alphas_),
            "prior": self.prior_,
            "converged": self.converged_,
        }

    def set_state(self, state: dict):
        self.learners_ = [DecisionTree().set_state(s) for s in state["learners"]]
        self.alphas_ = [float(a) for a in state["alphas"]]
        self.prior_ = float(state["prior"])
        self.converged_ = bool(state["converged"])
        self.post_round_weighted_errors_ = []
        return self


class GradientBoosting:
    """Least-squares boosting: F0 = mean(y), then residual-fitting
    regression trees, F <- F + lr * tree(x). Scores clip F into [0, 1].

    train_losses_[0] is the stage-0 mean squared error and each later entry
    is the MSE after one more round; with leaf-mean trees and lr <= 1 the
    sequence is non-increasing.
    """

    def __init__(
        self,
        n_rounds: int = 100,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        min_samples_leaf: int = 1,
        max_bins: int = 256,
        random_state=None,
    ):
        if n_rounds < 1:
            raise DataError(f"n_rounds must be >= 1, got {n_rounds}")
        if not 0.0 < learning_rate <= 1.0:
            raise DataError(f"learning_rate must be in (0, 1], got {learning_rate}")
        self.n_rounds = int(n_rounds)
        self.learning_rate = float(learning_rate)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_bins = max_bins
        self.random_state = random_state
        self.trees_: list[DecisionTree] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        binned = BinnedMatrix.build(X, self.max_bins)
        self.f0_ = float(np.mean(y))
        F = np.full(len(y), self.f0_)
        self.trees_ = []
        self.train_losses_ = [float(np.mean((y - F) ** 2))]
        for _ in range(self.n_rounds):
            if self.train_losses_[-1] <= _PERFECT:
                break
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                task="regress",
                max_bins=self.max_bins,
            )
            tree.fit(X, y - F, binned=binned)
            F = F + self.learning_rate * tree.predict_value(X)
            self.trees_.append(tree)
            self.train_losses_.append(float(np.mean((y - F) ** 2)))
        return self

    def predict_raw(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        F = np.full(len(X), self.f0_)
        for tree in self.trees_:
            F += self.learning_rate * tree.predict_value(X)
        return F

    def predict_score(self, X) -> np.ndarray:
        return np.clip(self.predict_raw(X), 0.0, 1.0)

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "f0": self.f0_,
            "learning_rate": self.learning_rate,
            "trees": [t.get_state() for t in self.trees_],
        }

    def set_state(self, state: dict):
        self.f0_ = float(state["f0"])
        self.learning_rate = float(state["learning_rate"])
        self.trees_ = [DecisionTree().set_state(s) for s in state["trees"]]
        self.train_losses_ = []
        return self
