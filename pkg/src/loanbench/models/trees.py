"""
trees.py
--------
Decision-tree engine plus the two forest ensembles built on it.

Split search runs on a binned view of the feature matrix: each column is
quantized into at most ``max_bins`` bins once, and per-node split scoring is
a pair of np.bincount calls plus prefix sums over the bins. When a column
has no more unique values than bins the quantization is exact (every unique
value gets its own bin and candidate thresholds sit halfway between adjacent
values), so small datasets see the same trees an exhaustive scan would
produce. Wide columns fall back to quantile bins, trading exact thresholds
for bounded split cost.

Trees grow depth-first while a node is impure, has enough rows, and any
candidate cut keeps both children non-empty; zero-gain splits are allowed on
impure classification nodes so the tree can still memorize parity-style
label patterns. Nodes are stored as parallel arrays and prediction walks
them vectorized, one level per iteration.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError

_SPLIT_EPS = 1e-12


class BinnedMatrix:
    """Per-column quantization of a feature matrix.

    cuts[j] holds the ascending candidate thresholds for column j;
    codes[:, j] holds each row's bin index (count of cuts strictly below,
    with equality binned left so raw and binned comparisons agree).
    """

    def __init__(self, codes: np.ndarray, cuts: list[np.ndarray]):
        self.codes = codes
        self.cuts = cuts
        self.n_bins = np.array([len(c) + 1 for c in cuts])

    @classmethod
    def build(cls, X: np.ndarray, max_bins: int = 256) -> "BinnedMatrix":
        if not 2 <= max_bins <= 256:
            raise DataError(f"max_bins must be in [2, 256], got {max_bins}")
        n, d = X.shape
        codes = np.zeros((n, d), dtype=np.uint8)
        cuts: list[np.ndarray] = []
        for j in range(d):
            col = X[:, j]
            uniq = np.unique(col)
            if len(uniq) <= max_bins:
                cj = (uniq[:-1] + uniq[1:]) / 2.0
            else:
                qs = np.quantile(col, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
                cj = np.unique(qs)
            cuts.append(cj)
            if len(cj):
                codes[:, j] = np.searchsorted(cj, col, side="left")
        return cls(codes, cuts)


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    """Elementwise H(p) in bits with the 0 log 0 = 0 convention."""
    p = np.clip(p, 0.0, 1.0)
    out = np.zeros_like(p)
    mask = (p > 0.0) & (p < 1.0)
    pm = p[mask]
    out[mask] = -(pm * np.log2(pm) + (1.0 - pm) * np.log2(1.0 - pm))
    return out


class DecisionTree:
    """Binary-split tree; entropy criterion for classification, squared
    error for regression.

    Parameters
    ----------
    task : "classify" or "regress".
    splitter : "best" scans every bin boundary of each candidate feature;
        "random" draws one uniform threshold per candidate feature inside
        the node's value range and keeps the best of those random cuts.
    max_features : per-split candidate feature count; None means all,
        "sqrt" means ceil(sqrt(d)).
    """

    def __init__(
        self,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        min_samples_leaf: int = 1,
        max_features=None,
        task: str = "classify",
        splitter: str = "best",
        max_bins: int = 256,
        random_state=None,
    ):
        if task not in ("classify", "regress"):
            raise DataError(f"unknown task {task!r}")
        if splitter not in ("best", "random"):
            raise DataError(f"unknown splitter {splitter!r}")
        self.max_depth = max_depth
        self.min_samples_split = max(2, int(min_samples_split))
        self.min_samples_leaf = max(1, int(min_samples_leaf))
        self.max_features = max_features
        self.task = task
        self.splitter = splitter
        self.max_bins = max_bins
        self.random_state = random_state
        self.feature_: np.ndarray | None = None

    # -- fitting ---------------------------------------------------------

    def fit(self, X, y, sample_weight=None, binned: BinnedMatrix | None = None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        if len(y) != n:
            raise DataError(f"{n} rows but {len(y)} targets")
        if sample_weight is None:
            w = np.ones(n)
        else:
            w = np.asarray(sample_weight, dtype=np.float64)
            if (w < 0).any():
                raise DataError("negative sample weights")
        keep = np.flatnonzero(w > 0)
        if len(keep) == 0:
            raise DataError("no rows with positive weight")

        if self.splitter == "best" and binned is None:
            binned = BinnedMatrix.build(X, self.max_bins)
        rng = np.random.default_rng(self.random_state)
        mtry = self._resolve_mtry(d)

        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        importance = np.zeros(d)

        wy = w * y
        wyy = wy * y
        max_depth = np.inf if self.max_depth is None else self.max_depth
        # stack entries: (row index array, depth, parent node id, went left)
        stack = [(keep, 0, -1, False)]
        while stack:
            rows, depth, parent, went_left = stack.pop()
            node_id = len(feature)
            if parent >= 0:
                if went_left:
                    left[parent] = node_id
                else:
                    right[parent] = node_id
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)

            w_node = w[rows].sum()
            wy_node = wy[rows].sum()
            node_value = wy_node / w_node
            if self.task == "classify":
                node_value = min(1.0, max(0.0, node_value))
            value.append(node_value)

            y_rows = y[rows]
            pure = y_rows.min() == y_rows.max()
            if pure or depth >= max_depth or len(rows) < self.min_samples_split:
                continue

            if self.splitter == "best":
                split = self._best_split(binned, rows, w, wy, wyy, rng, mtry, d)
            else:
                split = self._random_split(X, rows, w, wy, wyy, rng, mtry, d)
            if split is None:
                continue
            feat, thr, gain, left_mask = split
            if self.task == "regress" and gain <= _SPLIT_EPS:
                continue
            feature[node_id] = feat
            threshold[node_id] = thr
            importance[feat] += max(gain, 0.0)
            stack.append((rows[~left_mask], depth + 1, node_id, False))
            stack.append((rows[left_mask], depth + 1, node_id, True))

        self.feature_ = np.array(feature, dtype=np.intp)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left, dtype=np.intp)
        self.right_ = np.array(right, dtype=np.intp)
        self.value_ = np.array(value)
        self.n_features_ = d
        self.feature_importance_raw_ = importance
        return self

    def _resolve_mtry(self, d: int) -> int:
        if self.max_features is None:
            return d
        if self.max_features == "sqrt":
            return int(np.ceil(np.sqrt(d)))
        m = int(self.max_features)
        if not 1 <= m <= d:
            raise DataError(f"max_features {m} outside [1, {d}]")
        return m

    def _candidate_features(self, rng, mtry: int, d: int) -> np.ndarray:
        if mtry >= d:
            return np.arange(d)
        return np.sort(rng.choice(d, size=mtry, replace=False))

    def _best_split(self, binned, rows, w, wy, wyy, rng, mtry, d):
        w_rows = w[rows]
        wy_rows = wy[rows]
        W = w_rows.sum()
        WY = wy_rows.sum()
        regress = self.task == "regress"
        if regress:
            wyy_rows = wyy[rows]
            WYY = wyy_rows.sum()
            parent = WYY - WY * WY / W
        else:
            parent = W * _binary_entropy(np.array([WY / W]))[0]

        msl = self.min_samples_leaf
        best_score = np.inf
        best = None
        for feat in self._candidate_features(rng, mtry, d):
            nb = int(binned.n_bins[feat])
            if nb < 2:
                continue
            col = binned.codes[rows, feat]
            hist_n = np.bincount(col, minlength=nb)
            hist_w = np.bincount(col, weights=w_rows, minlength=nb)
            hist_wy = np.bincount(col, weights=wy_rows, minlength=nb)
            NL = np.cumsum(hist_n)[:-1]
            WL = np.cumsum(hist_w)[:-1]
            WYL = np.cumsum(hist_wy)[:-1]
            NR = len(rows) - NL
            WR = W - WL
            WYR = WY - WYL
            valid = (NL >= msl) & (NR >= msl) & (WL > 0) & (WR > 0)
            if not valid.any():
                continue
            if regress:
                hist_wyy = np.bincount(col, weights=wyy_rows, minlength=nb)
                WYYL = np.cumsum(hist_wyy)[:-1]
                with np.errstate(divide="ignore", invalid="ignore"):
                    child = (WYYL - WYL * WYL / WL) + ((WYY - WYYL) - WYR * WYR / WR)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    child = WL * _binary_entropy(WYL / WL) + WR * _binary_entropy(WYR / WR)
            child = np.where(valid, child, np.inf)
            b = int(np.argmin(child))
            if child[b] < best_score:
                best_score = child[b]
                best = (int(feat), float(binned.cuts[feat][b]), b)
        if best is None:
            return None
        feat, thr, b = best
        left_mask = binned.codes[rows, feat] <= b
        return feat, thr, parent - best_score, left_mask

    def _random_split(self, X, rows, w, wy, wyy, rng, mtry, d):
        w_rows = w[rows]
        wy_rows = wy[rows]
        W = w_rows.sum()
        WY = wy_rows.sum()
        regress = self.task == "regress"
        if regress:
            wyy_rows = wyy[rows]
            WYY = wyy_rows.sum()
            parent = WYY - WY * WY / W
        else:
            parent = W * _binary_entropy(np.array([WY / W]))[0]

        msl = self.min_samples_leaf
        best_score = np.inf
        best = None
        for feat in self._candidate_features(rng, mtry, d):
            col = X[rows, feat]
            lo = col.min()
            hi = col.max()
            if hi <= lo:
                continue
            thr = rng.uniform(lo, hi)
            mask = col <= thr
            nl = int(mask.sum())
            if nl < msl or len(rows) - nl < msl:
                continue
            WL = w_rows[mask].sum()
            WR = W - WL
            if WL <= 0 or WR <= 0:
                continue
            WYL = wy_rows[mask].sum()
            WYR = WY - WYL
            if regress:
                WYYL = wyy_rows[mask].sum()
                child = (WYYL - WYL * WYL / WL) + ((WYY - WYYL) - WYR * WYR / WR)
            else:
                child = WL * _binary_entropy(np.array([WYL / WL]))[0] + WR * _binary_entropy(
                    np.array([WYR / WR])
                )[0]
            if child < best_score:
                best_score = child
                best = (int(feat), float(thr), mask)
        if best is None:
            return None
        feat, thr, left_mask = best
        return feat, thr, parent - best_score, left_mask

    # -- prediction ------------------------------------------------------

    def _apply(self, X: np.ndarray) -> np.ndarray:
        if self.feature_ is None:
            raise DataError("tree not fitted")
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(len(X), dtype=np.intp)
        while True:
            active = np.flatnonzero(self.feature_[idx] >= 0)
            if len(active) == 0:
                return idx
            node = idx[active]
            go_left = X[active, self.feature_[node]] <= self.threshold_[node]
            idx[active] = np.where(go_left, self.left_[node], self.right_[node])

    def predict_value(self, X) -> np.ndarray:
        """Leaf value: class-1 fraction (classify) or mean target (regress)."""
        return self.value_[self._apply(X)]

    def predict_score(self, X) -> np.ndarray:
        if self.task != "classify":
            raise DataError("scores are for classification trees")
        return self.predict_value(X)

    def predict(self, X) -> np.ndarray:
        if self.task != "classify":
            raise DataError("predict() is for classification trees")
        return (self.predict_value(X) >= 0.5).astype(np.int64)

    @property
    def node_count(self) -> int:
        return len(self.feature_)

    def get_state(self) -> dict:
        return {
            "task": self.task,
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
            "n_features": int(self.n_features_),
        }

    def set_state(self, state: dict):
        self.task = state["task"]
        self.feature_ = np.array(state["feature"], dtype=np.intp)
        self.threshold_ = np.array(state["threshold"], dtype=np.float64)
        self.left_ = np.array(state["left"], dtype=np.intp)
        self.right_ = np.array(state["right"], dtype=np.intp)
        self.value_ = np.array(state["value"], dtype=np.float64)
        self.n_features_ = int(state["n_features"])
        self.feature_importance_raw_ = np.zeros(self.n_features_)
        return self


class RandomForest:
    """Bagged entropy trees; the ensemble score is the average of the
    trees' hard votes, so 7 of 10 trees voting class 1 scores 0.7.
    """

    splitter = "best"
    bootstrap = True

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int | None = None,
        min_samples_leaf: int = 1,
        max_features="sqrt",
        max_bins: int = 256,
        random_state=None,
    ):
        if n_trees < 1:
            raise DataError(f"n_trees must be >= 1, got {n_trees}")
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.max_bins = max_bins
        self.random_state = random_state
        self.trees_: list[DecisionTree] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        n = len(X)
        binned = BinnedMatrix.build(X, self.max_bins) if self.splitter == "best" else None
        root = (
            self.random_state
            if isinstance(self.random_state, np.random.SeedSequence)
            else np.random.SeedSequence(self.random_state)
        )
        seeds = root.spawn(self.n_trees)
        self.trees_ = []
        self._importance_raw = np.zeros(X.shape[1])
        for seq in seeds:
            rng = np.random.default_rng(seq)
            if self.bootstrap:
                # Bootstrap as integer multiplicity weights; rows never
                # drawn get weight 0 and drop out of the tree entirely.
                w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
            else:
                w = None
            tree = DecisionTree(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                max_features=self.max_features,
                task="classify",
                splitter=self.splitter,
                max_bins=self.max_bins,
                random_state=rng,
            )
            tree.fit(X, y, sample_weight=w, binned=binned)
            self._importance_raw += tree.feature_importance_raw_
            self.trees_.append(tree)
        return self

    def predict_score(self, X) -> np.ndarray:
        votes = np.zeros(len(X))
        for tree in self.trees_:
            votes += tree.predict_value(X) >= 0.5
        return votes / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def feature_importances(self) -> np.ndarray:
        """Impurity-decrease shares; sums to 1 unless no tree ever split."""
        total = self._importance_raw.sum()
        if total <= 0:
            return np.zeros_like(self._importance_raw)
        return self._importance_raw / total

    def get_state(self) -> dict:
        return {"trees": [t.get_state() for t in self.trees_]}

    def set_state(self, state: dict):
        self.trees_ = [DecisionTree().set_state(s) for s in state["trees"]]
        self.n_trees = len(self.trees_)
        if self.trees_:
            self._importance_raw = np.zeros(self.trees_[0].n_features_)
        return self


class ExtraTrees(RandomForest):
    """Extremely randomized variant: no bootstrap, and each candidate
    feature gets one uniformly random threshold; the best of those random
    cuts wins the split.
    """

    splitter = "random"
    bootstrap = False
