"""
rough.py
--------
Rough k-means: clustering with lower/upper approximations, wrapped into a
binary classifier by labeling each cluster from its members.

Assignment rule per iteration: a point whose second-nearest center is
almost as close as its nearest (distance gap strictly below eps) cannot be
committed to either cluster, so it joins the upper approximation of every
center within the gap and no lower approximation; otherwise it lands in the
nearest cluster's lower approximation (and, implicitly, its upper). Centers
then move to w_lower * mean(lower members) + w_upper * mean(boundary
members), falling back to whichever set is non-empty. With eps = 0 no point
is ever ambiguous and the procedure is exactly Lloyd's k-means.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


class RoughKMeans:
    """Rough-set k-means classifier.

    eps="auto" resolves to 10% of the mean nearest-vs-second-nearest
    distance gap under the initial centers, then stays fixed. Clusters take
    the majority defaulted label of their lower approximation (upper as
    fallback, global majority if the cluster ends empty). Prediction is the
    nearest center's label; this model deliberately exposes no scores, only
    the binary decision.
    """

    score_capability = False

    def __init__(
        self,
        k: int = 2,
        eps="auto",
        w_lower: float = 0.7,
        w_upper: float = 0.3,
        max_iter: int = 100,
        tol: float = 1e-6,
        standardize: bool = True,
        random_state=None,
    ):
        if k < 2:
            raise DataError(f"k must be >= 2, got {k}")
        if eps != "auto" and eps < 0:
            raise DataError(f"eps must be >= 0 or 'auto', got {eps}")
        if w_lower <= 0 or w_upper <= 0 or abs(w_lower + w_upper - 1.0) > 1e-9:
            raise DataError("w_lower and w_upper must be positive and sum to 1")
        if max_iter < 1:
            raise DataError(f"max_iter must be >= 1, got {max_iter}")
        self.k = int(k)
        self.eps = eps
        self.w_lower = float(w_lower)
        self.w_upper = float(w_upper)
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.standardize = bool(standardize)
        self.random_state = random_state

    def _scale(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mu_) / self.sigma_

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        n, d = X.shape
        if self.standardize:
            self.mu_ = X.mean(axis=0)
            sigma = X.std(axis=0)
            self.sigma_ = np.where(sigma == 0.0, 1.0, sigma)
        else:
            self.mu_ = np.zeros(d)
            self.sigma_ = np.ones(d)
        Z = self._scale(X)

        distinct = np.unique(Z, axis=0)
        if len(distinct) < self.k:
            raise DataError(f"k={self.k} exceeds the {len(distinct)} distinct points")
        rng = np.random.default_rng(self.random_state)
        centers = distinct[rng.choice(len(distinct), size=self.k, replace=False)].copy()

        eps = self.eps
        if eps == "auto":
            D = self._distances(Z, centers)
            two = np.sort(D, axis=1)[:, :2]
            eps = 0.1 * float((two[:, 1] - two[:, 0]).mean())
        self.eps_ = float(eps)

        idx = np.arange(n)
        lower_of = np.full(n, -1)
        upper_sets: list[np.ndarray] = []
        self.converged_ = False
        for iteration in range(self.max_iter):
            D = self._distances(Z, centers)
            nearest = D.argmin(axis=1)
            d1 = D[idx, nearest]
            within = (D - d1[:, None]) < self.eps_
            within[idx, nearest] = True
            ambiguous = within.sum(axis=1) >= 2

            lower_of = np.where(ambiguous, -1, nearest)
            new_centers = centers.copy()
            upper_sets = []
            for j in range(self.k):
                lower = idx[lower_of == j]
                boundary = idx[ambiguous & within[:, j]]
                upper_sets.append(np.concatenate([lower, boundary]))
                if len(lower) and len(boundary):
                    new_centers[j] = self.w_lower * Z[lower].mean(axis=0) + self.w_upper * Z[
                        boundary
                    ].mean(axis=0)
                elif len(lower):
                    new_centers[j] = Z[lower].mean(axis=0)
                elif len(boundary):
                    new_centers[j] = Z[boundary].mean(axis=0)
            shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
            centers = new_centers
            if shift < self.tol:
                self.converged_ = True
                break

        self.centers_ = centers
        self.n_iter_ = iteration + 1
        self.lower_sets_ = [idx[lower_of == j] for j in range(self.k)]
        self.upper_sets_ = upper_sets
        self.cluster_labels_ = self._label_clusters(y)
        return self

    @staticmethod
    def _distances(Z: np.ndarray, centers: np.ndarray) -> np.ndarray:
        diff = Z[:, None, :] - centers[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))

    def _label_clusters(self, y: np.ndarray) -> np.ndarray:
        global_majority = int(y.sum() * 2 > len(y))
        labels = np.empty(self.k, dtype=np.int64)
        for j in range(self.k):
            members = self.lower_sets_[j]
            if len(members) == 0:
                members = self.upper_sets_[j]
            if len(members) == 0:
                labels[j] = global_majority
            else:
                votes = y[members]
                labels[j] = int(votes.sum() * 2 > len(votes))
        return labels

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        D = self._distances(self._scale(X), self.centers_)
        return self.cluster_labels_[D.argmin(axis=1)]

    def get_state(self) -> dict:
        return {
            "centers": self.centers_.tolist(),
            "cluster_labels": self.cluster_labels_.tolist(),
            "mu": self.mu_.tolist(),
            "sigma": self.sigma_.tolist(),
            "eps": self.eps_,
            "converged": self.converged_,
        }

    def set_state(self, state: dict):
        self.centers_ = np.array(state["centers"], dtype=np.float64)
        self.cluster_labels_ = np.array(state["cluster_labels"], dtype=np.int64)
        self.mu_ = np.array(state["mu"], dtype=np.float64)
        self.sigma_ = np.array(state["sigma"], dtype=np.float64)
        self.eps_ = float(state["eps"])
        self.converged_ = bool(state["converged"])
        self.k = len(self.cluster_labels_)
        return self
