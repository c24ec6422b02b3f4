"""
bayes.py
--------
Class-conditional density models: quadratic discriminant analysis and
naive Bayes with per-column likelihood families.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


class QuadraticDiscriminant:
    """Per-class Gaussian with its own covariance, hence a quadratic
    boundary. Each covariance gets a +lambda*I ridge so near-singular
    classes (tiny counts, constant columns) stay invertible.
    """

    def __init__(self, reg_lambda: float = 1e-4, random_state=None):
        if reg_lambda < 0:
            raise DataError(f"reg_lambda must be >= 0, got {reg_lambda}")
        self.reg_lambda = float(reg_lambda)
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        n, d = X.shape
        self.means_ = []
        self.cov_invs_ = []
        self.log_dets_ = []
        self.log_priors_ = []
        for c in (0, 1):
            Xc = X[y == c]
            if len(Xc) == 0:
                raise DataError(f"class {c} absent from training data")
            mu = Xc.mean(axis=0)
            centered = Xc - mu
            cov = centered.T @ centered / len(Xc) + self.reg_lambda * np.eye(d)
            sign, logdet = np.linalg.slogdet(cov)
            if sign <= 0:
                raise DataError("covariance not positive definite; raise reg_lambda")
            self.means_.append(mu)
            self.cov_invs_.append(np.linalg.inv(cov))
            self.log_dets_.append(float(logdet))
            self.log_priors_.append(float(np.log(len(Xc) / n)))
        return self

    def _log_posteriors(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((len(X), 2))
        for c in (0, 1):
            centered = X - self.means_[c]
            maha = np.einsum("ij,jk,ik->i", centered, self.cov_invs_[c], centered)
            out[:, c] = self.log_priors_[c] - 0.5 * (self.log_dets_[c] + maha)
        return out

    def predict_score(self, X) -> np.ndarray:
        lp = self._log_posteriors(X)
        # softmax over the two classes, stabilized
        m = lp.max(axis=1, keepdims=True)
        e = np.exp(lp - m)
        return e[:, 1] / e.sum(axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "means": [m.tolist() for m in self.means_],
            "cov_invs": [c.tolist() for c in self.cov_invs_],
            "log_dets": self.log_dets_,
            "log_priors": self.log_priors_,
        }

    def set_state(self, state: dict):
        self.means_ = [np.array(m) for m in state["means"]]
        self.cov_invs_ = [np.array(c) for c in state["cov_invs"]]
        self.log_dets_ = [float(v) for v in state["log_dets"]]
        self.log_priors_ = [float(v) for v in state["log_priors"]]
        return self


class NaiveBayes:
    """Conditional-independence model: Gaussian likelihood per numeric
    column, add-one-smoothed frequency table per ordinal-encoded column.

    categorical_mask/code_counts describe which columns are code-valued and
    how large each vocabulary is; without them every column is numeric.
    """

    def __init__(self, smoothing: float = 1.0, random_state=None):
        if smoothing <= 0:
            raise DataError(f"smoothing must be > 0, got {smoothing}")
        self.smoothing = float(smoothing)
        self.random_state = random_state

    def fit(self, X, y, categorical_mask=None, code_counts=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        n, d = X.shape
        if categorical_mask is None:
            categorical_mask = np.zeros(d, dtype=bool)
        self.categorical_mask_ = np.asarray(categorical_mask, dtype=bool)
        if code_counts is None:
            code_counts = [0] * d
        self.log_priors_ = []
        self.gauss_mu_ = []
        self.gauss_var_ = []
        self.cat_log_prob_ = []  # per class: {col: log-prob array over codes}
        alpha = self.smoothing
        num_cols = np.flatnonzero(~self.categorical_mask_)
        cat_cols = np.flatnonzero(self.categorical_mask_)
        self.cardinality_ = {}
        for j in cat_cols:
            v = int(code_counts[j]) if code_counts[j] else int(X[:, j].max()) + 1
            self.cardinality_[int(j)] = max(v, int(X[:, j].max()) + 1)
        var_floor = 0.0
        if len(num_cols):
            var_floor = 1e-9 * float(np.var(X[:, num_cols], axis=0).max())
        var_floor = max(var_floor, 1e-12)
        for c in (0, 1):
            Xc = X[y == c]
            if len(Xc) == 0:
                raise DataError(f"class {c} absent from training data")
            self.log_priors_.append(float(np.log(len(Xc) / n)))
            if len(num_cols):
                self.gauss_mu_.append(Xc[:, num_cols].mean(axis=0))
                self.gauss_var_.append(Xc[:, num_cols].var(axis=0) + var_floor)
            else:
                self.gauss_mu_.append(np.zeros(0))
                self.gauss_var_.append(np.ones(0))
            tables = {}
            for j in cat_cols:
                v = self.cardinality_[int(j)]
                counts = np.bincount(Xc[:, j].astype(np.int64), minlength=v)
                tables[int(j)] = np.log((counts + alpha) / (len(Xc) + alpha * v))
            self.cat_log_prob_.append(tables)
        self._num_cols = num_cols
        self._cat_cols = cat_cols
        return self

    def _log_posteriors(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((len(X), 2))
        for c in (0, 1):
            ll = np.full(len(X), self.log_priors_[c])
            if len(self._num_cols):
                Z = X[:, self._num_cols]
                var = self.gauss_var_[c]
                ll += (
                    -0.5 * (np.log(2.0 * np.pi * var) + (Z - self.gauss_mu_[c]) ** 2 / var)
                ).sum(axis=1)
            for j in self._cat_cols:
                table = self.cat_log_prob_[c][int(j)]
                codes = np.clip(X[:, j].astype(np.int64), 0, len(table) - 1)
                ll += table[codes]
            out[:, c] = ll
        return out

    def predict_score(self, X) -> np.ndarray:
        lp = self._log_posteriors(X)
        m = lp.max(axis=1, keepdims=True)
        e = np.exp(lp - m)
        return e[:, 1] / e.sum(axis=1)

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "log_priors": self.log_priors_,
            "gauss_mu": [m.tolist() for m in self.gauss_mu_],
            "gauss_var": [v.tolist() for v in self.gauss_var_],
            "cat_log_prob": [
                {str(j): t.tolist() for j, t in tables.items()} for tables in self.cat_log_prob_
            ],
            "num_cols": self._num_cols.tolist(),
            "cat_cols": self._cat_cols.tolist(),
        }

    def set_state(self, state: dict):
        self.log_priors_ = [float(v) for v in state["log_priors"]]
        self.gauss_mu_ = [np.array(m) for m in state["gauss_mu"]]
        self.gauss_var_ = [np.array(v) for v in state["gauss_var"]]
        self.cat_log_prob_ = [
            {int(j): np.array(t) for j, t in tables.items()} for tables in state["cat_log_prob"]
        ]
        self._num_cols = np.array(state["num_cols"], dtype=np.intp)
        self._cat_cols = np.array(state["cat_cols"], dtype=np.intp)
        return self
