"""
linear.py
---------
Logistic regression and a linear SVM, both trained by (sub)gradient descent.

Both standardize columns internally (zero-variance columns pass through) so
raw loan-scale features like creditScore do not dominate the step size; the
learned decision function is still affine in the original inputs.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def _column_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma = np.where(sigma == 0.0, 1.0, sigma)
    return mu, sigma


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticRegression:
    """Cross-entropy loss minimized by full-batch gradient descent.

    Weights start at zero, so an unstepped model (epochs=0) scores 0.5
    everywhere. converged_ reports whether the gradient norm fell under tol
    before the epoch cap.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        epochs: int = 300,
        l2: float = 0.0,
        tol: float = 1e-6,
        random_state=None,
    ):
        if epochs < 0:
            raise DataError(f"epochs must be >= 0, got {epochs}")
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.l2 = float(l2)
        self.tol = float(tol)
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        self.mu_, self.sigma_ = _column_stats(X)
        Z = (X - self.mu_) / self.sigma_
        w = np.zeros(d)
        b = 0.0
        self.converged_ = False
        for _ in range(self.epochs):
            p = _sigmoid(Z @ w + b)
            resid = p - y
            gw = Z.T @ resid / n + self.l2 * w
            gb = resid.mean()
            if max(np.abs(gw).max(initial=0.0), abs(gb)) < self.tol:
                self.converged_ = True
                break
            w -= self.learning_rate * gw
            b -= self.learning_rate * gb
        self.w_ = w
        self.b_ = b
        return self

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Z = (X - self.mu_) / self.sigma_
        return _sigmoid(Z @ self.w_ + self.b_)

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "w": self.w_.tolist(),
            "b": self.b_,
            "mu": self.mu_.tolist(),
            "sigma": self.sigma_.tolist(),
            "converged": self.converged_,
        }

    def set_state(self, state: dict):
        self.w_ = np.array(state["w"], dtype=np.float64)
        self.b_ = float(state["b"])
        self.mu_ = np.array(state["mu"], dtype=np.float64)
        self.sigma_ = np.array(state["sigma"], dtype=np.float64)
        self.converged_ = bool(state["converged"])
        return self


class LinearSVM:
    """Hinge loss with optional L2 penalty, full-batch subgradient descent.

    With l2=0 on separable data the method stops moving exactly when every
    training point clears functional margin 1, which is the convergence
    check; with l2>0 convergence means the update stalled below tol.
    Scores squash the decision value through a sigmoid, so the 0.5
    threshold coincides with the sign of the hyperplane.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        epochs: int = 500,
        l2: float = 0.0,
        tol: float = 1e-9,
        random_state=None,
    ):
        if epochs < 0:
            raise DataError(f"epochs must be >= 0, got {epochs}")
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.l2 = float(l2)
        self.tol = float(tol)
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        s = 2.0 * y.astype(np.float64) - 1.0
        n, d = X.shape
        self.mu_, self.sigma_ = _column_stats(X)
        Z = (X - self.mu_) / self.sigma_
        w = np.zeros(d)
        b = 0.0
        self.converged_ = False
        for _ in range(self.epochs):
            margin = s * (Z @ w + b)
            violating = margin < 1.0
            if not violating.any():
                if self.l2 == 0.0:
                    self.converged_ = True
                    break
                gw = self.l2 * w
                gb = 0.0
            else:
                sv = s[violating]
                gw = -(Z[violating].T @ sv) / n + self.l2 * w
                gb = -sv.sum() / n
            step = self.learning_rate
            if max(np.abs(gw).max(initial=0.0), abs(gb)) * step < self.tol:
                self.converged_ = True
                break
            w -= step * gw
            b -= step * gb
        self.w_ = w
        self.b_ = b
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Z = (X - self.mu_) / self.sigma_
        return Z @ self.w_ + self.b_

    def predict_score(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "w": self.w_.tolist(),
            "b": self.b_,
            "mu": self.mu_.tolist(),
            "sigma": self.sigma_.tolist(),
            "converged": self.converged_,
        }

    def set_state(self, state: dict):
        self.w_ = np.array(state["w"], dtype=np.float64)
        self.b_ = float(state["b"])
        self.mu_ = np.array(state["mu"], dtype=np.float64)
        self.sigma_ = np.array(state["sigma"], dtype=np.float64)
        self.converged_ = bool(state["converged"])
        return self
