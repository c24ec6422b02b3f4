"""
neural.py
---------
Feed-forward net: rectifier hidden layers, sigmoid output, cross-entropy
loss, mini-batch gradient descent. loss_and_gradients exposes the analytic
backward pass so it can be cross-checked against finite differences.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .linear import _column_stats, _sigmoid


class NeuralNet:
    """Binary classifier MLP.

    hidden gives the two (or more) hidden layer widths. Inputs are
    standardized internally; He-initialized weights are drawn from the
    seeded generator so fits are reproducible.
    """

    def __init__(
        self,
        hidden: tuple = (16, 8),
        learning_rate: float = 0.05,
        epochs: int = 20,
        batch_size: int = 64,
        l2: float = 0.0,
        tol: float = 1e-6,
        random_state=None,
    ):
        hidden = tuple(int(h) for h in hidden)
        if not hidden or any(h < 1 for h in hidden):
            raise DataError(f"hidden widths must be positive, got {hidden}")
        if epochs < 0:
            raise DataError(f"epochs must be >= 0, got {epochs}")
        self.hidden = hidden
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.l2 = float(l2)
        self.tol = float(tol)
        self.random_state = random_state
        self.weights_: list[np.ndarray] = []
        self.biases_: list[np.ndarray] = []

    # -- setup -----------------------------------------------------------

    def initialize(self, n_features: int) -> "NeuralNet":
        """Seeded He init with identity standardization (for direct use on
        already-scaled inputs, e.g. gradient checking)."""
        rng = np.random.default_rng(self.random_state)
        sizes = (n_features, *self.hidden, 1)
        self.weights_ = []
        self.biases_ = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights_.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases_.append(np.zeros(fan_out))
        self.mu_ = np.zeros(n_features)
        self.sigma_ = np.ones(n_features)
        self.converged_ = False
        return self

    # -- forward / backward ----------------------------------------------

    def _forward(self, Z: np.ndarray):
        """Returns (activations, preactivations); activations[0] is Z."""
        acts = [Z]
        pres = []
        a = Z
        last = len(self.weights_) - 1
        for i, (W, b) in enumerate(zip(self.weights_, self.biases_)):
            u = a @ W + b
            pres.append(u)
            a = u if i == last else np.maximum(u, 0.0)
            acts.append(a)
        return acts, pres

    def _loss_from_logits(self, u: np.ndarray, y: np.ndarray) -> float:
        # stable binary cross-entropy straight from the output preactivation
        per_row = np.maximum(u, 0.0) - u * y + np.log1p(np.exp(-np.abs(u)))
        loss = float(per_row.mean())
        if self.l2:
            loss += 0.5 * self.l2 * sum(float((W**2).sum()) for W in self.weights_)
        return loss

    def loss_and_gradients(self, X, y):
        """Cross-entropy loss and its exact gradients at the current
        parameters. Returns (loss, weight_grads, bias_grads)."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        Z = (X - self.mu_) / self.sigma_
        return self._backward(Z, y)

    def _backward(self, Z, y):
        acts, pres = self._forward(Z)
        u = pres[-1][:, 0]
        loss = self._loss_from_logits(u, y)
        delta = ((_sigmoid(u) - y) / len(y))[:, None]
        w_grads = [None] * len(self.weights_)
        b_grads = [None] * len(self.weights_)
        for i in range(len(self.weights_) - 1, -1, -1):
            w_grads[i] = acts[i].T @ delta
            if self.l2:
                w_grads[i] = w_grads[i] + self.l2 * self.weights_[i]
            b_grads[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights_[i].T) * (pres[i - 1] > 0.0)
        return loss, w_grads, b_grads

    def min_abs_preactivation(self, X) -> float:
        """Smallest |preactivation| over hidden units; a gradient check is
        only trustworthy when this clears the finite-difference step."""
        X = np.asarray(X, dtype=np.float64)
        Z = (X - self.mu_) / self.sigma_
        _, pres = self._forward(Z)
        hidden = pres[:-1]
        return min(float(np.abs(u).min()) for u in hidden)

    # -- training ----------------------------------------------------------

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        self.initialize(d)
        self.mu_, self.sigma_ = _column_stats(X)
        Z = (X - self.mu_) / self.sigma_
        rng = np.random.default_rng(
            None if self.random_state is None else np.random.SeedSequence(self.random_state).spawn(1)[0]
        )
        batch = min(self.batch_size, n) if self.batch_size > 0 else n
        prev_loss = np.inf
        self.train_losses_ = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                take = order[start : start + batch]
                _, w_grads, b_grads = self._backward(Z[take], y[take])
                for i in range(len(self.weights_)):
                    self.weights_[i] -= self.learning_rate * w_grads[i]
                    self.biases_[i] -= self.learning_rate * b_grads[i]
            _, pres = self._forward(Z)
            loss = self._loss_from_logits(pres[-1][:, 0], y)
            self.train_losses_.append(loss)
            if abs(prev_loss - loss) < self.tol:
                self.converged_ = True
                break
            prev_loss = loss
        return self

    # -- inference ---------------------------------------------------------

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Z = (X - self.mu_) / self.sigma_
        _, pres = self._forward(Z)
        return _sigmoid(pres[-1][:, 0])

    def predict(self, X) -> np.ndarray:
        return (self.predict_score(X) >= 0.5).astype(np.int64)

    def get_state(self) -> dict:
        return {
            "hidden": list(self.hidden),
            "weights": [W.tolist() for W in self.weights_],
            "biases": [b.tolist() for b in self.biases_],
            "mu": self.mu_.tolist(),
            "sigma": self.sigma_.tolist(),
            "converged": getattr(self, "converged_", False),
        }

    def set_state(self, state: dict):
        self.hidden = tuple(state["hidden"])
        self.weights_ = [np.array(W, dtype=np.float64) for W in state["weights"]]
        self.biases_ = [np.array(b, dtype=np.float64) for b in state["biases"]]
        self.mu_ = np.array(state["mu"], dtype=np.float64)
        self.sigma_ = np.array(state["sigma"], dtype=np.float64)
        self.converged_ = bool(state["converged"])
        return self
