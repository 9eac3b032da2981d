"""Single-hidden-layer perceptron trained with mini-batch SGD.

Architecture is input -> hidden ReLU -> 1 logit, read through a sigmoid.
Loss is binary cross-entropy computed from the logit with
logaddexp(0, z) - y*z, which never overflows.  Weights start from He
initialization; each epoch reshuffles the data with its own named
substream, so training is a pure function of (data, config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, FitError, TrainingError
from .rng import substream


@dataclass(frozen=True)
class MlpConfig:
    hidden: int = 32
    epochs: int = 200
    batch_size: int = 16
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.hidden < 1:
            raise TrainingError("hidden must be >= 1")
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")
        if self.batch_size < 1:
            raise TrainingError("batch_size must be >= 1")
        if not (self.learning_rate > 0):
            raise TrainingError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "hidden": self.hidden,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
        }


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Mlp:
    """Binary classifier with labels in {0, 1}; 1 is the positive class."""

    def __init__(self, config: MlpConfig | None = None, seed: int = 0):
        self.config = config if config is not None else MlpConfig()
        self.seed = int(seed)
        self.params_: dict[str, np.ndarray] | None = None
        self.loss_trace_: list[float] = []

    def _init_params(self, n_features: int) -> dict[str, np.ndarray]:
        rng = substream(self.seed, "mlp", "init")
        h = self.config.hidden
        return {
            "w1": rng.normal(0.0, np.sqrt(2.0 / n_features), size=(n_features, h)),
            "b1": np.zeros(h),
            "w2": rng.normal(0.0, np.sqrt(2.0 / h), size=(h, 1)),
            "b2": np.zeros(1),
        }

    @staticmethod
    def _forward(params: dict[str, np.ndarray], x: np.ndarray):
        z1 = x @ params["w1"] + params["b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = (a1 @ params["w2"] + params["b2"]).ravel()
        return z1, a1, z2

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray, params: dict[str, np.ndarray] | None = None):
        """Mean BCE and its analytic gradients at the given (or current) params."""
        if params is None:
            params = self._require_params()
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = x.shape[0]
        z1, a1, z2 = self._forward(params, x)
        loss = float(np.mean(np.logaddexp(0.0, z2) - y * z2))
        dz2 = ((_sigmoid(z2) - y) / n)[:, None]
        grads = {
            "w2": a1.T @ dz2,
            "b2": dz2.sum(axis=0),
        }
        dz1 = (dz2 @ params["w2"].T) * (z1 > 0.0)
        grads["w1"] = x.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        return loss, grads

    def fit(self, x: np.ndarray, y: np.ndarray) -> "Mlp":
        x = np.ascontiguousarray(x, dtype=np.float64)
        y = np.asarray(y)
        if x.ndim != 2 or x.shape[0] == 0:
            raise FitError(f"need a nonempty 2-D feature matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise FitError(f"labels of shape {y.shape} do not match {x.shape[0]} rows")
        y = y.astype(np.float64)
        if not np.isin(y, (0.0, 1.0)).all():
            raise FitError("labels must be 0 or 1")
        if not np.all(np.isfinite(x)):
            raise FitError("feature matrix contains non-finite values")

        n = x.shape[0]
        params = self._init_params(x.shape[1])
        lr = self.config.learning_rate
        batch = self.config.batch_size
        self.loss_trace_ = []
        for epoch in range(self.config.epochs):
            perm = substream(self.seed, "mlp", "epoch", epoch).permutation(n)
            for start in range(0, n, batch):
                idx = perm[start : start + batch]
                loss, grads = self.loss_and_grads(x[idx], y[idx], params)
                if not np.isfinite(loss):
                    raise DivergenceError(epoch)
                for key in params:
                    params[key] = params[key] - lr * grads[key]
            epoch_loss, _ = self.loss_and_grads(x, y, params)
            if not np.isfinite(epoch_loss):
                raise DivergenceError(epoch)
            self.loss_trace_.append(epoch_loss)
        self.params_ = params
        return self

    def _require_params(self) -> dict[str, np.ndarray]:
        if self.params_ is None:
            raise FitError("network is not fitted")
        return self.params_

    def predict_scores(self, x: np.ndarray) -> np.ndarray:
        """Sigmoid of the output logit for each row."""
        params = self._require_params()
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != params["w1"].shape[0]:
            raise FitError(f"expected shape (n, {params['w1'].shape[0]}), got {x.shape}")
        _, _, z2 = self._forward(params, x)
        return _sigmoid(z2)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """1 where the score is at least 0.5."""
        return (self.predict_scores(x) >= 0.5).astype(np.int64)
