"""Multiclass logistic regression (softmax cross-entropy + L2) clients."""

from __future__ import annotations

import logging

import numpy as np

from dpfedsim.objectives.quadratic import power_iteration_max_eig

log = logging.getLogger(__name__)


class LogisticClient:
    """Mean softmax cross-entropy over the client's samples plus (l2/2)||w||^2.

    The model vector is the row-major flattening of a (num_features,
    num_classes) weight matrix; no separate bias (append a constant feature
    for one).
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, num_classes: int,
                 l2_coefficient: float = 0.0):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise ValueError(f"features {features.shape} and labels {labels.shape} do not agree")
        if features.shape[0] == 0:
            raise ValueError("a logistic client needs at least one sample")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        if labels.min() < 0 or labels.max() >= num_classes:
            raise ValueError(f"labels must lie in [0, {num_classes})")
        if l2_coefficient < 0:
            raise ValueError("l2_coefficient must be >= 0")
        self.features = features
        self.labels = labels
        self.num_classes = int(num_classes)
        self.l2_coefficient = float(l2_coefficient)
        self._onehot = np.eye(self.num_classes)[labels]
        self._minimum: float | None = None

    @property
    def dimension(self) -> int:
        return self.features.shape[1] * self.num_classes

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    def _logits(self, w: np.ndarray) -> np.ndarray:
        return self.features @ w.reshape(self.features.shape[1], self.num_classes)

    def value_grad(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        z = self._logits(w)
        zmax = z.max(axis=1, keepdims=True)
        ez = np.exp(z - zmax)
        s = ez.sum(axis=1, keepdims=True)
        lse = (zmax + np.log(s))[:, 0]
        m = self.num_samples
        value = float(np.mean(lse - z[np.arange(m), self.labels]))
        value += 0.5 * self.l2_coefficient * float(w @ w)
        probs = ez / s
        grad = (self.features.T @ (probs - self._onehot)).ravel() / m
        return value, grad + self.l2_coefficient * w

    def value(self, w: np.ndarray) -> float:
        return self.value_grad(w)[0]

    def predict(self, w: np.ndarray) -> np.ndarray:
        return np.argmax(self._logits(w), axis=1)

    def smoothness(self) -> float:
        # Softmax cross-entropy Hessian is bounded by 1/2 * lambda_max(X^T X / m).
        x = self.features
        gram_max = power_iteration_max_eig(lambda v: x.T @ (x @ v) / x.shape[0], x.shape[1])
        return 0.5 * gram_max + self.l2_coefficient

    def local_minimum(self, tolerance: float = 1e-8) -> float:
        if self._minimum is None:
            from dpfedsim.objectives.solvers import gradient_descent_armijo

            w = gradient_descent_armijo(self.value_grad, np.zeros(self.dimension),
                                        tolerance=tolerance, lipschitz=self.smoothness())
            self._minimum = self.value(w)
        return self._minimum


def generate_gaussian_classes(key, num_classes: int, per_class: int, num_features: int,
                              separation: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic labeled features: one isotropic Gaussian blob per class.

    Class means are drawn with norm about ``separation``; the last feature is
    a constant 1 so a flattened weight matrix carries per-class biases.
    """
    from dpfedsim.streams import standard_normals

    p = num_features - 1
    means = standard_normals(key.child("class_means"), num_classes * p).reshape(num_classes, p)
    means *= separation / np.sqrt(p)
    noise = standard_normals(key.child("features"), num_classes * per_class * p)
    noise = noise.reshape(num_classes * per_class, p)
    labels = np.repeat(np.arange(num_classes), per_class)
    x = means[labels] + noise
    features = np.hstack([x, np.ones((x.shape[0], 1))])
    return features, labels
