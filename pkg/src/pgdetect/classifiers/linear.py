"""Logistic-regression baseline on sparse TF-IDF vectors.

Full-batch gradient descent on the mean logistic loss with L2 penalty on
the weights (not the bias). Weights start at zero, so training is
deterministic; the seed is carried in the config for forward
compatibility with mini-batch variants. The per-epoch sparse products
run through the jitted kernels.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from ..annotation import Label
from ..errors import BadInputError, DegenerateLabelsError
from ..kernels import build_csr, csr_grad, csr_margins
from . import prediction_from_score


@dataclass(frozen=True)
class LinearConfig:
    l2: float = 1e-4
    lr: float = 1.0
    epochs: int = 300
    seed: int = 0


def labels_to_ints(labels) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.float64)
    for i, label in enumerate(labels):
        if isinstance(label, Label):
            out[i] = 1.0 if label is Label.TARGET else 0.0
        else:
            out[i] = float(label)
    return out


def _logistic_loss(margins: np.ndarray, y: np.ndarray) -> float:
    # stable mean of log(1 + exp(m)) - y*m
    per_item = np.maximum(margins, 0.0) - y * margins + np.log1p(np.exp(-np.abs(margins)))
    return float(per_item.mean())


def loss_and_grad(indptr, indices, values, y, w, b, l2):
    """Mean logistic loss with L2 on w; used by training and the
    finite-difference gradient check."""
    margins = csr_margins(indptr, indices, values, w, b)
    loss = _logistic_loss(margins, y) + 0.5 * l2 * float(w @ w)
    resid = (1.0 / (1.0 + np.exp(-margins)) - y) / y.shape[0]
    grad_w = csr_grad(indptr, indices, values, resid, w.shape[0]) + l2 * w
    grad_b = float(resid.sum())
    return loss, grad_w, grad_b


class LinearClassifier:
    def __init__(self, weights: np.ndarray, bias: float, config: LinearConfig, history=None):
        self.weights = weights
        self.bias = bias
        self.config = config
        self.history = history or []

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def predict(self, vectors) -> list:
        if not vectors:
            return []
        if any(v.dim != self.dim for v in vectors):
            raise BadInputError(
                f"vector dim mismatch: expected {self.dim}"
            )
        indptr, indices, values = build_csr(vectors, self.dim)
        margins = csr_margins(indptr, indices, values, self.weights, self.bias)
        scores = 1.0 / (1.0 + np.exp(-margins))
        return [prediction_from_score(s) for s in scores]

    def save(self, path) -> None:
        meta = {"format_version": 1, "backend": "linear", "config": asdict(self.config)}
        np.savez(
            path,
            weights=self.weights,
            bias=np.array([self.bias]),
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        )

    @classmethod
    def load(cls, path) -> "LinearClassifier":
        data = np.load(path)
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("backend") != "linear":
            raise BadInputError("checkpoint is not a linear model")
        return cls(
            weights=data["weights"],
            bias=float(data["bias"][0]),
            config=LinearConfig(**meta["config"]),
        )


def train_linear(vectors, labels, config: LinearConfig | None = None) -> LinearClassifier:
    config = config or LinearConfig()
    if len(vectors) != len(labels) or len(vectors) < 2:
        raise BadInputError("need aligned vectors and labels, at least two items")
    y = labels_to_ints(labels)
    if len(set(y.tolist())) < 2:
        raise DegenerateLabelsError("training data contains a single class")
    dim = vectors[0].dim
    if any(v.dim != dim for v in vectors):
        raise BadInputError("all vectors must share one dimension")
    indptr, indices, values = build_csr(vectors, dim)
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    history = []
    for _ in range(config.epochs):
        loss, grad_w, grad_b = loss_and_grad(indptr, indices, values, y, w, b, config.l2)
        w = w - config.lr * grad_w
        b = b - config.lr * grad_b
        history.append(loss)
    return LinearClassifier(weights=w, bias=b, config=config, history=history)
