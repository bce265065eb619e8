"""Supervised sign classifiers on degree (SCd) or signed caterpillar (SCsc) features."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateLabelsError, DomainError
from .graph import BUYER, SELLER, SignedBipartiteGraph
from .motifs import caterpillar_counts

DEGREE = "degree"
CATERPILLAR = "caterpillar"
FEATURE_LENGTH = {DEGREE: 4, CATERPILLAR: 8}


def degree_features(graph: SignedBipartiteGraph, buyers, sellers) -> np.ndarray:
    """Rows ``[d+(b), d-(b), d+(s), d-(s)]``; a pair's own link is left out of the counts."""
    buyers = np.asarray(buyers, dtype=np.int64)
    sellers = np.asarray(sellers, dtype=np.int64)
    if len(buyers) and (buyers.min() < 0 or buyers.max() >= graph.n_buyers
                        or sellers.min() < 0 or sellers.max() >= graph.n_sellers):
        raise DomainError("pair index out of range")
    bpos, bneg = graph.degree_table[BUYER]
    spos, sneg = graph.degree_table[SELLER]
    own = np.asarray(graph.biadjacency[buyers, sellers]).ravel() if len(buyers) else np.zeros(0)
    x = np.column_stack([bpos[buyers] - (own > 0), bneg[buyers] - (own < 0),
                         spos[sellers] - (own > 0), sneg[sellers] - (own < 0)])
    return x.astype(np.float64)


def caterpillar_features(graph: SignedBipartiteGraph, buyers, sellers) -> np.ndarray:
    return caterpillar_counts(graph, buyers, sellers).astype(np.float64)


def extract_degree_features(graph: SignedBipartiteGraph, buyer: int, seller: int) -> np.ndarray:
    graph.check_pair(buyer, seller)
    return degree_features(graph, [buyer], [seller])[0]


def extract_caterpillar_features(graph: SignedBipartiteGraph, buyer: int, seller: int) -> np.ndarray:
    graph.check_pair(buyer, seller)
    return caterpillar_features(graph, [buyer], [seller])[0]


EXTRACTORS = {DEGREE: degree_features, CATERPILLAR: caterpillar_features}


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    class_weights: tuple              # (w_pos, w_neg)
    schema: str | None = None
    loss_history: tuple = field(default=(), repr=False)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.weights):
            raise DomainError(f"expected {len(self.weights)} features, got {X.shape[1]}")
        return ((X - self.feature_means) / self.feature_stds) @ self.weights + self.bias

    def to_record(self) -> dict:
        return {"schema": self.schema, "weights": self.weights.tolist(), "bias": self.bias,
                "feature_means": self.feature_means.tolist(),
                "feature_stds": self.feature_stds.tolist(),
                "class_weights": list(self.class_weights)}

    @classmethod
    def from_record(cls, rec: dict) -> "LogisticModel":
        return cls(np.asarray(rec["weights"], float), float(rec["bias"]),
                   np.asarray(rec["feature_means"], float), np.asarray(rec["feature_stds"], float),
                   tuple(rec["class_weights"]), rec.get("schema"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_record(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "LogisticModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_record(json.load(fh))


def class_weights(labels) -> tuple[float, float]:
    """Per-class example weight ``N / (2 N_c)``, returned as (positive, negative)."""
    y = np.asarray(labels)
    n, n_pos = len(y), int(np.count_nonzero(y > 0))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("training labels contain a single class")
    return n / (2.0 * n_pos), n / (2.0 * n_neg)


def weighted_log_loss(w, b, Z, y, sample_weight, l2_penalty):
    """Mean weighted logistic loss plus ``l2/2 * |w|^2`` and its gradient (grad_w, grad_b)."""
    margin = y * (Z @ w + b)
    loss = np.mean(sample_weight * np.logaddexp(0.0, -margin)) + 0.5 * l2_penalty * (w @ w)
    # d/dm log(1+e^-m) = -sigmoid(-m)
    r = -y * sample_weight * _sigmoid(-margin) / len(y)
    return loss, Z.T @ r + l2_penalty * w, r.sum()


def _sigmoid(t):
    return np.exp(-np.logaddexp(0.0, -t))


def train_logistic(features, labels, learning_rate: float = 0.1, epochs: int = 500,
                   l2_penalty: float = 1e-4, seed: int = 0, schema: str | None = None) -> LogisticModel:
    """Full-batch gradient descent on the class-weighted log-loss.

    Features are z-scored with training statistics. A step that would raise
    the loss is retried at half the learning rate, so the loss history never
    increases. Weights start at zero, so ``seed`` does not change the result.
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(X) != len(y):
        raise DomainError("features and labels differ in length")
    if not np.all(np.abs(y) == 1):
        raise DomainError("labels must be +1 or -1")
    w_pos, w_neg = class_weights(y)
    sw = np.where(y > 0, w_pos, w_neg)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0] = 1.0
    Z = (X - means) / stds

    w = np.zeros(X.shape[1])
    b = 0.0
    lr = learning_rate
    loss, gw, gb = weighted_log_loss(w, b, Z, y, sw, l2_penalty)
    history = [loss]
    for _ in range(epochs):
        while True:
            w_new, b_new = w - lr * gw, b - lr * gb
            new_loss, new_gw, new_gb = weighted_log_loss(w_new, b_new, Z, y, sw, l2_penalty)
            if new_loss <= loss or lr < 1e-12:
                break
            lr *= 0.5
        if new_loss > loss:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
        history.append(loss)
    return LogisticModel(w, float(b), means, stds, (w_pos, w_neg), schema, tuple(history))


def predict_logistic(model: LogisticModel, feature_vector) -> tuple[float, int]:
    x = np.asarray(feature_vector, dtype=np.float64).reshape(-1)
    if len(x) != len(model.weights):
        raise DomainError(f"expected {len(model.weights)} features, got {len(x)}")
    p = float(_sigmoid(model.decision_function(x[None, :])[0]))
    return p, 1 if p >= 0.5 else -1


def fit_sign_classifier(graph: SignedBipartiteGraph, schema: str, **train_kwargs) -> LogisticModel:
    """Train on every link of ``graph``, features computed leave-one-out on the same graph."""
    if schema not in EXTRACTORS:
        raise DomainError(f"unknown feature schema {schema!r}")
    X = EXTRACTORS[schema](graph, graph.buyers, graph.sellers)
    return train_logistic(X, graph.signs, schema=schema, **train_kwargs)


@dataclass(frozen=True)
class ClassifierConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2_penalty: float = 1e-4
    seed: int = 0

    def as_dict(self):
        return asdict(self)
