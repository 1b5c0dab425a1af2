"""Linear-regression baselines (TF-IDF and feature-based), the max-features
grid search, and the confidence classifier over the regressor's
penultimate activations.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidArgument
from .stats import pearson
from .tokenizers import tokenize_13a

TFIDF_GRID = tuple(2 ** k for k in range(4, 15))  # 16 .. 16384


@dataclass
class TfidfModel:
    vocabulary: dict  # term -> column index
    idf: np.ndarray
    max_features: int

    def to_dict(self):
        return {"vocabulary": self.vocabulary, "idf": self.idf.tolist(),
                "max_features": self.max_features}

    @classmethod
    def from_dict(cls, d):
        return cls(vocabulary=dict(d["vocabulary"]),
                   idf=np.array(d["idf"]), max_features=d["max_features"])


def _document_terms(src: str, hyp: str) -> list:
    return tokenize_13a(src) + tokenize_13a(hyp)


def tfidf_fit(pairs, max_features: int) -> TfidfModel:
    """Fit on (src, hyp) documents: keep the ``max_features`` most
    document-frequent 13a terms (ties lexicographic), smoothed idf."""
    pairs = list(pairs)
    if not pairs:
        raise InvalidArgument("TF-IDF corpus must be non-empty")
    if max_features < 1:
        raise InvalidArgument("max_features must be >= 1")

    df = Counter()
    for src, hyp in pairs:
        df.update(set(_document_terms(src, hyp)))
    retained = sorted(df, key=lambda t: (-df[t], t))[:max_features]
    vocabulary = {t: i for i, t in enumerate(sorted(retained))}
    n_docs = len(pairs)
    idf = np.array([math.log((1 + n_docs) / (1 + df[t])) + 1
                    for t in sorted(retained)])
    return TfidfModel(vocabulary=vocabulary, idf=idf,
                      max_features=max_features)


def tfidf_transform(model: TfidfModel, src: str, hyp: str) -> np.ndarray:
    """L2-normalized tf-idf vector (zero vector when nothing is retained)."""
    vec = np.zeros(len(model.vocabulary))
    for term, count in Counter(_document_terms(src, hyp)).items():
        idx = model.vocabulary.get(term)
        if idx is not None:
            vec[idx] = count * model.idf[idx]
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


@dataclass
class LinRegModel:
    weights: np.ndarray
    bias: float
    ridge: float

    def to_dict(self):
        return {"weights": self.weights.tolist(), "bias": self.bias,
                "ridge": self.ridge}

    @classmethod
    def from_dict(cls, d):
        return cls(weights=np.array(d["weights"]), bias=d["bias"],
                   ridge=d["ridge"])


def ols_fit(X, y, ridge: float = 1e-6) -> LinRegModel:
    """Least squares with an intercept via ridge-stabilized normal
    equations; deterministic and robust to rank deficiency."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise InvalidArgument(
            f"design {X.shape} incompatible with targets {y.shape}")
    if X.shape[0] < 1:
        raise InvalidArgument("need at least one training row")
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    gram = Xb.T @ Xb + ridge * np.eye(Xb.shape[1])
    coef = np.linalg.solve(gram, Xb.T @ y)
    return LinRegModel(weights=coef[:-1], bias=float(coef[-1]), ridge=ridge)


def lin_predict(model: LinRegModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    out = X @ model.weights + model.bias
    return float(out[0]) if single else out


def tfidf_max_feature_search(train_pairs, train_targets, dev_pairs,
                             dev_targets):
    """Grid search over max_features in {2^4 .. 2^14}; returns the
    (TfidfModel, LinRegModel) pair maximizing |dev Pearson| along with
    the per-grid-point scores."""
    dev_targets = np.asarray(dev_targets, dtype=np.float64)
    if np.std(dev_targets) == 0:
        raise DegenerateInput("dev targets have zero variance")

    best = None
    grid_scores = []
    for max_features in TFIDF_GRID:
        tfidf = tfidf_fit(train_pairs, max_features)
        X_train = np.stack([tfidf_transform(tfidf, s, h)
                            for s, h in train_pairs])
        X_dev = np.stack([tfidf_transform(tfidf, s, h) for s, h in dev_pairs])
        reg = ols_fit(X_train, train_targets)
        preds = lin_predict(reg, X_dev)
        try:
            rho = pearson(preds, dev_targets)
        except DegenerateInput:
            rho = 0.0
        grid_scores.append({"max_features": max_features, "dev_pearson": rho})
        if best is None or abs(rho) > abs(best[0]):
            best = (rho, tfidf, reg)
    return best[1], best[2], grid_scores


def confidence_label(me_value: float, metric_value: float) -> int:
    """1 iff the estimate is within 10% (of its own magnitude) of the
    true metric value; boundary inclusive."""
    return int(abs(me_value - metric_value) <= 0.10 * abs(me_value))


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float

    def to_dict(self):
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_dict(cls, d):
        return cls(weights=np.array(d["weights"]), bias=d["bias"])

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return 1.0 / (1.0 + np.exp(-(X @ self.weights + self.bias)))


def logreg_fit(X, labels, lr: float = 0.1, epochs: int = 1000) -> LogRegModel:
    """Full-batch gradient descent on the logistic loss."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise InvalidArgument("need at least two labelled examples")
    if len(set(y.tolist())) < 2:
        raise InvalidArgument("both classes must be present for fitting")
    w = np.zeros(X.shape[1])
    b = 0.0
    n = X.shape[0]
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
        err = p - y
        w -= lr * (X.T @ err) / n
        b -= lr * float(err.mean())
    return LogRegModel(weights=w, bias=b)


def logreg_accuracy(model: LogRegModel, X, labels) -> tuple[float, float]:
    """Accuracy at threshold 0.5, reported beside the most-common-class
    baseline."""
    y = np.asarray(labels, dtype=np.float64)
    preds = (model.predict_proba(X) >= 0.5).astype(np.float64)
    accuracy = float((preds == y).mean())
    majority = float(max((y == 1).mean(), (y == 0).mean()))
    return accuracy, majority


def save_baseline(model, path) -> None:
    payload = {"kind": type(model).__name__, "model": model.to_dict()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)


def load_baseline(path):
    kinds = {"TfidfModel": TfidfModel, "LinRegModel": LinRegModel,
             "LogRegModel": LogRegModel}
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    return kinds[payload["kind"]].from_dict(payload["model"])
