"""Glassbox feature vector: decoder confidence, lengths, and
hypothesis-space statistics, plus z-normalization fitted on training data.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .metrics import sent_bleu
from .tokenizers import tokenize_13a

DEFAULT_FEATURES = ("logprob", "prob", "src_len", "hyp_len", "len_ratio",
                    "hyp_var_h1")
EXTENDED_FEATURES = DEFAULT_FEATURES + ("hyp_avg_h1", "hyp_avg_all",
                                        "hyp_var_all")

FEATURE_SETS = {"default6": DEFAULT_FEATURES, "extended9": EXTENDED_FEATURES}


@dataclass
class FeatureConfig:
    feature_set: str = "default6"

    @property
    def names(self) -> tuple[str, ...]:
        return FEATURE_SETS[self.feature_set]

    @property
    def dim(self) -> int:
        return len(self.names)


def decoder_confidence(token_logprobs) -> tuple[float, float]:
    """Sum of token log-probabilities and its exponential.

    A single precomputed aggregate may be passed as a one-element sequence.
    """
    token_logprobs = list(token_logprobs)
    if not token_logprobs:
        raise InvalidArgument("token log-probability sequence is empty")
    logprob = float(sum(token_logprobs))
    return logprob, math.exp(logprob)


def length_features(src: str, hyp: str) -> tuple[int, int, float]:
    """13a token counts of source and hypothesis and their ratio."""
    src_len = len(tokenize_13a(src))
    if src_len == 0:
        raise InvalidArgument("source tokenizes to zero tokens")
    hyp_len = len(tokenize_13a(hyp))
    return src_len, hyp_len, hyp_len / src_len


def _pairwise_bleu(hyp: str, ref: str) -> float:
    return sent_bleu(hyp, ref).value


def hyp_space_features(hyps, focus_index: int = 0):
    """Mean/population-variance of sentBLEU similarities, focus-hypothesis
    vs the rest and over all ordered-as-unordered pairs.

    Segments with fewer than two hypotheses get all-zero values with a
    degenerate flag instead of an error.
    """
    hyps = list(hyps)
    if not 0 <= focus_index < len(hyps):
        raise InvalidArgument(f"focus index {focus_index} out of range")
    if len(hyps) < 2:
        return {"hyp_avg_h1": 0.0, "hyp_var_h1": 0.0, "hyp_avg_all": 0.0,
                "hyp_var_all": 0.0, "degenerate": True}

    focus = hyps[focus_index]
    vs_focus = [_pairwise_bleu(focus, h) for i, h in enumerate(hyps)
                if i != focus_index]
    all_pairs = [_pairwise_bleu(hyps[i], hyps[j])
                 for i in range(len(hyps)) for j in range(i + 1, len(hyps))]
    return {
        "hyp_avg_h1": float(np.mean(vs_focus)),
        "hyp_var_h1": float(np.var(vs_focus)),
        "hyp_avg_all": float(np.mean(all_pairs)),
        "hyp_var_all": float(np.var(all_pairs)),
        "degenerate": False,
    }


def build_feature_vector(segment, hyp_index: int = 0,
                         config: FeatureConfig | None = None) -> np.ndarray:
    """Assemble the configured feature vector for one hypothesis of a segment.

    ``segment`` follows the dataset schema (see :mod:`metricest.data`).
    """
    config = config or FeatureConfig()
    hyp = segment.hyps[hyp_index]

    values = {}
    needs_confidence = {"logprob", "prob"} & set(config.names)
    if needs_confidence:
        if hyp.token_logprobs is not None:
            logprob, prob = decoder_confidence(hyp.token_logprobs)
        elif hyp.logprob is not None:
            logprob, prob = decoder_confidence([hyp.logprob])
        else:
            raise InvalidArgument(
                f"segment {segment.id}: confidence features requested but no "
                "log-probabilities present")
        values["logprob"] = logprob
        values["prob"] = prob

    src_len, hyp_len, ratio = length_features(segment.src, hyp.text)
    values.update(src_len=src_len, hyp_len=hyp_len, len_ratio=ratio)

    if any(n.startswith("hyp_") for n in config.names):
        hs = hyp_space_features([h.text for h in segment.hyps], hyp_index)
        values.update({k: v for k, v in hs.items() if k != "degenerate"})

    return np.array([values[name] for name in config.names], dtype=np.float64)


@dataclass
class FeatureNormalizer:
    """Per-dimension z-normalization; constant dimensions map to zero."""

    mean: np.ndarray = field(default=None)
    std: np.ndarray = field(default=None)

    def fit(self, X: np.ndarray) -> "FeatureNormalizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
        std = np.where(std > 0, std, 1.0)
        self.std = std
        return self

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureNormalizer":
        return cls(mean=np.array(d["mean"], dtype=np.float64),
                   std=np.array(d["std"], dtype=np.float64))
