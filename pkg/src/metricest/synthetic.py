"""Synthetic segment generator for end-to-end checks and demos.

Each segment is a pseudo-translation task: a reference sentence over a
small vocabulary, a word-mapped source, and an n-best list of hypotheses
at increasing corruption levels. Decoder log-probabilities track the
corruption. The metric-like target is a smooth deterministic function of
observable glassbox quantities plus bounded noise, so a feature-fused
model can recover it while a text-only model sees it only indirectly.
"""

import math

import numpy as np

from .data import Hypothesis, Segment
from .features import hyp_space_features, length_features

TARGET_VOCAB = [
    "haus", "katze", "hund", "baum", "fluss", "stadt", "berg", "licht",
    "nacht", "morgen", "wasser", "stein", "wind", "blume", "vogel", "brot",
]
SOURCE_VOCAB = [
    "house", "cat", "dog", "tree", "river", "city", "mountain", "light",
    "night", "morning", "water", "stone", "wind", "flower", "bird", "bread",
]

NOISE_SCALE = 0.02


def _corrupt(words, rate, rng):
    out = []
    for w in words:
        if rng.random() < rate:
            out.append(TARGET_VOCAB[rng.integers(len(TARGET_VOCAB))])
        else:
            out.append(w)
    # occasional length change so the length ratio carries signal
    if rng.random() < rate:
        out = out[:-1] if len(out) > 2 and rng.random() < 0.5 \
            else out + [TARGET_VOCAB[rng.integers(len(TARGET_VOCAB))]]
    return out


def _target_score(logprob, len_ratio, var_h1, rng):
    z = 2.0 + 0.8 * logprob + 1.5 * (1.0 - abs(len_ratio - 1.0)) - 3.0 * var_h1
    value = 1.0 / (1.0 + math.exp(-z))
    value += rng.uniform(-NOISE_SCALE, NOISE_SCALE)
    return float(np.clip(value, 0.0, 1.0))


def generate_synthetic(n_segments: int, seed: int = 0, n_best: int = 5,
                       target: str = "sentbleu") -> list:
    """Generate segments whose per-hypothesis ``target`` score is a smooth
    function of decoder confidence, length ratio, and hypothesis-space
    variance, plus bounded noise. Human z-scores correlated with the
    target are attached as well."""
    rng = np.random.default_rng(seed)
    segments = []
    for seg_idx in range(n_segments):
        length = int(rng.integers(4, 10))
        ref_words = [TARGET_VOCAB[rng.integers(len(TARGET_VOCAB))]
                     for _ in range(length)]
        src_words = [SOURCE_VOCAB[TARGET_VOCAB.index(w)] for w in ref_words]
        quality = rng.uniform(0.0, 0.5)  # base corruption of this segment

        hyps = []
        for rank in range(n_best):
            rate = min(0.9, quality + 0.08 * rank)
            hyp_words = _corrupt(list(ref_words), rate, rng)
            token_logprobs = [
                -(0.05 + 2.0 * rate) * rng.uniform(0.7, 1.3)
                for _ in hyp_words
            ]
            hyps.append(Hypothesis(text=" ".join(hyp_words),
                                   token_logprobs=token_logprobs,
                                   logprob=float(sum(token_logprobs))))

        seg = Segment(id=f"syn{seg_idx}", src=" ".join(src_words),
                      ref=" ".join(ref_words), hyps=hyps)
        hs_texts = [h.text for h in seg.hyps]
        for idx, hyp in enumerate(seg.hyps):
            _, _, ratio = length_features(seg.src, hyp.text)
            var_h1 = hyp_space_features(hs_texts, idx)["hyp_var_h1"]
            score = _target_score(hyp.logprob, ratio, var_h1, rng)
            hyp.scores[target] = score
            hyp.human_z = float(1.5 * (score - 0.5)
                                + rng.normal(0.0, 0.08))
        segments.append(seg)
    return segments
