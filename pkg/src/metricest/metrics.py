"""Sentence-level reference-based MT metrics.

All scores live on a 0-1 scale (TER excepted, which is unbounded above).
Higher is better for every metric except TER.
"""

import math
from collections import Counter
from dataclasses import dataclass

from .errors import InvalidArgument
from .stemmer import porter_stem
from .tokenizers import char_ngrams, tokenize_13a, tokenize_tercom

BLEU_MAX_ORDER = 4
CHRF_MAX_ORDER = 6
CHRF_BETA = 2.0

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

TER_MAX_BLOCK = 10
TER_MAX_DISTANCE = 50

COMPUTABLE_METRICS = ("sentbleu", "chrf", "ter", "meteor")
EXTERNAL_PREFIX = "external:"


@dataclass(frozen=True)
class MetricScore:
    metric: str
    value: float

    @property
    def higher_is_better(self) -> bool:
        return self.metric != "ter"


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sent_bleu(hyp: str, ref: str) -> MetricScore:
    """Sentence BLEU: 13a tokenization, case-sensitive, orders 1-4 with
    effective-order handling, exponential smoothing of zero precisions,
    multiplied by the brevity penalty."""
    hyp_tok = tokenize_13a(hyp)
    ref_tok = tokenize_13a(ref)
    if not ref_tok:
        raise InvalidArgument("sentBLEU reference is empty after tokenization")
    if not hyp_tok:
        return MetricScore("sentbleu", 0.0)

    log_prec_sum = 0.0
    orders = 0
    smooth = 1.0
    for n in range(1, BLEU_MAX_ORDER + 1):
        hyp_ngrams = _ngram_counts(hyp_tok, n)
        total = sum(hyp_ngrams.values())
        if total == 0:
            break
        ref_ngrams = _ngram_counts(ref_tok, n)
        correct = sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
        if correct == 0:
            smooth *= 2.0
            precision = 1.0 / (smooth * total)
        else:
            precision = correct / total
        log_prec_sum += math.log(precision)
        orders += 1

    if orders == 0:
        return MetricScore("sentbleu", 0.0)
    bp = min(1.0, math.exp(1.0 - len(ref_tok) / len(hyp_tok)))
    return MetricScore("sentbleu", bp * math.exp(log_prec_sum / orders))


def chrf(hyp: str, ref: str) -> MetricScore:
    """ChrF: character n-grams of orders 1-6 after whitespace removal,
    averaged precision/recall over effective orders, F-score with beta=2."""
    if not ref.strip():
        raise InvalidArgument("chrF reference is empty")
    if not hyp.strip():
        return MetricScore("chrf", 0.0)

    prec_sum = rec_sum = 0.0
    orders = 0
    for n in range(1, CHRF_MAX_ORDER + 1):
        hyp_ngrams = char_ngrams(hyp, n, remove_space=True)
        ref_ngrams = char_ngrams(ref, n, remove_space=True)
        hyp_total = sum(hyp_ngrams.values())
        ref_total = sum(ref_ngrams.values())
        if hyp_total == 0 and ref_total == 0:
            continue
        matched = sum(min(c, ref_ngrams[g]) for g, c in hyp_ngrams.items())
        prec_sum += matched / hyp_total if hyp_total else 0.0
        rec_sum += matched / ref_total if ref_total else 0.0
        orders += 1

    if orders == 0:
        return MetricScore("chrf", 0.0)
    precision = prec_sum / orders
    recall = rec_sum / orders
    beta_sq = CHRF_BETA ** 2
    denom = beta_sq * precision + recall
    value = (1 + beta_sq) * precision * recall / denom if denom > 0 else 0.0
    return MetricScore("chrf", value)


def _levenshtein(a, b):
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _ref_subsequences(ref, max_len):
    """All distinct contiguous reference subsequences up to max_len."""
    subseqs = set()
    for i in range(len(ref)):
        for length in range(1, min(max_len, len(ref) - i) + 1):
            subseqs.add(tuple(ref[i:i + length]))
    return subseqs


def shift_candidates(hyp, ref):
    """Enumerate single block shifts of ``hyp`` allowed by the tercom-style
    constraints: the block must match a reference subsequence, block length
    and move distance are bounded."""
    allowed = _ref_subsequences(ref, TER_MAX_BLOCK)
    n = len(hyp)
    seen = set()
    for start in range(n):
        for length in range(1, min(TER_MAX_BLOCK, n - start) + 1):
            block = tuple(hyp[start:start + length])
            if block not in allowed:
                continue
            rest = hyp[:start] + hyp[start + length:]
            for dest in range(len(rest) + 1):
                if dest == start:
                    continue
                if abs(dest - start) > TER_MAX_DISTANCE:
                    continue
                shifted = tuple(rest[:dest]) + block + tuple(rest[dest:])
                if shifted == tuple(hyp) or shifted in seen:
                    continue
                seen.add(shifted)
                yield list(shifted)


# Below this length the shift search is exact; greedy tercom-style
# selection can miss the optimum by one on rare short inputs.
TER_EXACT_LIMIT = 10


def _ter_edits(hyp_tok, ref_tok):
    if len(hyp_tok) <= TER_EXACT_LIMIT and len(ref_tok) <= TER_EXACT_LIMIT:
        return _ter_exact(hyp_tok, ref_tok)
    return _ter_greedy(hyp_tok, ref_tok)


def _ter_exact(hyp_tok, ref_tok):
    """Minimum of shifts + remaining edit distance over all shift
    sequences, found by breadth-first layering over the shift count with
    an upper-bound prune."""
    base = _levenshtein(hyp_tok, ref_tok)
    best_total = base
    best = (base, 0)
    seen = {tuple(hyp_tok)}
    frontier = [list(hyp_tok)]
    shifts = 0
    while frontier and shifts + 1 < best_total:
        shifts += 1
        nxt = []
        for h in frontier:
            for cand in shift_candidates(h, ref_tok):
                key = tuple(cand)
                if key in seen:
                    continue
                seen.add(key)
                d = _levenshtein(cand, ref_tok)
                if shifts + d < best_total:
                    best_total = shifts + d
                    best = (d, shifts)
                nxt.append(cand)
        frontier = nxt
    return best


def _ter_greedy(hyp_tok, ref_tok):
    """Greedy tercom-style alignment: repeatedly apply the block shift that
    best reduces the remaining edit distance, then count leftover edits."""
    current = list(hyp_tok)
    shifts = 0
    edits = _levenshtein(current, ref_tok)
    while edits > 0:
        best_hyp = None
        best_edits = edits
        for shifted in shift_candidates(current, ref_tok):
            d = _levenshtein(shifted, ref_tok)
            if d < best_edits:
                best_edits = d
                best_hyp = shifted
        if best_hyp is None:
            break
        current = best_hyp
        shifts += 1
        edits = best_edits
    return edits, shifts


def ter(hyp: str, ref: str) -> MetricScore:
    """Translation edit rate: (edits + shifts) / reference length with
    tercom tokenization. Shift selection is exact for short inputs and
    greedy best-improvement beyond TER_EXACT_LIMIT tokens."""
    hyp_tok = tokenize_tercom(hyp)
    ref_tok = tokenize_tercom(ref)
    if not ref_tok:
        raise InvalidArgument("TER reference is empty after tokenization")
    edits, shifts = _ter_edits(hyp_tok, ref_tok)
    return MetricScore("ter", (edits + shifts) / len(ref_tok))


def _meteor_align(hyp_tok, ref_tok):
    """Two-stage alignment (exact, then Porter stems). Returns matched
    (hyp_index, ref_index) pairs sorted by hypothesis position."""
    hyp_free = [True] * len(hyp_tok)
    ref_free = [True] * len(ref_tok)
    pairs = []
    for key in (lambda w: w, porter_stem):
        hyp_keys = [key(w) for w in hyp_tok]
        ref_keys = [key(w) for w in ref_tok]
        prev_ref = -1
        for i, hk in enumerate(hyp_keys):
            if not hyp_free[i]:
                continue
            # Prefer the reference position that extends the previous match
            # contiguously; this keeps the chunk count minimal in practice.
            chosen = None
            if 0 <= prev_ref + 1 < len(ref_tok) and ref_free[prev_ref + 1] \
                    and ref_keys[prev_ref + 1] == hk:
                chosen = prev_ref + 1
            else:
                for j, rk in enumerate(ref_keys):
                    if ref_free[j] and rk == hk:
                        chosen = j
                        break
            if chosen is not None:
                hyp_free[i] = False
                ref_free[chosen] = False
                pairs.append((i, chosen))
                prev_ref = chosen
    return sorted(pairs)


def _count_chunks(pairs):
    chunks = 0
    prev = None
    for hi, ri in pairs:
        if prev is None or hi != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (hi, ri)
    return chunks


def meteor_lite(hyp: str, ref: str) -> MetricScore:
    """METEOR with exact and Porter-stem stages only (no synonym tables)."""
    hyp_tok = [w.lower() for w in tokenize_13a(hyp)]
    ref_tok = [w.lower() for w in tokenize_13a(ref)]
    if not ref_tok:
        raise InvalidArgument("METEOR reference is empty after tokenization")
    if not hyp_tok:
        return MetricScore("meteor", 0.0)

    pairs = _meteor_align(hyp_tok, ref_tok)
    matches = len(pairs)
    if matches == 0:
        return MetricScore("meteor", 0.0)
    precision = matches / len(hyp_tok)
    recall = matches / len(ref_tok)
    f_mean = (precision * recall
              / (METEOR_ALPHA * precision + (1 - METEOR_ALPHA) * recall))
    chunks = _count_chunks(pairs)
    penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
    return MetricScore("meteor", f_mean * (1.0 - penalty))


_METRIC_FNS = {
    "sentbleu": sent_bleu,
    "chrf": chrf,
    "ter": ter,
    "meteor": meteor_lite,
}


def score_all(hyp: str, ref: str, metrics) -> dict[str, MetricScore]:
    """Apply each requested computable metric; external ids are rejected."""
    out = {}
    for m in metrics:
        fn = _METRIC_FNS.get(m)
        if fn is None:
            raise InvalidArgument(f"metric '{m}' is not computable here")
        out[m] = fn(hyp, ref)
    return out
