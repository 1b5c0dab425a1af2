"""Byte-pair encoding: merge learning, encoding/decoding, and model
input assembly (source/hypothesis/reference joined by a separator id).

Symbols carry an end-of-word marker suffix so that word-final units are
distinct from word-internal ones, which makes decoding reversible.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidArgument

PAD_ID = 0
UNK_ID = 1
SEP_ID = 2
RESERVED = {"pad": PAD_ID, "unk": UNK_ID, "sep": SEP_ID}

EOW = "</w>"
MIN_MERGE_FREQ = 2


class InputMode(Enum):
    SRC_HYP = "src_hyp"
    HYP = "hyp"
    SRC = "src"
    HYP_REF = "hyp_ref"
    SRC_HYP_REF = "src_hyp_ref"

    @property
    def parts(self) -> tuple[str, ...]:
        return tuple(self.value.split("_"))


@dataclass
class BpeModel:
    merges: list[tuple[str, str]]
    vocab: dict[str, int]
    reserved: dict[str, int] = field(default_factory=lambda: dict(RESERVED))

    def __post_init__(self):
        self._merge_rank = {pair: i for i, pair in enumerate(self.merges)}

    @property
    def size(self) -> int:
        return len(self.reserved) + len(self.vocab)

    def to_dict(self) -> dict:
        return {
            "merges": [list(p) for p in self.merges],
            "vocab": dict(self.vocab),
            "reserved": dict(self.reserved),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BpeModel":
        return cls(
            merges=[tuple(p) for p in d["merges"]],
            vocab=dict(d["vocab"]),
            reserved=dict(d["reserved"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "BpeModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def _word_symbols(word: str) -> tuple[str, ...]:
    """Split a word into characters, marking the last one as word-final."""
    chars = list(word)
    chars[-1] = chars[-1] + EOW
    return tuple(chars)


def bpe_learn(corpus, vocab_size: int = 8192) -> BpeModel:
    """Learn BPE merges from an iterable of texts.

    Repeatedly merges the most frequent adjacent symbol pair (ties broken
    lexicographically) until the vocabulary budget is exhausted or no pair
    occurs at least twice.
    """
    corpus = list(corpus)
    if not corpus:
        raise InvalidArgument("BPE corpus must be non-empty")

    word_freq = Counter()
    for text in corpus:
        word_freq.update(text.split())

    words = {w: _word_symbols(w) for w in word_freq}
    symbols = set()
    for syms in words.values():
        symbols.update(syms)

    merges: list[tuple[str, str]] = []
    budget = vocab_size - len(RESERVED) - len(symbols)
    while budget > 0:
        pair_freq = Counter()
        for w, syms in words.items():
            freq = word_freq[w]
            for a, b in zip(syms, syms[1:]):
                pair_freq[(a, b)] += freq
        if not pair_freq:
            break
        top = max(pair_freq.values())
        if top < MIN_MERGE_FREQ:
            break
        best = min(p for p, f in pair_freq.items() if f == top)
        merges.append(best)
        merged = best[0] + best[1]
        symbols.add(merged)
        words = {w: _apply_merge(syms, best, merged) for w, syms in words.items()}
        budget -= 1

    vocab = {}
    next_id = len(RESERVED)
    for sym in sorted(symbols):
        vocab[sym] = next_id
        next_id += 1
    return BpeModel(merges=merges, vocab=vocab)


def _apply_merge(syms, pair, merged):
    out = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and (syms[i], syms[i + 1]) == pair:
            out.append(merged)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return tuple(out)


def _encode_word(model: BpeModel, word: str) -> list[str]:
    syms = list(_word_symbols(word))
    for pair in model.merges:
        if len(syms) < 2:
            break
        merged = pair[0] + pair[1]
        i = 0
        out = []
        while i < len(syms):
            if i + 1 < len(syms) and (syms[i], syms[i + 1]) == pair:
                out.append(merged)
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return syms


def bpe_encode(model: BpeModel, text: str) -> list[int]:
    """Encode text to token ids; symbols absent from the vocab map to UNK."""
    ids = []
    for word in text.split():
        for sym in _encode_word(model, word):
            ids.append(model.vocab.get(sym, UNK_ID))
    return ids


def bpe_decode(model: BpeModel, ids) -> str:
    """Inverse of :func:`bpe_encode` for in-vocab text."""
    id_to_sym = {i: s for s, i in model.vocab.items()}
    words, current = [], ""
    for tid in ids:
        sym = id_to_sym.get(tid)
        if sym is None:
            continue
        if sym.endswith(EOW):
            words.append(current + sym[: -len(EOW)])
            current = ""
        else:
            current += sym
    if current:
        words.append(current)
    return " ".join(words)


def assemble_input(mode: InputMode, model: BpeModel, src: str | None = None,
                   hyp: str | None = None, ref: str | None = None) -> list[int]:
    """Concatenate the BPE encodings required by ``mode``, joined by SEP ids."""
    available = {"src": src, "hyp": hyp, "ref": ref}
    ids: list[int] = []
    for i, part in enumerate(mode.parts):
        text = available[part]
        if text is None:
            raise InvalidArgument(f"input mode {mode.value} requires '{part}'")
        if i > 0:
            ids.append(SEP_ID)
        ids.extend(bpe_encode(model, text))
    return ids
