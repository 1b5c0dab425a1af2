"""Word-level tokenizers and character n-gram extraction.

Two tokenization schemes are provided: the mteval "13a" style used by
sentence BLEU (case preserved, punctuation split off except inside
numbers) and the tercom style used by TER (lowercased, every punctuation
character its own token).
"""

import re
from collections import Counter

from .errors import InvalidArgument

# Common unicode punctuation folded to ASCII before the 13a regexes run.
_UNICODE_PUNCT = {
    "“": '"', "”": '"', "„": '"', "«": '"', "»": '"',
    "‘": "'", "’": "'", "‚": "'",
    "–": "-", "—": "-", "−": "-",
    "…": "...",
    " ": " ",
}

_13A_PUNCT = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DASH = re.compile(r"([0-9])(-)")
_WS = re.compile(r"\s+")

_TERCOM_PUNCT = re.compile(r"([^\w\s])", re.UNICODE)


def tokenize_13a(text: str) -> list[str]:
    """Tokenize in the mteval-v13a style: case preserved, punctuation split
    from words except for periods/commas adjacent to digits."""
    norm = text
    for src, dst in _UNICODE_PUNCT.items():
        norm = norm.replace(src, dst)
    norm = norm.replace("\n", " ").replace("\t", " ")
    norm = f" {norm} "
    norm = _13A_PUNCT.sub(r" \1 ", norm)
    norm = _13A_PERIOD_BEFORE.sub(r"\1 \2 ", norm)
    norm = _13A_PERIOD_AFTER.sub(r" \1 \2", norm)
    norm = _13A_DASH.sub(r"\1 \2 ", norm)
    return norm.split()


def tokenize_tercom(text: str) -> list[str]:
    """Tokenize in the tercom style: lowercase, every punctuation character
    becomes its own token."""
    norm = text.lower()
    norm = _TERCOM_PUNCT.sub(r" \1 ", norm)
    return norm.split()


def char_ngrams(text: str, n: int, remove_space: bool = True) -> Counter:
    """Multiset of contiguous character n-grams.

    With ``remove_space`` all whitespace is deleted before extraction.
    Returns an empty Counter when the processed text is shorter than n.
    """
    if n < 1:
        raise InvalidArgument(f"n-gram order must be >= 1, got {n}")
    if remove_space:
        text = _WS.sub("", text)
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))
