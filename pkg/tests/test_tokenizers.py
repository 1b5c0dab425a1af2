import pytest
from hypothesis import given, strategies as st

from metricest.errors import InvalidArgument
from metricest.tokenizers import char_ngrams, tokenize_13a, tokenize_tercom


class Test13a:
    def test_period_split_from_word(self):
        assert tokenize_13a("IT hat nicht funktioniert.") == \
            ["IT", "hat", "nicht", "funktioniert", "."]

    def test_bare_word(self):
        assert tokenize_13a("word") == ["word"]

    def test_comma_and_exclamation(self):
        assert tokenize_13a("Hello, world!") == ["Hello", ",", "world", "!"]

    def test_case_preserved(self):
        assert tokenize_13a("Das Haus") == ["Das", "Haus"]

    def test_digit_adjacent_period_kept(self):
        assert tokenize_13a("3.14 is pi") == ["3.14", "is", "pi"]

    def test_digit_adjacent_comma_kept(self):
        assert tokenize_13a("1,000 Euro") == ["1,000", "Euro"]

    def test_empty(self):
        assert tokenize_13a("") == []

    def test_unicode_quotes_normalized(self):
        assert tokenize_13a("„Hallo“") == ['"', "Hallo", '"']

    def test_idempotent_on_own_output(self):
        for text in ["Hello, world!", "Das Haus.", "a-b c 3.14"]:
            once = tokenize_13a(text)
            assert tokenize_13a(" ".join(once)) == once


class TestTercom:
    def test_lowercase_and_punct(self):
        assert tokenize_tercom("Das Haus.") == ["das", "haus", "."]

    def test_plain_word(self):
        assert tokenize_tercom("abc") == ["abc"]

    def test_empty(self):
        assert tokenize_tercom("") == []

    def test_every_punct_is_token(self):
        assert tokenize_tercom("a,b.c!") == ["a", ",", "b", ".", "c", "!"]

    def test_idempotent_on_own_output(self):
        for text in ["Das Haus.", "a,b.c!", "Wie geht's?"]:
            once = tokenize_tercom(text)
            assert tokenize_tercom(" ".join(once)) == once


@given(st.text(alphabet="abc .,!", max_size=30))
def test_no_token_empty_or_spaced(text):
    for tok in tokenize_13a(text) + tokenize_tercom(text):
        assert tok
        assert " " not in tok


class TestCharNgrams:
    def test_space_removed(self):
        assert char_ngrams("ab c", 2) == {"ab": 1, "bc": 1}

    def test_too_short(self):
        assert char_ngrams("a", 2) == {}

    def test_multiplicity_without_space_removal(self):
        assert char_ngrams("aaa", 2, remove_space=False) == {"aa": 2}

    def test_zero_order_rejected(self):
        with pytest.raises(InvalidArgument):
            char_ngrams("abc", 0)

    @given(st.text(alphabet="abc ", max_size=40), st.integers(1, 6))
    def test_count_identity(self, text, n):
        processed = "".join(text.split())
        counts = char_ngrams(text, n)
        assert sum(counts.values()) == max(0, len(processed) - n + 1)
