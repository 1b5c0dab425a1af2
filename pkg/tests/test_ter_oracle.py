"""Shift-aware edit distance vs an independently coded exhaustive oracle."""

import itertools

import numpy as np
import pytest

from metricest.metrics import shift_candidates, ter

from .oracles import edit_distance, ter_bruteforce


def _ter_edits(hyp_tokens, ref_tokens):
    value = ter(" ".join(hyp_tokens), " ".join(ref_tokens)).value
    return round(value * len(ref_tokens))


class TestShiftCandidates:
    def test_blocks_must_match_reference(self):
        # "x" never occurs in the reference, so no candidate may move it alone
        for moved in shift_candidates(["x", "a", "b"], ["a", "b"]):
            assert moved.count("x") == 1

    def test_no_identity_moves(self):
        hyp = ["a", "b", "a", "b"]
        for moved in shift_candidates(hyp, ["a", "b"]):
            assert moved != hyp

    def test_matches_oracle_enumeration(self):
        from .oracles import _all_shifts
        hyp = ["c", "d", "a", "b"]
        ref = ["a", "b", "c", "d"]
        got = {tuple(m) for m in shift_candidates(hyp, ref)}
        want = {tuple(m) for m in _all_shifts(hyp, ref)}
        assert got == want


class TestAgainstBruteForce:
    def test_exhaustive_short(self):
        # every hyp/ref pair over a 3-symbol alphabet up to length 3
        alphabet = "abc"
        seqs = [list(p) for n in range(4)
                for p in itertools.product(alphabet, repeat=n)]
        for hyp in seqs:
            for ref in seqs:
                if not ref:
                    continue
                assert _ter_edits(hyp, ref) == ter_bruteforce(hyp, ref), \
                    (hyp, ref)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_medium(self, seed):
        rng = np.random.default_rng(seed)
        alphabet = list("abcd")
        for _ in range(60):
            hyp = [alphabet[i] for i in rng.integers(0, 4, rng.integers(1, 7))]
            ref = [alphabet[i] for i in rng.integers(0, 4, rng.integers(1, 7))]
            assert _ter_edits(hyp, ref) == ter_bruteforce(hyp, ref), (hyp, ref)

    def test_known_greedy_trap(self):
        # best-improvement greedy picks a shift that strands an extra edit
        hyp = ["d", "d", "a", "b", "c", "a"]
        ref = ["c", "b", "d", "d", "a", "d"]
        assert _ter_edits(hyp, ref) == ter_bruteforce(hyp, ref) == 3

    def test_shifts_never_beat_plain_edit_distance_bound(self):
        rng = np.random.default_rng(99)
        for _ in range(40):
            hyp = [str(i) for i in rng.integers(0, 3, 5)]
            ref = [str(i) for i in rng.integers(0, 3, 5)]
            assert _ter_edits(hyp, ref) <= edit_distance(hyp, ref)
