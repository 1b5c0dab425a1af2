import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricest.data import Hypothesis, Segment
from metricest.errors import InvalidArgument
from metricest.features import (DEFAULT_FEATURES, EXTENDED_FEATURES,
                                FeatureConfig, FeatureNormalizer,
                                build_feature_vector, decoder_confidence,
                                hyp_space_features, length_features)
from metricest.metrics import sent_bleu


def _segment(hyps, src="the cat sat"):
    return Segment(id="s1", src=src, hyps=hyps)


class TestDecoderConfidence:
    def test_sums_and_exponentiates(self):
        logprob, prob = decoder_confidence([-0.5, -1.0, -0.25])
        assert logprob == pytest.approx(-1.75)
        assert prob == pytest.approx(math.exp(-1.75))

    def test_single_aggregate(self):
        logprob, prob = decoder_confidence([-2.0])
        assert (logprob, prob) == (-2.0, pytest.approx(math.exp(-2.0)))

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgument):
            decoder_confidence([])


class TestLengthFeatures:
    def test_counts_and_ratio(self):
        src_len, hyp_len, ratio = length_features("a b c d", "x y")
        assert (src_len, hyp_len) == (4, 2)
        assert ratio == pytest.approx(0.5)

    def test_punct_counts_as_tokens(self):
        src_len, hyp_len, _ = length_features("Hello, world!", "Hi.")
        assert (src_len, hyp_len) == (4, 2)

    def test_empty_source_rejected(self):
        with pytest.raises(InvalidArgument):
            length_features("", "x")

    def test_empty_hypothesis_allowed(self):
        _, hyp_len, ratio = length_features("a b", "")
        assert hyp_len == 0 and ratio == 0.0


class TestHypSpace:
    def test_population_variance_vs_focus(self):
        hyps = ["a b c", "a b d", "x y z"]
        sims = [sent_bleu("a b c", h).value for h in hyps[1:]]
        out = hyp_space_features(hyps, focus_index=0)
        assert out["hyp_avg_h1"] == pytest.approx(np.mean(sims))
        assert out["hyp_var_h1"] == pytest.approx(np.var(sims))
        assert not out["degenerate"]

    def test_all_pairs_count(self):
        hyps = ["a b", "a c", "b c", "a b c"]
        out = hyp_space_features(hyps)
        pairs = [sent_bleu(hyps[i], hyps[j]).value
                 for i in range(4) for j in range(i + 1, 4)]
        assert len(pairs) == 6
        assert out["hyp_avg_all"] == pytest.approx(np.mean(pairs))
        assert out["hyp_var_all"] == pytest.approx(np.var(pairs))

    def test_single_hypothesis_degenerate(self):
        out = hyp_space_features(["only one"])
        assert out["degenerate"]
        assert all(out[k] == 0.0 for k in
                   ("hyp_avg_h1", "hyp_var_h1", "hyp_avg_all", "hyp_var_all"))

    def test_focus_out_of_range(self):
        with pytest.raises(InvalidArgument):
            hyp_space_features(["a", "b"], focus_index=2)

    def test_identical_hypotheses_zero_variance(self):
        out = hyp_space_features(["same text"] * 4)
        assert out["hyp_var_h1"] == 0.0 and out["hyp_avg_h1"] == 1.0


class TestBuildFeatureVector:
    def test_default6_layout(self):
        seg = _segment([
            Hypothesis(text="the cat sat", token_logprobs=[-0.1, -0.2, -0.3]),
            Hypothesis(text="a cat sat", logprob=-1.0),
        ])
        vec = build_feature_vector(seg, 0, FeatureConfig("default6"))
        assert vec.shape == (6,)
        assert vec[0] == pytest.approx(-0.6)            # logprob
        assert vec[1] == pytest.approx(math.exp(-0.6))  # prob
        assert vec[2] == 3 and vec[3] == 3              # src / hyp length
        assert vec[4] == pytest.approx(1.0)             # length ratio
        assert vec[5] == 0.0                            # var vs focus (1 sim)

    def test_extended9_superset(self):
        seg = _segment([Hypothesis(text="a b", logprob=-1.0),
                        Hypothesis(text="a c", logprob=-2.0),
                        Hypothesis(text="b c", logprob=-3.0)])
        v6 = build_feature_vector(seg, 1, FeatureConfig("default6"))
        v9 = build_feature_vector(seg, 1, FeatureConfig("extended9"))
        assert v9.shape == (9,)
        np.testing.assert_array_equal(v9[:6], v6)

    def test_aggregate_logprob_fallback(self):
        seg = _segment([Hypothesis(text="a b", logprob=-1.5)])
        vec = build_feature_vector(seg)
        assert vec[0] == pytest.approx(-1.5)

    def test_missing_confidence_rejected(self):
        seg = _segment([Hypothesis(text="a b")])
        with pytest.raises(InvalidArgument):
            build_feature_vector(seg)

    def test_feature_names_match_dims(self):
        assert FeatureConfig("default6").names == DEFAULT_FEATURES
        assert FeatureConfig("extended9").names == EXTENDED_FEATURES
        assert FeatureConfig("default6").dim == 6
        assert FeatureConfig("extended9").dim == 9


class TestNormalizer:
    def test_fit_apply_zero_mean_unit_sample_std(self):
        rng = np.random.default_rng(0)
        X = rng.normal(loc=3.0, scale=2.0, size=(50, 4))
        Z = FeatureNormalizer().fit(X).apply(X)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1.0, atol=1e-12)

    def test_constant_dimension_maps_to_zero(self):
        X = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
        Z = FeatureNormalizer().fit(X).apply(X)
        assert np.all(Z[:, 0] == 0.0)
        assert np.isfinite(Z).all()

    def test_single_row_fit(self):
        X = np.array([[1.0, 2.0]])
        Z = FeatureNormalizer().fit(X).apply(X)
        np.testing.assert_array_equal(Z, np.zeros((1, 2)))

    def test_round_trip_dict(self):
        norm = FeatureNormalizer().fit(np.random.default_rng(1)
                                       .normal(size=(20, 3)))
        clone = FeatureNormalizer.from_dict(norm.to_dict())
        X = np.random.default_rng(2).normal(size=(5, 3))
        np.testing.assert_allclose(clone.apply(X), norm.apply(X), rtol=1e-15)

    @given(st.lists(st.lists(st.floats(-100, 100), min_size=3, max_size=3),
                    min_size=2, max_size=20))
    @settings(max_examples=40, deadline=None)
    def test_apply_is_affine_and_finite(self, rows):
        X = np.array(rows)
        Z = FeatureNormalizer().fit(X).apply(X)
        assert np.isfinite(Z).all()
