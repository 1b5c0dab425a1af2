import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricest.bpe import SEP_ID, InputMode, bpe_learn
from metricest.data import (Hypothesis, Segment, compute_metric_columns,
                            derive_human_z, expand_hypotheses, ingest_nbest,
                            load_jsonl, pairs_to_examples, save_jsonl,
                            split_dataset, subsample)
from metricest.errors import InvalidArgument
from metricest.features import FeatureConfig
from metricest.metrics import sent_bleu
from metricest.model import MeModelConfig


def _segments(n=4, with_ref=True, with_logprob=True):
    out = []
    texts = ["the cat sat", "a dog ran", "the mat is flat", "dogs and cats"]
    for i in range(n):
        hyps = [Hypothesis(text=texts[(i + j) % len(texts)],
                           logprob=-1.0 - j if with_logprob else None)
                for j in range(3)]
        out.append(Segment(id=f"seg{i}", src=texts[i % len(texts)],
                           ref=texts[(i + 1) % len(texts)] if with_ref
                           else None, hyps=hyps))
    return out


class TestJsonl:
    def test_round_trip(self, tmp_path):
        segments = _segments()
        segments[0].hyps[0].scores["sentbleu"] = 0.5
        segments[0].hyps[1].human_z = -0.3
        segments[0].hyps[2].token_logprobs = [-0.1, -0.2]
        path = tmp_path / "data.jsonl"
        save_jsonl(segments, path)
        loaded = load_jsonl(path)
        assert [s.to_dict() for s in loaded] == [s.to_dict() for s in segments]

    def test_malformed_json_points_at_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "src": "x", "hyps": [{"text": "y"}]}\n'
                        "{oops\n")
        with pytest.raises(InvalidArgument, match=r":2"):
            load_jsonl(path)

    def test_missing_field_points_at_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "hyps": [{"text": "y"}]}\n')
        with pytest.raises(InvalidArgument, match=r":1.*src"):
            load_jsonl(path)

    def test_empty_hyps_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "src": "x", "hyps": []}\n')
        with pytest.raises(InvalidArgument, match="at least one hypothesis"):
            load_jsonl(path)

    def test_unknown_score_key_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "src": "x", '
                        '"hyps": [{"text": "y", "scores": {"bogus": 1}}]}\n')
        with pytest.raises(InvalidArgument, match="bogus"):
            load_jsonl(path)

    def test_external_score_key_allowed(self, tmp_path):
        path = tmp_path / "ok.jsonl"
        path.write_text('{"id": "a", "src": "x", "hyps": '
                        '[{"text": "y", "scores": {"external:comet": 0.7}}]}\n')
        segments = load_jsonl(path)
        assert segments[0].hyps[0].scores == {"external:comet": 0.7}

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "ok.jsonl"
        path.write_text('\n{"id": "a", "src": "x", "hyps": [{"text": "y"}]}'
                        "\n\n")
        assert len(load_jsonl(path)) == 1


class TestIngestNbest:
    def _write(self, tmp_path, nbest_lines):
        src = tmp_path / "src.txt"
        src.write_text("source zero\nsource one\n")
        nbest = tmp_path / "nbest.tsv"
        nbest.write_text("\n".join(nbest_lines) + "\n")
        return src, nbest

    def test_basic_join(self, tmp_path):
        src, nbest = self._write(tmp_path, [
            "0\t0\t-1.5\t-0.5,-1.0\thyp a",
            "0\t1\t-2.0\t\thyp b",
            "1\t0\t-0.3\t-0.3\thyp c",
        ])
        segments = ingest_nbest(src, nbest)
        assert len(segments) == 2
        assert segments[0].src == "source zero"
        assert [h.text for h in segments[0].hyps] == ["hyp a", "hyp b"]
        assert segments[0].hyps[0].token_logprobs == [-0.5, -1.0]
        assert segments[0].hyps[1].token_logprobs is None
        assert segments[1].hyps[0].logprob == pytest.approx(-0.3)

    def test_rank_out_of_order(self, tmp_path):
        src, nbest = self._write(tmp_path, ["0\t1\t-1.0\t\thyp"])
        with pytest.raises(InvalidArgument, match=r"nbest.tsv:1.*rank 1"):
            ingest_nbest(src, nbest)

    def test_source_index_out_of_range(self, tmp_path):
        src, nbest = self._write(tmp_path, ["5\t0\t-1.0\t\thyp"])
        with pytest.raises(InvalidArgument, match=r":1.*out of\s+range"):
            ingest_nbest(src, nbest)

    def test_field_count_checked(self, tmp_path):
        src, nbest = self._write(tmp_path, ["0\t0\t-1.0\thyp"])
        with pytest.raises(InvalidArgument, match="5 tab-separated"):
            ingest_nbest(src, nbest)

    def test_non_numeric_rejected(self, tmp_path):
        src, nbest = self._write(tmp_path, ["0\t0\tnot-a-float\t\thyp"])
        with pytest.raises(InvalidArgument, match=":1"):
            ingest_nbest(src, nbest)


class TestMetricColumns:
    def test_fills_scores(self):
        segments = _segments(2)
        compute_metric_columns(segments, ["sentbleu", "chrf"])
        for seg in segments:
            for hyp in seg.hyps:
                assert set(hyp.scores) >= {"sentbleu", "chrf"}
                assert hyp.scores["sentbleu"] == pytest.approx(
                    sent_bleu(hyp.text, seg.ref).value)

    def test_idempotent(self):
        segments = _segments(2)
        compute_metric_columns(segments, ["sentbleu"])
        first = [h.scores["sentbleu"] for s in segments for h in s.hyps]
        compute_metric_columns(segments, ["sentbleu"])
        second = [h.scores["sentbleu"] for s in segments for h in s.hyps]
        assert first == second

    def test_missing_reference_rejected(self):
        segments = _segments(2, with_ref=False)
        with pytest.raises(InvalidArgument, match="seg0"):
            compute_metric_columns(segments, ["sentbleu"])

    def test_external_metric_rejected(self):
        with pytest.raises(InvalidArgument):
            compute_metric_columns(_segments(1), ["external:comet"])


class TestExpand:
    def test_k_capped_at_nbest_size(self):
        segments = _segments(3)  # 3 hypotheses each
        pairs = expand_hypotheses(segments, k=10)
        assert len(pairs) == 9
        assert {p.hyp_index for p in pairs} == {0, 1, 2}

    def test_k1_takes_top_hypothesis(self):
        segments = _segments(3)
        pairs = expand_hypotheses(segments, k=1)
        assert len(pairs) == 3
        assert all(p.hyp_index == 0 for p in pairs)

    def test_features_use_pair_focus(self):
        segments = _segments(1)
        config = FeatureConfig("default6")
        pairs = expand_hypotheses(segments, k=2, feature_config=config)
        # logprob feature differs across ranks, so vectors must differ
        assert not np.array_equal(pairs[0].features, pairs[1].features)

    def test_human_z_becomes_human_target(self):
        segments = _segments(1)
        segments[0].hyps[0].human_z = 0.7
        pairs = expand_hypotheses(segments, k=1)
        assert pairs[0].targets["human"] == 0.7

    def test_bad_k_rejected(self):
        with pytest.raises(InvalidArgument):
            expand_hypotheses(_segments(1), k=0)

    @given(st.integers(1, 5))
    @settings(max_examples=10, deadline=None)
    def test_smaller_k_yields_prefix(self, k):
        segments = _segments(4)
        small = expand_hypotheses(segments, k=k)
        big = expand_hypotheses(segments, k=k + 1)
        small_keys = [(p.segment_id, p.hyp_index) for p in small]
        big_keys = {(p.segment_id, p.hyp_index) for p in big}
        assert set(small_keys) <= big_keys


class TestHumanZ:
    def test_derives_per_annotator(self):
        segments = _segments(1)
        for hyp, (raw, ann) in zip(segments[0].hyps,
                                   [(10, "a"), (20, "a"), (30, "a")]):
            hyp.human_raw, hyp.annotator = raw, ann
        degenerate = derive_human_z(segments)
        assert degenerate == 0
        zs = [h.human_z for h in segments[0].hyps]
        assert np.mean(zs) == pytest.approx(0.0, abs=1e-12)
        assert np.std(zs, ddof=1) == pytest.approx(1.0, abs=1e-12)

    def test_existing_z_wins(self):
        segments = _segments(1)
        segments[0].hyps[0].human_raw = 50.0
        segments[0].hyps[0].annotator = "a"
        segments[0].hyps[0].human_z = 2.5
        derive_human_z(segments)
        assert segments[0].hyps[0].human_z == 2.5

    def test_missing_annotator_rejected(self):
        segments = _segments(1)
        segments[0].hyps[0].human_raw = 50.0
        with pytest.raises(InvalidArgument, match="annotator"):
            derive_human_z(segments)

    def test_no_raw_scores_noop(self):
        assert derive_human_z(_segments(2)) == 0


class TestSampling:
    def test_subsample_size_and_determinism(self):
        segments = _segments(4)
        s1 = subsample(segments, 2, seed=5)
        s2 = subsample(segments, 2, seed=5)
        assert len(s1) == 2
        assert [s.id for s in s1] == [s.id for s in s2]
        s3 = subsample(segments, 2, seed=6)
        assert {s.id for s in s1} != {s.id for s in s3} or \
            [s.id for s in s1] != [s.id for s in s3]

    def test_subsample_no_replacement(self):
        segments = _segments(4)
        ids = [s.id for s in subsample(segments, 4, seed=0)]
        assert sorted(ids) == sorted(s.id for s in segments)

    def test_split_disjoint_exhaustive(self):
        segments = _segments(4)
        train, dev = split_dataset(segments, dev_count=1, seed=0)
        assert len(train) == 3 and len(dev) == 1
        assert {s.id for s in train} | {s.id for s in dev} \
            == {s.id for s in segments}
        assert not ({s.id for s in train} & {s.id for s in dev})

    def test_split_deterministic(self):
        segments = _segments(4)
        d1 = [s.id for s in split_dataset(segments, 2, seed=9)[1]]
        d2 = [s.id for s in split_dataset(segments, 2, seed=9)[1]]
        assert d1 == d2

    def test_oversized_dev_rejected(self):
        with pytest.raises(InvalidArgument):
            split_dataset(_segments(3), dev_count=3, seed=0)


class TestPairsToExamples:
    def _setup(self):
        segments = _segments(3)
        compute_metric_columns(segments, ["sentbleu"])
        bpe = bpe_learn([s.src for s in segments]
                        + [h.text for s in segments for h in s.hyps],
                        vocab_size=60)
        config = MeModelConfig(vocab_size=60, embed_dim=4, hidden_dim=2,
                               feature_dim=6, head_hidden=3)
        pairs = expand_hypotheses(segments, k=2,
                                  feature_config=FeatureConfig("default6"))
        return pairs, bpe, config

    def test_encoding_and_masks(self):
        pairs, bpe, config = self._setup()
        examples = pairs_to_examples(pairs, bpe, config)
        assert len(examples) == len(pairs)
        for ex, pair in zip(examples, pairs):
            assert ex.ids.count(SEP_ID) == 1  # src [SEP] hyp
            assert ex.target_mask[0] == 1.0
            assert ex.targets[0] == pytest.approx(pair.targets["sentbleu"])

    def test_absent_target_masked(self):
        pairs, bpe, config = self._setup()
        config = MeModelConfig(**{**config.__dict__,
                                  "targets": ("sentbleu", "ter")})
        examples = pairs_to_examples(pairs, bpe, config)
        for ex in examples:
            assert ex.target_mask.tolist() == [1.0, 0.0]

    def test_missing_features_rejected(self):
        pairs, bpe, config = self._setup()
        for p in pairs:
            p.features = None
        with pytest.raises(InvalidArgument, match="features"):
            pairs_to_examples(pairs, bpe, config)

    def test_text_only_model_skips_features(self):
        pairs, bpe, config = self._setup()
        config = MeModelConfig(**{**config.__dict__, "feature_dim": 0})
        for p in pairs:
            p.features = None
        examples = pairs_to_examples(pairs, bpe, config)
        assert all(ex.features.size == 0 for ex in examples)

    def test_hyp_only_mode_no_sep(self):
        pairs, bpe, config = self._setup()
        config = MeModelConfig(**{**config.__dict__,
                                  "input_mode": InputMode.HYP})
        examples = pairs_to_examples(pairs, bpe, config)
        assert all(SEP_ID not in ex.ids for ex in examples)
