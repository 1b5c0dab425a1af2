"""Subword encoding and glassbox features.

The estimator consumes two views of each (source, hypothesis) pair:
  - the texts, BPE-encoded and joined with a separator token, and
  - a small feature vector from the decoder's own bookkeeping (log-
    probabilities, lengths, n-best agreement) that needs no reference.

Run:  python3 demos/02_bpe_and_features.py
"""

from metricest.bpe import InputMode, assemble_input, bpe_decode, bpe_encode, \
    bpe_learn
from metricest.data import Hypothesis, Segment
from metricest.features import FeatureConfig, build_feature_vector
from metricest.synthetic import generate_synthetic


def main():
    corpus = ["the cat sat on the mat", "the cats sat", "a cat ran",
              "the mat was flat", "cats and mats"]
    model = bpe_learn(corpus, vocab_size=40)
    print(f"learned {len(model.merges)} merges, vocab size {model.size}")
    print("first merges:", model.merges[:5])

    text = "the cat sat"
    ids = bpe_encode(model, text)
    print(f"\nencode {text!r} -> {ids}")
    print(f"decode back        -> {bpe_decode(model, ids)!r}")

    joined = assemble_input(InputMode.SRC_HYP, model,
                            src="the mat", hyp="a cat ran")
    print(f"src [SEP] hyp ids  -> {joined}")

    # glassbox features on a segment with an n-best list
    seg = generate_synthetic(1, seed=4)[0]
    config = FeatureConfig("extended9")
    print(f"\nsegment source: {seg.src!r}")
    for idx, hyp in enumerate(seg.hyps[:3]):
        vec = build_feature_vector(seg, idx, config)
        print(f"hyp {idx}: {hyp.text!r}")
        for name, value in zip(config.names, vec):
            print(f"    {name:<12} {value: .4f}")


if __name__ == "__main__":
    main()
