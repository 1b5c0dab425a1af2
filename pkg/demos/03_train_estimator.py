"""Train a metric estimator end to end on synthetic data.

The model never sees a reference: it reads the BPE-encoded source and
hypothesis through a bidirectional LSTM, fuses the final hidden states
with the glassbox feature vector, and regresses the metric score through
a sigmoid head. Here it learns a sentBLEU-like target on a generated
corpus in under a minute.

Run:  python3 demos/03_train_estimator.py
"""

from metricest import data as dt
from metricest import model as mdl
from metricest.bpe import bpe_learn
from metricest.features import FeatureConfig
from metricest.synthetic import generate_synthetic


def main():
    segments = generate_synthetic(300, seed=0)
    train_segs, dev_segs = dt.split_dataset(segments, dev_count=50, seed=0)

    bpe = bpe_learn([s.src for s in segments]
                    + [h.text for s in segments for h in s.hyps],
                    vocab_size=300)
    config = mdl.MeModelConfig(vocab_size=300, embed_dim=12, hidden_dim=6,
                               feature_dim=6, head_hidden=16,
                               interlayer_dropout=0.0, final_dropout=0.0)
    fc = FeatureConfig(config.feature_set)
    train_ex = dt.pairs_to_examples(
        dt.expand_hypotheses(train_segs, 1, fc), bpe, config)
    dev_ex = dt.pairs_to_examples(
        dt.expand_hypotheses(dev_segs, 1, fc), bpe, config)

    model = mdl.MeModel(config, bpe, seed=0)
    tc = mdl.TrainConfig(learning_rate=5e-3, batch_size=32, patience=3,
                         max_epochs=10, seed=0)
    checkpoint, history = mdl.train(model, train_ex, dev_ex, tc)

    print("epoch  train_loss  dev_loss   dev_pearson")
    for h in history:
        rho = h["dev_pearson"]["sentbleu"]
        rho_s = f"{rho:.4f}" if rho is not None else "n/a"
        print(f"{h['epoch']:>5}  {h['train_loss']:.6f}   {h['dev_loss']:.6f}"
              f"   {rho_s}")

    preds = model.predict(dev_ex[:5])
    print("\nsample held-out predictions vs gold:")
    for ex, row in zip(dev_ex[:5], preds):
        print(f"  {ex.segment_id:<8} predicted {row[0]:.4f}   "
              f"gold {ex.targets[0]:.4f}")

    mdl.save_checkpoint(checkpoint, "/tmp/metricest_demo_checkpoint.json")
    print("\ncheckpoint written to /tmp/metricest_demo_checkpoint.json")


if __name__ == "__main__":
    main()
