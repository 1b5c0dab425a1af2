"""Pre-train on a metric, then fine-tune to human judgements.

Human quality annotations are scarce, but metric scores are free once a
decoder and references exist. The recipe: pre-train the estimator on a
metric target, then continue training every parameter on a small set of
human z-scores. The pre-trained encoder gives the fine-tuned model a
head start over training from scratch on the same small set.

Run:  python3 demos/04_finetune_to_human.py
"""

from metricest import data as dt
from metricest import model as mdl
from metricest.bpe import bpe_learn
from metricest.features import FeatureConfig
from metricest.synthetic import generate_synthetic


def examples(segs, bpe, config):
    fc = FeatureConfig(config.feature_set)
    return dt.pairs_to_examples(dt.expand_hypotheses(segs, 1, fc), bpe,
                                config)


def main():
    corpus = generate_synthetic(400, seed=11)
    bpe = bpe_learn([s.src for s in corpus]
                    + [h.text for s in corpus for h in s.hyps], 300)
    me_config = mdl.MeModelConfig(vocab_size=300, embed_dim=12, hidden_dim=6,
                                  feature_dim=6, head_hidden=16,
                                  interlayer_dropout=0.0, final_dropout=0.0)
    qe_config = mdl.MeModelConfig(**{**me_config.__dict__,
                                     "targets": ("human",)})

    pre_segs, qe_segs = dt.split_dataset(corpus, 150, seed=0)
    pre_train, pre_dev = dt.split_dataset(pre_segs, 40, seed=0)
    qe_train_segs, qe_dev_segs = dt.split_dataset(qe_segs[:150], 30, seed=0)

    print("pre-training on the metric target ...")
    model = mdl.MeModel(me_config, bpe, seed=0)
    checkpoint, _ = mdl.train(
        model, examples(pre_train, bpe, me_config),
        examples(pre_dev, bpe, me_config),
        mdl.TrainConfig(learning_rate=5e-3, batch_size=32, patience=3,
                        max_epochs=8, seed=0))

    qe_train = examples(qe_train_segs, bpe, qe_config)
    qe_dev = examples(qe_dev_segs, bpe, qe_config)
    tight = mdl.TrainConfig(learning_rate=1e-3, batch_size=32, patience=3,
                            max_epochs=4, seed=0)

    print("fine-tuning to human z-scores ...")
    _, ft_history = mdl.fine_tune(checkpoint, qe_train, qe_dev, tight,
                                  targets=("human",))
    tuned = min(ft_history, key=lambda h: h["dev_loss"])

    print("training from scratch on the same human data ...")
    scratch_model = mdl.MeModel(qe_config, bpe, seed=0)
    _, sc_history = mdl.train(scratch_model, qe_train, qe_dev, tight)
    scratch = min(sc_history, key=lambda h: h["dev_loss"])

    print(f"\nheld-out Pearson with human z-scores:")
    print(f"  fine-tuned from metric pre-training: "
          f"{tuned['dev_pearson']['human']:.4f}")
    print(f"  from scratch on the same examples:   "
          f"{scratch['dev_pearson']['human']:.4f}")


if __name__ == "__main__":
    main()
