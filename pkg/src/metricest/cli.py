"""Command-line entry point for the full pipeline.

Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags,
missing files, unknown metric ids). Numeric stdout values use 6 decimal
places so outputs are stable golden files.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import data as dt
from . import model as mdl
from .bpe import BpeModel, bpe_learn
from .errors import DegenerateInput, InvalidArgument
from .experiment import ExperimentSpec, run_experiment
from .features import FEATURE_SETS, FeatureConfig, build_feature_vector
from .metrics import COMPUTABLE_METRICS, score_all
from .stats import correlation_report, pearson


class UsageError(Exception):
    pass


def _require_file(path, what="file"):
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return path


def _load_config(args) -> dict:
    if not args.config:
        return {}
    _require_file(args.config, "config file")
    with open(args.config, encoding="utf-8") as f:
        return json.load(f)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


# -- commands ---------------------------------------------------------------


def cmd_score(args):
    if args.metric not in COMPUTABLE_METRICS:
        raise UsageError(f"unknown metric '{args.metric}' "
                         f"(choose from {', '.join(COMPUTABLE_METRICS)})")
    if args.data:
        segments = dt.load_jsonl(_require_file(args.data, "dataset"))
        dt.compute_metric_columns(segments, [args.metric])
        for seg in segments:
            for hyp in seg.hyps:
                print(f"{seg.id}\t{_fmt(hyp.scores[args.metric])}")
    else:
        if args.hyp is None or args.ref is None:
            raise UsageError("score needs --hyp and --ref (or --data)")
        score = score_all(args.hyp, args.ref, [args.metric])[args.metric]
        print(_fmt(score.value))


def cmd_ingest(args):
    segments = dt.ingest_nbest(_require_file(args.src, "source file"),
                               _require_file(args.nbest, "n-best file"))
    dt.save_jsonl(segments, args.out_file)
    print(f"wrote {len(segments)} segments to {args.out_file}")


def cmd_bpe_train(args):
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    texts = [seg.src for seg in segments]
    texts += [h.text for seg in segments for h in seg.hyps]
    texts += [seg.ref for seg in segments if seg.ref]
    model = bpe_learn(texts, args.vocab_size)
    model.save(args.out_file)
    print(f"learned {len(model.merges)} merges, vocab size {model.size}")


def cmd_featurize(args):
    if args.features not in FEATURE_SETS:
        raise UsageError(f"unknown feature set '{args.features}'")
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    fc = FeatureConfig(args.features)
    print("segment\thyp\t" + "\t".join(fc.names))
    for seg in segments:
        for idx in range(len(seg.hyps)):
            vec = build_feature_vector(seg, idx, fc)
            print(f"{seg.id}\t{idx}\t" + "\t".join(_fmt(v) for v in vec))


def _model_configs(args, cfg):
    model_kind = cfg.get("model_kind", "me_all")
    feature_set = cfg.get("feature_set", "default6")
    feature_dim = 0 if model_kind == "me_text" \
        else FeatureConfig(feature_set).dim
    model_cfg = mdl.MeModelConfig(
        targets=tuple(cfg.get("targets", [args.target])),
        feature_dim=feature_dim, feature_set=feature_set,
        **{k: v for k, v in cfg.items()
           if k in ("vocab_size", "embed_dim", "hidden_dim", "layers",
                    "head_hidden", "interlayer_dropout", "final_dropout")})
    train_cfg = mdl.TrainConfig(
        seed=args.seed,
        **{k: v for k, v in cfg.items()
           if k in ("learning_rate", "batch_size", "patience", "max_epochs")})
    return model_cfg, train_cfg


def _prepare_training_data(args, cfg, model_cfg):
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    dt.derive_human_z(segments)
    computable = [t for t in model_cfg.targets if t in COMPUTABLE_METRICS]
    needs = [t for t in computable
             if any(t not in h.scores for s in segments for h in s.hyps)]
    if needs:
        dt.compute_metric_columns(segments, needs)
    fc = FeatureConfig(model_cfg.feature_set) if model_cfg.feature_dim else None
    dev_count = cfg.get("dev_count", max(1, len(segments) // 10))
    train_segs, dev_segs = dt.split_dataset(segments, dev_count, args.seed)
    expansion = cfg.get("expansion", 1)
    return segments, train_segs, dev_segs, fc, expansion


def cmd_train(args):
    cfg = _load_config(args)
    model_cfg, train_cfg = _model_configs(args, cfg)
    _, train_segs, dev_segs, fc, expansion = \
        _prepare_training_data(args, cfg, model_cfg)

    if args.bpe:
        bpe = BpeModel.load(_require_file(args.bpe, "BPE model"))
    else:
        texts = [s.src for s in train_segs]
        texts += [h.text for s in train_segs for h in s.hyps]
        bpe = bpe_learn(texts, model_cfg.vocab_size)

    train_ex = dt.pairs_to_examples(
        dt.expand_hypotheses(train_segs, expansion, fc), bpe, model_cfg)
    dev_ex = dt.pairs_to_examples(
        dt.expand_hypotheses(dev_segs, 1, fc), bpe, model_cfg)

    model = mdl.MeModel(model_cfg, bpe, seed=args.seed)
    checkpoint, history = mdl.train(model, train_ex, dev_ex, train_cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mdl.save_checkpoint(checkpoint, out / "checkpoint.json")
    with open(out / "history.json", "w") as f:
        json.dump(history, f, indent=2)
    best = min(history, key=lambda h: h["dev_loss"])
    print(f"epochs {len(history)}, best dev loss {_fmt(best['dev_loss'])}")
    for target, rho in best["dev_pearson"].items():
        if rho is not None:
            print(f"dev pearson {target} {_fmt(rho)}")


def cmd_finetune(args):
    cfg = _load_config(args)
    checkpoint = mdl.load_checkpoint(
        _require_file(args.checkpoint, "checkpoint"))
    base_model = mdl.model_from_checkpoint(checkpoint)
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    dt.derive_human_z(segments)
    target = args.target or "human"
    new_cfg = mdl.MeModelConfig.from_dict(
        {**base_model.config.to_dict(), "targets": [target]})
    fc = FeatureConfig(new_cfg.feature_set) if new_cfg.feature_dim else None
    dev_count = cfg.get("dev_count", max(1, len(segments) // 10))
    train_segs, dev_segs = dt.split_dataset(segments, dev_count, args.seed)
    train_ex = dt.pairs_to_examples(dt.expand_hypotheses(train_segs, 1, fc),
                                    base_model.bpe, new_cfg)
    dev_ex = dt.pairs_to_examples(dt.expand_hypotheses(dev_segs, 1, fc),
                                  base_model.bpe, new_cfg)
    train_cfg = mdl.TrainConfig(
        seed=args.seed,
        **{k: v for k, v in cfg.items()
           if k in ("learning_rate", "batch_size", "patience", "max_epochs")})
    tuned, history = mdl.fine_tune(checkpoint, train_ex, dev_ex, train_cfg,
                                   targets=(target,))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mdl.save_checkpoint(tuned, out / "checkpoint.json")
    with open(out / "history.json", "w") as f:
        json.dump(history, f, indent=2)
    best = min(history, key=lambda h: h["dev_loss"])
    rho = best["dev_pearson"].get(target)
    if rho is not None:
        print(f"dev pearson {target} {_fmt(rho)}")


def _load_model_and_examples(args):
    checkpoint = mdl.load_checkpoint(
        _require_file(args.checkpoint, "checkpoint"))
    model = mdl.model_from_checkpoint(checkpoint)
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    dt.derive_human_z(segments)
    fc = (FeatureConfig(model.config.feature_set)
          if model.config.feature_dim else None)
    pairs = dt.expand_hypotheses(segments, 1, fc)
    examples = dt.pairs_to_examples(pairs, model.bpe, model.config)
    return model, segments, pairs, examples


def cmd_predict(args):
    model, _, pairs, examples = _load_model_and_examples(args)
    preds = model.predict(examples)
    header = "segment\t" + "\t".join(model.config.targets)
    print(header)
    for pair, row in zip(pairs, preds):
        print(pair.segment_id + "\t" + "\t".join(_fmt(v) for v in row))


def cmd_evaluate(args):
    model, _, pairs, examples = _load_model_and_examples(args)
    preds = model.predict(examples)
    preds_by_target, gold_by_target = {}, {}
    for j, target in enumerate(model.config.targets):
        p, g = {}, {}
        for i, pair in enumerate(pairs):
            if target in pair.targets:
                p[pair.segment_id] = float(preds[i, j])
                g[pair.segment_id] = pair.targets[target]
        if g:
            preds_by_target[target] = p
            gold_by_target[target] = g
    if not gold_by_target:
        raise UsageError("dataset carries no gold values for the "
                         "checkpoint's targets")
    report = correlation_report(preds_by_target, gold_by_target,
                                metadata={"checkpoint": args.checkpoint,
                                          "dataset": args.data,
                                          "seed": args.seed})
    sys.stdout.write(report.to_tsv())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.tsv").write_text(report.to_tsv())
        (out / "report.json").write_text(report.to_json())


def cmd_expand(args):
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    pairs = dt.expand_hypotheses(segments, args.k)
    expanded = [dt.Segment(id=f"{p.segment_id}#{p.hyp_index}", src=p.src,
                           ref=p.ref,
                           hyps=[next(h for s in segments if s.id == p.segment_id
                                      for i, h in enumerate(s.hyps)
                                      if i == p.hyp_index)])
                for p in pairs]
    dt.save_jsonl(expanded, args.out_file)
    print(f"wrote {len(expanded)} pairs to {args.out_file}")


def cmd_ablate(args):
    spec = ExperimentSpec.from_json(_require_file(args.spec, "spec file"))
    manifest = run_experiment(spec, args.out)
    failed = [c["id"] for c in manifest["cells"] if c["status"] != "ok"]
    print(f"{len(manifest['cells'])} cells, {len(failed)} failed")
    if failed:
        print("failed: " + ", ".join(failed))


def cmd_confidence(args):
    model, _, pairs, examples = _load_model_and_examples(args)
    target = model.config.targets[0]
    preds = model.predict(examples)
    lams, labels = [], []
    for i, pair in enumerate(pairs):
        if target not in pair.targets:
            continue
        lams.append(model.penultimate(examples[i]))
        labels.append(bl.confidence_label(float(preds[i, 0]),
                                          pair.targets[target]))
    if len(set(labels)) < 2:
        raise UsageError("confidence labels are single-class on this data")
    X = np.stack(lams)
    y = np.array(labels)
    rng = np.random.default_rng(args.seed)
    perm = rng.permutation(len(y))
    split = max(2, int(0.8 * len(y)))
    clf = bl.logreg_fit(X[perm[:split]], y[perm[:split]])
    acc, majority = bl.logreg_accuracy(clf, X[perm[split:]], y[perm[split:]])
    print(f"accuracy {_fmt(acc)}")
    print(f"majority_baseline {_fmt(majority)}")


def cmd_dist(args):
    if args.metric not in COMPUTABLE_METRICS and args.metric != "human":
        raise UsageError(f"unknown metric '{args.metric}'")
    segments = dt.load_jsonl(_require_file(args.data, "dataset"))
    dt.derive_human_z(segments)
    values = []
    for seg in segments:
        for hyp in seg.hyps:
            if args.metric == "human":
                if hyp.human_z is not None:
                    values.append(hyp.human_z)
            elif args.metric in hyp.scores:
                values.append(hyp.scores[args.metric])
    if not values:
        raise UsageError(f"no '{args.metric}' values in dataset")
    counts, edges = np.histogram(values, bins=args.bins)
    print("bin_lo\tbin_hi\tcount")
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        print(f"{_fmt(lo)}\t{_fmt(hi)}\t{c}")


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metricest",
                     description="Reference-free MT metric and quality "
                                 "estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("score", help="compute a metric for a pair or dataset")
    p.add_argument("--metric", required=True)
    p.add_argument("--hyp")
    p.add_argument("--ref")
    p.add_argument("--data")
    common(p)

    p = sub.add_parser("ingest", help="join sources with n-best TSV output")
    p.add_argument("--src", required=True)
    p.add_argument("--nbest", required=True)
    p.add_argument("--out-file", required=True)
    common(p)

    p = sub.add_parser("bpe-train", help="learn a BPE model from a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--vocab-size", type=int, default=8192)
    p.add_argument("--out-file", required=True)
    common(p)

    p = sub.add_parser("featurize", help="emit glassbox feature TSV")
    p.add_argument("--data", required=True)
    p.add_argument("--features", default="default6")
    common(p)

    p = sub.add_parser("train", help="train an estimation model")
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="sentbleu")
    p.add_argument("--bpe", help="pre-trained BPE model JSON")
    common(p)

    p = sub.add_parser("finetune", help="fine-tune a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="human")
    common(p)

    p = sub.add_parser("predict", help="predict scores with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    common(p)

    p = sub.add_parser("evaluate", help="correlation report for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    common(p)

    p = sub.add_parser("expand", help="hypothesis expansion to flat pairs")
    p.add_argument("--data", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--out-file", required=True)
    common(p)

    p = sub.add_parser("ablate", help="run an experiment grid")
    p.add_argument("--spec", required=True)
    common(p)

    p = sub.add_parser("confidence", help="train/eval the confidence "
                                          "classifier on penultimate "
                                          "activations")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    common(p)

    p = sub.add_parser("dist", help="score-distribution histogram TSV")
    p.add_argument("--data", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--bins", type=int, default=20)
    common(p)

    return parser


_COMMANDS = {
    "score": cmd_score, "ingest": cmd_ingest, "bpe-train": cmd_bpe_train,
    "featurize": cmd_featurize, "train": cmd_train, "finetune": cmd_finetune,
    "predict": cmd_predict, "evaluate": cmd_evaluate, "expand": cmd_expand,
    "ablate": cmd_ablate, "confidence": cmd_confidence, "dist": cmd_dist,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
        return 0
    except (UsageError, InvalidArgument) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (DegenerateInput, OSError, RuntimeError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
