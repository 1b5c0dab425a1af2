"""Experiment grid runner: trains estimation models over a grid of
(train size, hypothesis expansion, seed) cells, optionally evaluates
transfer datasets and a zero-shot + fine-tuning stage on human targets,
and writes a report bundle (TSV/JSON files plus a manifest).
"""

import json
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data as dt
from . import model as mdl
from .bpe import InputMode, bpe_learn
from .errors import InvalidArgument
from .features import FeatureConfig
from .stats import mean_ci, pearson


@dataclass
class ExperimentSpec:
    dataset: str                      # training dataset JSONL path
    targets: tuple = ("sentbleu",)
    model_kind: str = "me_all"        # me_all | me_text
    feature_set: str = "default6"
    input_mode: str = "src_hyp"
    train_sizes: tuple = (500,)
    expansions: tuple = (1,)
    seeds: tuple = (0,)
    dev_count: int = 100
    transfer_datasets: tuple = ()     # alternate-dataset JSONL paths
    qe_dataset: str | None = None     # human-judgement JSONL path
    qe_train_count: int = 200
    vocab_size: int = 1024
    embed_dim: int = 16
    hidden_dim: int = 8
    model_overrides: dict = field(default_factory=dict)
    train_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.train_sizes or not self.expansions or not self.seeds:
            raise InvalidArgument("grids must be non-empty")
        if any(k < 1 for k in self.expansions):
            raise InvalidArgument("expansion k must be >= 1")

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as f:
            d = json.load(f)
        for key in ("targets", "train_sizes", "expansions", "seeds",
                    "transfer_datasets"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _build_model_config(spec: ExperimentSpec) -> mdl.MeModelConfig:
    feature_dim = 0 if spec.model_kind == "me_text" \
        else FeatureConfig(spec.feature_set).dim
    base = dict(
        vocab_size=spec.vocab_size, embed_dim=spec.embed_dim,
        hidden_dim=spec.hidden_dim, feature_dim=feature_dim,
        targets=tuple(spec.targets), input_mode=InputMode(spec.input_mode),
        feature_set=spec.feature_set,
    )
    base.update(spec.model_overrides)
    return mdl.MeModelConfig(**base)


def _train_cell(spec, segments, bpe, size, k, seed):
    config = _build_model_config(spec)
    fc = FeatureConfig(spec.feature_set) if config.feature_dim else None
    sampled = dt.subsample(segments, size + spec.dev_count, seed)
    train_segs, dev_segs = dt.split_dataset(sampled, spec.dev_count, seed)
    train_ex = dt.pairs_to_examples(
        dt.expand_hypotheses(train_segs, k, fc), bpe, config)
    dev_ex = dt.pairs_to_examples(
        dt.expand_hypotheses(dev_segs, 1, fc), bpe, config)

    model = mdl.MeModel(config, bpe, seed=seed)
    tc = mdl.TrainConfig(seed=seed, **spec.train_overrides)
    checkpoint, history = mdl.train(model, train_ex, dev_ex, tc)
    return model, checkpoint, history, dev_ex


def _eval_pearson(model, examples) -> dict:
    return mdl.dev_pearson(model, examples)


def run_experiment(spec: ExperimentSpec, out_dir) -> dict:
    """Execute the grid; every cell failure is recorded and the bundle is
    still produced. Returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    segments = dt.load_jsonl(spec.dataset)
    bpe = bpe_learn([seg.src for seg in segments]
                    + [h.text for seg in segments for h in seg.hyps],
                    spec.vocab_size)

    transfer_sets = {p: dt.load_jsonl(p) for p in spec.transfer_datasets}
    qe_segments = dt.load_jsonl(spec.qe_dataset) if spec.qe_dataset else None
    if qe_segments:
        dt.derive_human_z(qe_segments)

    rows = []
    cells = []
    for size in spec.train_sizes:
        for k in spec.expansions:
            for seed in spec.seeds:
                cell_id = f"size{size}_h{k}_seed{seed}"
                cell = {"id": cell_id, "size": size, "expansion": k,
                        "seed": seed, "status": "ok"}
                try:
                    model, checkpoint, history, dev_ex = _train_cell(
                        spec, segments, bpe, size, k, seed)
                    with open(out / f"history_{cell_id}.json", "w") as f:
                        json.dump(history, f)
                    for target, rho in _eval_pearson(model, dev_ex).items():
                        rows.append({"cell": cell_id, "dataset": "dev",
                                     "target": target, "pearson": rho})
                    for path, alt in transfer_sets.items():
                        fc = (FeatureConfig(spec.feature_set)
                              if model.config.feature_dim else None)
                        alt_ex = dt.pairs_to_examples(
                            dt.expand_hypotheses(alt, 1, fc), bpe,
                            model.config)
                        for target, rho in _eval_pearson(model, alt_ex).items():
                            rows.append({"cell": cell_id,
                                         "dataset": f"transfer:{Path(path).name}",
                                         "target": target, "pearson": rho})
                    if qe_segments:
                        rows.extend(_qe_stage(spec, model, checkpoint, bpe,
                                              qe_segments, seed, cell_id))
                except Exception as e:  # cell isolation by contract
                    cell["status"] = "failed"
                    cell["error"] = f"{type(e).__name__}: {e}"
                    cell["traceback"] = traceback.format_exc()
                cells.append(cell)

    _write_rows(rows, out / "report.tsv")
    _write_ci(rows, out / "report_ci.tsv")
    manifest = {
        "spec": {**spec.__dict__,
                 "targets": list(spec.targets),
                 "train_sizes": list(spec.train_sizes),
                 "expansions": list(spec.expansions),
                 "seeds": list(spec.seeds),
                 "transfer_datasets": list(spec.transfer_datasets)},
        "cells": cells,
        "files": ["report.tsv", "report_ci.tsv"]
                 + [f"history_{c['id']}.json" for c in cells
                    if c["status"] == "ok"],
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
    return manifest


def _qe_stage(spec, model, checkpoint, bpe, qe_segments, seed, cell_id):
    """Zero-shot correlation with human z-scores, then fine-tuning."""
    rows = []
    fc = FeatureConfig(spec.feature_set) if model.config.feature_dim else None
    pairs = dt.expand_hypotheses(qe_segments, 1, fc)
    qe_config_pre = model.config
    examples = dt.pairs_to_examples(pairs, bpe, qe_config_pre)

    human = [p.targets.get("human") for p in pairs]
    keep = [i for i, h in enumerate(human) if h is not None]
    if len(keep) < 2:
        return rows
    preds = model.predict([examples[i] for i in keep])
    rho = pearson(preds[:, 0], [human[i] for i in keep])
    rows.append({"cell": cell_id, "dataset": "qe_zeroshot",
                 "target": "human", "pearson": rho})

    human_config = replace(qe_config_pre, targets=("human",))
    qe_examples = dt.pairs_to_examples(pairs, bpe, human_config)
    keep_ex = [qe_examples[i] for i in keep]
    n_train = min(spec.qe_train_count, len(keep_ex) - 2)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(keep_ex))
    qe_train = [keep_ex[i] for i in perm[:n_train]]
    qe_dev = [keep_ex[i] for i in perm[n_train:]]
    tc = mdl.TrainConfig(seed=seed, **spec.train_overrides)
    _, history = mdl.fine_tune(checkpoint, qe_train, qe_dev, tc,
                               targets=("human",))
    best = min(history, key=lambda h: h["dev_loss"])
    rows.append({"cell": cell_id, "dataset": "qe_finetuned",
                 "target": "human", "pearson": best["dev_pearson"]["human"]})
    return rows


def _write_rows(rows, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write("cell\tdataset\ttarget\tpearson\tpearson_abs\n")
        for r in rows:
            p = r["pearson"]
            ps = "" if p is None else f"{p:.6f}"
            pa = "" if p is None else f"{abs(p):.6f}"
            f.write(f"{r['cell']}\t{r['dataset']}\t{r['target']}\t{ps}\t{pa}\n")


def _write_ci(rows, path):
    """Aggregate over seeds: mean and 95% CI per (size, expansion,
    dataset, target)."""
    groups = {}
    for r in rows:
        if r["pearson"] is None:
            continue
        size_h = "_".join(r["cell"].split("_")[:2])
        key = (size_h, r["dataset"], r["target"])
        groups.setdefault(key, []).append(r["pearson"])
    with open(path, "w", encoding="utf-8") as f:
        f.write("cell_group\tdataset\ttarget\tn\tmean\tci_lo\tci_hi\n")
        for (group, dataset, target), vals in sorted(groups.items()):
            if len(vals) >= 2:
                mean, lo, hi = mean_ci(vals)
            else:
                mean, lo, hi = vals[0], vals[0], vals[0]
            f.write(f"{group}\t{dataset}\t{target}\t{len(vals)}\t"
                    f"{mean:.6f}\t{lo:.6f}\t{hi:.6f}\n")
