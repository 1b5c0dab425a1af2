"""Dataset schema and pipeline operations: JSONL ingestion, n-best TSV
ingestion, metric-column computation, hypothesis expansion, seeded
sampling/splitting, and example preparation for the model.

One JSONL line is one Segment: a source with its n-best hypotheses,
optional reference, per-hypothesis metric scores, decoder
log-probabilities, and human judgements.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .bpe import BpeModel, assemble_input
from .errors import InvalidArgument
from .features import FeatureConfig, build_feature_vector, hyp_space_features
from .metrics import EXTERNAL_PREFIX, COMPUTABLE_METRICS, score_all
from .model import Example, MeModelConfig


@dataclass
class Hypothesis:
    text: str
    logprob: float | None = None
    token_logprobs: list | None = None
    scores: dict = field(default_factory=dict)
    human_raw: float | None = None
    human_z: float | None = None
    annotator: str | None = None

    def to_dict(self) -> dict:
        d = {"text": self.text}
        for key in ("logprob", "token_logprobs", "human_raw", "human_z",
                    "annotator"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        if self.scores:
            d["scores"] = self.scores
        return d


@dataclass
class Segment:
    id: str
    src: str
    hyps: list
    ref: str | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "src": self.src,
             "hyps": [h.to_dict() for h in self.hyps]}
        if self.ref is not None:
            d["ref"] = self.ref
        return d


_VALID_SCORE_KEYS = set(COMPUTABLE_METRICS)


def _check_score_key(key, where):
    if key in _VALID_SCORE_KEYS or key.startswith(EXTERNAL_PREFIX):
        return
    raise InvalidArgument(f"{where}: unknown metric id '{key}' in scores")


def _segment_from_dict(obj, where):
    for req in ("id", "src", "hyps"):
        if req not in obj:
            raise InvalidArgument(f"{where}: missing required field '{req}'")
    if not obj["hyps"]:
        raise InvalidArgument(f"{where}: segment needs at least one hypothesis")
    hyps = []
    for k, h in enumerate(obj["hyps"]):
        if "text" not in h:
            raise InvalidArgument(f"{where}: hypothesis {k} missing 'text'")
        scores = dict(h.get("scores", {}))
        for key in scores:
            _check_score_key(key, where)
        hyps.append(Hypothesis(
            text=h["text"],
            logprob=h.get("logprob"),
            token_logprobs=h.get("token_logprobs"),
            scores=scores,
            human_raw=h.get("human_raw"),
            human_z=h.get("human_z"),
            annotator=h.get("annotator"),
        ))
    return Segment(id=str(obj["id"]), src=obj["src"], ref=obj.get("ref"),
                   hyps=hyps)


def load_jsonl(path) -> list:
    segments = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise InvalidArgument(f"{path}:{lineno}: malformed JSON: {e}")
            segments.append(_segment_from_dict(obj, f"{path}:{lineno}"))
    return segments


def save_jsonl(segments, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for seg in segments:
            f.write(json.dumps(seg.to_dict(), ensure_ascii=False) + "\n")


def ingest_nbest(src_path, nbest_path) -> list:
    """Join a plain-text source file with decoder n-best output.

    N-best line format (tab separated):
    source_index, rank, logprob, comma-separated token logprobs (may be
    empty), hypothesis text.
    """
    with open(src_path, encoding="utf-8") as f:
        sources = [line.rstrip("\n") for line in f]

    hyps_by_src: dict[int, list] = {}
    with open(nbest_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise InvalidArgument(
                    f"{nbest_path}:{lineno}: expected 5 tab-separated fields")
            try:
                src_idx = int(parts[0])
                rank = int(parts[1])
                logprob = float(parts[2])
            except ValueError as e:
                raise InvalidArgument(f"{nbest_path}:{lineno}: {e}")
            if not 0 <= src_idx < len(sources):
                raise InvalidArgument(
                    f"{nbest_path}:{lineno}: source index {src_idx} out of "
                    f"range (have {len(sources)} sources)")
            token_logprobs = None
            if parts[3]:
                token_logprobs = [float(x) for x in parts[3].split(",")]
            bucket = hyps_by_src.setdefault(src_idx, [])
            if rank != len(bucket):
                raise InvalidArgument(
                    f"{nbest_path}:{lineno}: rank {rank} out of order for "
                    f"source {src_idx} (expected {len(bucket)})")
            bucket.append(Hypothesis(text=parts[4], logprob=logprob,
                                     token_logprobs=token_logprobs))

    segments = []
    for src_idx in sorted(hyps_by_src):
        segments.append(Segment(id=str(src_idx), src=sources[src_idx],
                                hyps=hyps_by_src[src_idx]))
    return segments


def compute_metric_columns(segments, metrics) -> list:
    """Fill hyp.scores[m] for every hypothesis and requested metric.
    Existing values are overwritten; texts and human fields untouched."""
    for m in metrics:
        if m not in COMPUTABLE_METRICS:
            raise InvalidArgument(f"metric '{m}' is not computable")
    missing = [seg.id for seg in segments if seg.ref is None]
    if missing:
        raise InvalidArgument(
            f"segments without reference: {', '.join(missing[:10])}")
    for seg in segments:
        for hyp in seg.hyps:
            for m, score in score_all(hyp.text, seg.ref, metrics).items():
                hyp.scores[m] = score.value
    return segments


@dataclass
class TrainPair:
    """One (source, hypothesis) training unit produced by hypothesis
    expansion, with its own targets and feature vector."""
    segment_id: str
    hyp_index: int
    src: str
    hyp: str
    ref: str | None
    targets: dict
    features: np.ndarray | None = None


def _pair_targets(segment, hyp):
    targets = dict(hyp.scores)
    if hyp.human_z is not None:
        targets["human"] = hyp.human_z
    elif hyp.human_raw is not None:
        targets["human_raw"] = hyp.human_raw
    return targets


def expand_hypotheses(segments, k: int = 1,
                      feature_config: FeatureConfig | None = None) -> list:
    """Emit min(k, n-best size) training pairs per segment. Feature
    vectors are computed per emitted pair with that pair's hypothesis as
    the hypothesis-space focus."""
    if k < 1:
        raise InvalidArgument("expansion k must be >= 1")
    pairs = []
    for seg in segments:
        for idx in range(min(k, len(seg.hyps))):
            hyp = seg.hyps[idx]
            features = None
            if feature_config is not None:
                features = build_feature_vector(seg, idx, feature_config)
            pairs.append(TrainPair(
                segment_id=seg.id, hyp_index=idx, src=seg.src, hyp=hyp.text,
                ref=seg.ref, targets=_pair_targets(seg, hyp),
                features=features))
    return pairs


def derive_human_z(segments) -> int:
    """Fill missing hyp.human_z from human_raw standardized per annotator.
    Hypotheses that already carry human_z keep it. Returns the number of
    degenerate (single-score or zero-spread annotator) values zeroed."""
    from .stats import z_scores

    todo = [(seg, hyp) for seg in segments for hyp in seg.hyps
            if hyp.human_z is None and hyp.human_raw is not None]
    if not todo:
        return 0
    for _, hyp in todo:
        if hyp.annotator is None:
            raise InvalidArgument("human_raw without annotator id")
    z, degenerate = z_scores([h.human_raw for _, h in todo],
                             [h.annotator for _, h in todo])
    for (_, hyp), value in zip(todo, z):
        hyp.human_z = float(value)
    return degenerate


def subsample(segments, n: int, seed: int) -> list:
    """Seeded uniform sampling of segments without replacement; n at or
    above the dataset size returns a deterministic shuffle of everything."""
    if n < 1:
        raise InvalidArgument("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(segments))
    return [segments[i] for i in perm[:n]]


def split_dataset(segments, dev_count: int, seed: int) -> tuple[list, list]:
    """Disjoint, exhaustive segment-level split; expanded hypotheses of a
    segment never cross the boundary."""
    if dev_count >= len(segments):
        raise InvalidArgument(
            f"dev count {dev_count} must be below dataset size {len(segments)}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(segments))
    dev_idx = set(perm[:dev_count].tolist())
    train = [segments[i] for i in perm[dev_count:]]
    dev = [segments[i] for i in perm[:dev_count]]
    return train, dev


def pairs_to_examples(pairs, bpe: BpeModel, config: MeModelConfig) -> list:
    """Encode TrainPairs into model Examples: assembled BPE ids, feature
    vectors, and target vectors masked by availability."""
    examples = []
    for pair in pairs:
        ids = assemble_input(config.input_mode, bpe, src=pair.src,
                             hyp=pair.hyp, ref=pair.ref)
        targets = np.zeros(config.num_targets)
        mask = np.zeros(config.num_targets)
        for j, t in enumerate(config.targets):
            if t in pair.targets:
                targets[j] = pair.targets[t]
                mask[j] = 1.0
        features = pair.features
        if config.feature_dim == 0:
            features = np.zeros(0)
        elif features is None:
            raise InvalidArgument(
                f"pair {pair.segment_id!r} lacks features but the model "
                "requires them")
        examples.append(Example(ids=ids, features=features, targets=targets,
                                target_mask=mask, segment_id=pair.segment_id,
                                hyp_index=pair.hyp_index))
    return examples
