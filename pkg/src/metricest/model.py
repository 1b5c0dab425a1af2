"""The estimation network: BPE embedding, 2-layer BiLSTM encoder, feature
fusion, and a sigmoid regression head, with training, fine-tuning,
prediction, and versioned JSON checkpoints.
"""

import base64
import copy
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import nn
from .bpe import PAD_ID, BpeModel, InputMode, assemble_input
from .errors import (CorruptCheckpoint, InvalidArgument,
                     UnknownCheckpointVersion)
from .features import FeatureConfig, FeatureNormalizer, build_feature_vector
from .stats import pearson
from .errors import DegenerateInput

CHECKPOINT_VERSION = 1

# Targets whose native range is unbounded (or effectively so); their
# transform is fitted to mean +/- 3 std instead of min/max.
UNBOUNDED_TARGETS = ("ter", "human")

_CLIP = 1e-4


@dataclass
class MeModelConfig:
    vocab_size: int = 8192
    embed_dim: int = 512
    hidden_dim: int = 128
    layers: int = 2
    feature_dim: int = 6
    head_hidden: int = 100
    targets: tuple = ("sentbleu",)
    input_mode: InputMode = InputMode.SRC_HYP
    feature_set: str = "default6"
    interlayer_dropout: float = 0.2
    final_dropout: float = 0.75

    @property
    def num_targets(self) -> int:
        return len(self.targets)

    @property
    def phi_dim(self) -> int:
        return 2 * self.layers * self.hidden_dim

    @property
    def fusion_dim(self) -> int:
        return self.phi_dim + self.feature_dim

    @property
    def model_kind(self) -> str:
        return "me_all" if self.feature_dim > 0 else "me_text"

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["targets"] = list(self.targets)
        d["input_mode"] = self.input_mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MeModelConfig":
        d = dict(d)
        d["targets"] = tuple(d["targets"])
        d["input_mode"] = InputMode(d["input_mode"])
        return cls(**d)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-6
    batch_size: int = 10
    patience: int = 10
    max_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.patience < 1:
            raise InvalidArgument("batch size and patience must be >= 1")


@dataclass
class TargetTransform:
    """Positive affine map between the sigmoid output (0, 1) and a
    target's native range."""
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise InvalidArgument("target transform needs high > low")

    def normalize(self, y, clip=True):
        y = (np.asarray(y, dtype=np.float64) - self.low) / (self.high - self.low)
        if clip:
            y = np.clip(y, _CLIP, 1.0 - _CLIP)
        return y

    def denormalize(self, s):
        return self.low + np.asarray(s, dtype=np.float64) * (self.high - self.low)

    @classmethod
    def fit(cls, target_id: str, values) -> "TargetTransform":
        values = np.asarray(values, dtype=np.float64)
        base = target_id.split(":")[-1]
        if base in UNBOUNDED_TARGETS or target_id.startswith("external:"):
            std = values.std()
            spread = 3 * std if std > 0 else 1.0
            return cls(float(values.mean() - spread),
                       float(values.mean() + spread))
        lo, hi = float(values.min()), float(values.max())
        margin = 0.05 * max(hi - lo, 1e-6)
        return cls(lo - margin, hi + margin)

    def to_dict(self):
        return {"low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, d):
        return cls(low=d["low"], high=d["high"])


@dataclass
class Example:
    """One training/prediction unit: assembled input ids, feature vector,
    and (optionally) target values with a presence mask."""
    ids: list
    features: np.ndarray
    targets: np.ndarray | None = None
    target_mask: np.ndarray | None = None
    segment_id: str = ""
    hyp_index: int = 0


def parameter_shapes(config: MeModelConfig) -> dict:
    shapes = {"embed": (config.vocab_size, config.embed_dim)}
    for layer in range(config.layers):
        in_dim = config.embed_dim if layer == 0 else 2 * config.hidden_dim
        for direction in ("fwd", "bwd"):
            for pname, shape in nn.lstm_param_shapes(in_dim, config.hidden_dim).items():
                shapes[f"lstm.L{layer}.{direction}.{pname}"] = shape
    shapes["head.l1.W"] = (config.fusion_dim, config.head_hidden)
    shapes["head.l1.b"] = (config.head_hidden,)
    shapes["head.out.W"] = (config.head_hidden, config.num_targets)
    shapes["head.out.b"] = (config.num_targets,)
    return shapes


class MeModel:
    def __init__(self, config: MeModelConfig, bpe: BpeModel, seed: int = 0,
                 params: dict | None = None,
                 normalizer: FeatureNormalizer | None = None,
                 transforms: dict | None = None):
        if config.feature_dim not in (0, FeatureConfig(config.feature_set).dim):
            raise InvalidArgument(
                f"feature_dim {config.feature_dim} inconsistent with feature "
                f"set '{config.feature_set}'")
        self.config = config
        self.bpe = bpe
        self.normalizer = normalizer
        self.transforms = transforms or {}
        if params is not None:
            self.params = params
        else:
            rng = np.random.default_rng(seed)
            self.params = {name: nn.init_param(rng, shape)
                           for name, shape in parameter_shapes(config).items()}

    # -- forward ---------------------------------------------------------

    def _layer_weights(self):
        out = []
        for layer in range(self.config.layers):
            out.append({
                d: {p: self.params[f"lstm.L{layer}.{d}.{p}"]
                    for p in ("W_x", "W_h", "b")}
                for d in ("fwd", "bwd")
            })
        return out

    def _pad_batch(self, batch):
        max_len = max(len(ex.ids) for ex in batch)
        ids = np.full((len(batch), max_len), PAD_ID, dtype=np.int64)
        mask = np.zeros((len(batch), max_len))
        for i, ex in enumerate(batch):
            if not ex.ids:
                raise InvalidArgument(
                    f"example {ex.segment_id!r} has an empty input sequence")
            ids[i, :len(ex.ids)] = ex.ids
            mask[i, :len(ex.ids)] = 1.0
        return ids, mask

    def forward(self, batch, training=False, rng=None,
                return_penultimate=False):
        """Run the network on a batch of Examples. Returns a Tensor of
        shape (batch, num_targets) in normalized (sigmoid) space."""
        cfg = self.config
        ids, mask = self._pad_batch(batch)
        inputs = [ad.embedding(self.params["embed"], ids[:, t])
                  for t in range(ids.shape[1])]
        phi = nn.bilstm(inputs, mask, self._layer_weights(), cfg.hidden_dim,
                        interlayer_dropout=cfg.interlayer_dropout,
                        training=training, rng=rng)
        if training and cfg.final_dropout > 0:
            phi = ad.dropout(phi, cfg.final_dropout, training, rng)

        if cfg.feature_dim > 0:
            feats = np.stack([ex.features for ex in batch])
            if feats.shape[1] != cfg.feature_dim:
                raise InvalidArgument(
                    f"feature dim {feats.shape[1]} != configured "
                    f"{cfg.feature_dim}")
            if self.normalizer is not None:
                feats = self.normalizer.apply(feats)
            fused = ad.concat([phi, ad.Tensor(feats)], axis=1)
        else:
            fused = phi

        lam = ad.relu(ad.add(ad.matmul(fused, self.params["head.l1.W"]),
                             self.params["head.l1.b"]))
        out = ad.sigmoid(ad.add(ad.matmul(lam, self.params["head.out.W"]),
                                self.params["head.out.b"]))
        if return_penultimate:
            return out, lam
        return out

    def loss(self, batch, training=False, rng=None):
        """Masked MSE in normalized target space."""
        preds = self.forward(batch, training=training, rng=rng)
        targets = np.stack([self._normalized_targets(ex) for ex in batch])
        mask = np.stack([np.asarray(ex.target_mask, dtype=np.float64)
                         for ex in batch])
        return ad.masked_mse(preds, ad.Tensor(targets), mask)

    def _normalized_targets(self, ex):
        if ex.targets is None:
            raise InvalidArgument("example carries no targets")
        out = np.zeros(self.config.num_targets)
        for j, target in enumerate(self.config.targets):
            if ex.target_mask[j]:
                out[j] = self.transforms[target].normalize(ex.targets[j])
        return out

    # -- inference -------------------------------------------------------

    def predict(self, examples, batch_size=64):
        """Eval-mode predictions in native target units,
        shape (n, num_targets)."""
        rows = []
        for start in range(0, len(examples), batch_size):
            batch = examples[start:start + batch_size]
            out = self.forward(batch, training=False).data
            for j, target in enumerate(self.config.targets):
                out[:, j] = self.transforms[target].denormalize(out[:, j])
            rows.append(out)
        return np.concatenate(rows, axis=0)

    def penultimate(self, example) -> np.ndarray:
        """Post-ReLU activation of the fusion -> head layer, eval mode."""
        _, lam = self.forward([example], training=False,
                              return_penultimate=True)
        return lam.data[0].copy()

    # -- persistence -----------------------------------------------------

    def snapshot_params(self) -> dict:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_param_data(self, data: dict) -> None:
        for k, arr in data.items():
            self.params[k].data = arr.copy()


def fit_normalization(model: MeModel, train_examples) -> None:
    """Fit the feature normalizer and per-target transforms on the
    training split."""
    cfg = model.config
    if cfg.feature_dim > 0:
        X = np.stack([ex.features for ex in train_examples])
        model.normalizer = FeatureNormalizer().fit(X)
    for j, target in enumerate(cfg.targets):
        vals = [ex.targets[j] for ex in train_examples if ex.target_mask[j]]
        if not vals:
            raise InvalidArgument(f"no training values for target '{target}'")
        model.transforms[target] = TargetTransform.fit(target, vals)


def train(model: MeModel, train_examples, dev_examples,
          train_config: TrainConfig, refit_normalization=True):
    """Train with seeded shuffling, dev-MSE early stopping, and
    best-checkpoint retention. Returns (checkpoint, history)."""
    if not train_examples or not dev_examples:
        raise InvalidArgument("train and dev splits must be non-empty")
    for ex in train_examples:
        if ex.target_mask is None or not ex.target_mask.any():
            raise InvalidArgument(
                f"training example {ex.segment_id!r} has no unmasked target")

    if refit_normalization or not model.transforms:
        fit_normalization(model, train_examples)

    rng = np.random.default_rng(train_config.seed)
    dropout_rng = np.random.default_rng(
        np.random.SeedSequence(train_config.seed).spawn(1)[0])
    optimizer = ad.Adam(model.params, lr=train_config.learning_rate)

    history = []
    best_dev = np.inf
    best_params = model.snapshot_params()
    epochs_since_best = 0

    for epoch in range(train_config.max_epochs):
        perm = rng.permutation(len(train_examples))
        train_loss_sum = 0.0
        n_batches = 0
        for start in range(0, len(perm), train_config.batch_size):
            batch = [train_examples[i]
                     for i in perm[start:start + train_config.batch_size]]
            loss = model.loss(batch, training=True, rng=dropout_rng)
            ad.zero_grads(model.params.values())
            ad.backward(loss)
            optimizer.step()
            train_loss_sum += float(loss.data)
            n_batches += 1

        dev_loss = evaluate_loss(model, dev_examples,
                                 train_config.batch_size)
        dev_rho = dev_pearson(model, dev_examples)
        history.append({"epoch": epoch,
                        "train_loss": train_loss_sum / n_batches,
                        "dev_loss": dev_loss,
                        "dev_pearson": dev_rho})

        if dev_loss < best_dev:
            best_dev = dev_loss
            best_params = model.snapshot_params()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= train_config.patience:
                break

    model.load_param_data(best_params)
    return make_checkpoint(model, history), history


def evaluate_loss(model: MeModel, examples, batch_size=64) -> float:
    total = 0.0
    count = 0
    for start in range(0, len(examples), batch_size):
        batch = examples[start:start + batch_size]
        loss = model.loss(batch, training=False)
        cells = sum(int(ex.target_mask.sum()) for ex in batch)
        total += float(loss.data) * cells
        count += cells
    return total / count


def dev_pearson(model: MeModel, examples) -> dict:
    preds = model.predict(examples)
    out = {}
    for j, target in enumerate(model.config.targets):
        present = [i for i, ex in enumerate(examples) if ex.target_mask[j]]
        if len(present) < 2:
            out[target] = None
            continue
        gold = [examples[i].targets[j] for i in present]
        try:
            out[target] = pearson(preds[present, j], gold)
        except DegenerateInput:
            out[target] = None
    return out


def fine_tune(checkpoint, qe_examples_train, qe_examples_dev,
              train_config: TrainConfig, targets: tuple | None = None):
    """Continue training an existing checkpoint with every parameter
    updated. When the target set changes, the head output layer is
    re-initialized; all other parameters are retained. Target transforms
    are refitted on the fine-tuning data."""
    model = model_from_checkpoint(checkpoint)
    if targets is not None and tuple(targets) != model.config.targets:
        new_config = replace(model.config, targets=tuple(targets))
        rng = np.random.default_rng(train_config.seed)
        model.config = new_config
        model.params["head.out.W"] = nn.init_param(
            rng, (new_config.head_hidden, new_config.num_targets))
        model.params["head.out.b"] = nn.init_param(
            rng, (new_config.num_targets,))
        model.transforms = {}

    # Refit target transforms on the fine-tuning distribution but keep the
    # pre-trained feature normalizer so feature scales stay comparable.
    for j, target in enumerate(model.config.targets):
        vals = [ex.targets[j] for ex in qe_examples_train if ex.target_mask[j]]
        if not vals:
            raise InvalidArgument(f"no fine-tuning values for '{target}'")
        model.transforms[target] = TargetTransform.fit(target, vals)
    if model.config.feature_dim > 0 and model.normalizer is None:
        fit_normalization(model, qe_examples_train)

    return train(model, qe_examples_train, qe_examples_dev, train_config,
                 refit_normalization=False)


# -- checkpoint serialization ----------------------------------------------


def make_checkpoint(model: MeModel, history=None) -> dict:
    return {
        "format_version": CHECKPOINT_VERSION,
        "model_kind": model.config.model_kind,
        "config": model.config.to_dict(),
        "bpe": model.bpe.to_dict(),
        "feature_norm": (model.normalizer.to_dict()
                         if model.normalizer is not None else None),
        "target_transforms": {t: tr.to_dict()
                              for t, tr in model.transforms.items()},
        "params": {name: _encode_array(p.data)
                   for name, p in model.params.items()},
        "history": history or [],
    }


def model_from_checkpoint(checkpoint: dict) -> MeModel:
    version = checkpoint.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise UnknownCheckpointVersion(version)
    config = MeModelConfig.from_dict(checkpoint["config"])
    expected = parameter_shapes(config)
    params = {}
    for name, shape in expected.items():
        entry = checkpoint["params"].get(name)
        if entry is None:
            raise CorruptCheckpoint(f"missing parameter '{name}'")
        arr = _decode_array(entry)
        if arr.shape != shape:
            raise CorruptCheckpoint(
                f"parameter '{name}' has shape {arr.shape}, expected {shape}")
        params[name] = ad.Tensor(arr, requires_grad=True)
    normalizer = (FeatureNormalizer.from_dict(checkpoint["feature_norm"])
                  if checkpoint.get("feature_norm") else None)
    transforms = {t: TargetTransform.from_dict(d)
                  for t, d in checkpoint["target_transforms"].items()}
    return MeModel(config, BpeModel.from_dict(checkpoint["bpe"]),
                   params=params, normalizer=normalizer,
                   transforms=transforms)


def save_checkpoint(checkpoint: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(checkpoint, f)


def load_checkpoint(path) -> dict:
    with open(path, encoding="utf-8") as f:
        try:
            checkpoint = json.load(f)
        except json.JSONDecodeError as e:
            raise CorruptCheckpoint(f"unparseable checkpoint: {e}") from e
    version = checkpoint.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise UnknownCheckpointVersion(version)
    return checkpoint


def _encode_array(arr: np.ndarray) -> dict:
    return {
        "shape": list(arr.shape),
        "data_b64": base64.b64encode(
            np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii"),
    }


def _decode_array(entry: dict) -> np.ndarray:
    shape = tuple(entry["shape"])
    try:
        raw = base64.b64decode(entry["data_b64"], validate=True)
        arr = np.frombuffer(raw, dtype="<f8")
        return arr.reshape(shape).astype(np.float64)
    except (ValueError, KeyError) as e:
        raise CorruptCheckpoint(f"bad parameter payload: {e}") from e
