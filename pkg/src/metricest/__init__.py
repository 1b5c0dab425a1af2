"""Reference-free estimation of MT metrics and translation quality.

Sentence-level BLEU/ChrF/TER/METEOR, glassbox decoder features, a
from-scratch BiLSTM regressor with feature fusion, linear baselines,
and the evaluation/experiment pipeline around them.
"""

from .bpe import BpeModel, InputMode, assemble_input, bpe_encode, bpe_learn
from .features import FeatureConfig, FeatureNormalizer, build_feature_vector
from .metrics import MetricScore, chrf, meteor_lite, score_all, sent_bleu, ter
from .model import (MeModel, MeModelConfig, TargetTransform, TrainConfig,
                    fine_tune, load_checkpoint, model_from_checkpoint,
                    save_checkpoint, train)
from .stats import correlation_report, mean_ci, pearson, z_scores

__version__ = "0.1.0"

__all__ = [
    "BpeModel", "InputMode", "assemble_input", "bpe_encode", "bpe_learn",
    "FeatureConfig", "FeatureNormalizer", "build_feature_vector",
    "MetricScore", "chrf", "meteor_lite", "score_all", "sent_bleu", "ter",
    "MeModel", "MeModelConfig", "TargetTransform", "TrainConfig",
    "fine_tune", "load_checkpoint", "model_from_checkpoint",
    "save_checkpoint", "train",
    "correlation_report", "mean_ci", "pearson", "z_scores",
]
