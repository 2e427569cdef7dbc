"""Word-level adversarial attacks on small text classifiers.

The attack walks toward the model's decision boundary: words are ranked by
leave-one-out saliency, and replacement synonyms are chosen by the projection
of their embedding-space displacement onto the shortest path to the boundary.
"""

from .attack import (
    AttackConfig,
    AttackResult,
    SynonymLexicon,
    attack,
    greedy_probability_baseline,
    word_saliency,
)
from .corpus import Dataset, Example, Token, Vocabulary, build_vocab, encode, load_dataset, tokenize
from .embeddings import EmbeddingTable, load_embeddings, lookup
from .geometry import BoundaryStep, ProjectionResult, deepfool_affine, deepfool_iterative, project, signed_distance
from .harness import AttackMetrics, RobustnessCurve, adversarial_train, emit_report, evaluate_attack
from .model import Classifier, TrainConfig, load_checkpoint, make_classifier, predict, probabilities, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "AttackConfig", "AttackResult", "SynonymLexicon", "attack",
    "greedy_probability_baseline", "word_saliency",
    "Dataset", "Example", "Token", "Vocabulary", "build_vocab", "encode",
    "load_dataset", "tokenize",
    "EmbeddingTable", "load_embeddings", "lookup",
    "BoundaryStep", "ProjectionResult", "deepfool_affine", "deepfool_iterative",
    "project", "signed_distance",
    "AttackMetrics", "RobustnessCurve", "adversarial_train", "emit_report",
    "evaluate_attack",
    "Classifier", "TrainConfig", "load_checkpoint", "make_classifier", "predict",
    "probabilities", "save_checkpoint", "train",
]
