"""Text classifiers: encoder + affine/softmax head, training, checkpoints.

A classifier bundles a trainable embedding table, one encoder
(see :mod:`boundary_attack.encoders`) and an affine head ``W v + c`` whose
softmax gives class probabilities. Training is minibatch Adam (or plain SGD)
on the cross-entropy, fully deterministic for a fixed seed.

Checkpoint layout (``.npz``): a ``meta`` entry holding a JSON header
(``format_version``, encoder kind and shape, vocabulary token list and its
sha256) plus one array entry per parameter tensor (``emb``, ``head_w``,
``head_b`` and ``enc_<name>``).
"""

from __future__ import annotations

import json
import logging
import zipfile
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, Example, Vocabulary, encode
from .embeddings import EmbeddingTable
from .encoders import build_encoder

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 64
    lr: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    hidden: int = 128
    emb_dim: int = 100

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0:
            raise ValueError("epochs must be >= 0, batch_size >= 1, lr > 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


class AffineHead:
    """Affine map from text vectors to class logits."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise ValueError("head expects weight (C, H) and bias (C,)")
        if weight.shape[0] < 2:
            raise ValueError("head needs at least 2 classes")
        if not (np.isfinite(weight).all() and np.isfinite(bias).all()):
            raise ValueError("head parameters must be finite")
        self.weight = weight
        self.bias = bias

    @property
    def num_classes(self) -> int:
        return self.weight.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weight.shape[1]

    def logits(self, v: np.ndarray) -> np.ndarray:
        return logits(self, v)

    def jacobian(self, v: np.ndarray) -> np.ndarray:
        return self.weight

    @classmethod
    def init(cls, num_classes, hidden, rng):
        limit = np.sqrt(6.0 / (hidden + num_classes))
        return cls(rng.uniform(-limit, limit, size=(num_classes, hidden)), np.zeros(num_classes))


def logits(head: AffineHead, v: np.ndarray) -> np.ndarray:
    """``W v + c``; accepts a single (H,) vector or a (B, H) batch."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != head.input_dim:
        raise ValueError(f"text vector width {v.shape[-1]} != head input {head.input_dim}")
    return v @ head.weight.T + head.bias


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class Classifier:
    kind: str
    encoder: object
    head: AffineHead
    embeddings: EmbeddingTable
    vocab: Vocabulary
    conv_widths: tuple = ()
    conv_filters: tuple = ()
    label_names: tuple = ()

    def __post_init__(self):
        if self.encoder.hidden != self.head.input_dim:
            raise ValueError(
                f"encoder output width {self.encoder.hidden} != "
                f"head input width {self.head.input_dim}"
            )

    @property
    def num_classes(self) -> int:
        return self.head.num_classes

    @property
    def hidden(self) -> int:
        return self.head.input_dim


def make_classifier(
    kind: str,
    vocab: Vocabulary,
    embeddings: EmbeddingTable,
    num_classes: int,
    hidden: int = 128,
    seed: int = 0,
    widths=(3, 4, 5),
    filters=None,
) -> Classifier:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    encoder = build_encoder(kind, embeddings.dim, hidden=hidden, rng=rng, widths=widths, filters=filters)
    head = AffineHead.init(num_classes, encoder.hidden, rng)
    clf = Classifier(kind, encoder, head, embeddings, vocab)
    if kind == "cnn":
        clf.conv_widths = tuple(widths)
        clf.conv_filters = tuple(encoder.filters)
    return clf


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def _min_batch_len(clf: Classifier) -> int:
    return max(clf.conv_widths) if clf.kind == "cnn" else 1


def pad_batch(id_seqs, oov_id: int, min_len: int = 1):
    """Pad id sequences to a common length with the oov id plus a mask."""
    lengths = np.array([len(s) for s in id_seqs], dtype=np.int64)
    L = max(int(lengths.max()), min_len)
    ids = np.full((len(id_seqs), L), oov_id, dtype=np.int64)
    mask = np.zeros((len(id_seqs), L), dtype=np.float64)
    for b, seq in enumerate(id_seqs):
        ids[b, : len(seq)] = seq
        mask[b, : len(seq)] = 1.0
    return ids, mask, lengths


def _forward(clf: Classifier, ids, mask, lengths):
    emb = clf.embeddings.vectors[ids] * mask[:, :, None]
    v, cache = clf.encoder.forward(emb, mask, lengths)
    return v, (ids, mask, cache)


def encode_batch(clf: Classifier, id_seqs) -> np.ndarray:
    """Text vectors for a list of id sequences, shape (B, H)."""
    if any(len(s) == 0 for s in id_seqs):
        raise ValueError("cannot encode an empty token sequence")
    ids, mask, lengths = pad_batch(id_seqs, clf.vocab.oov_id, _min_batch_len(clf))
    v, _ = _forward(clf, ids, mask, lengths)
    return v


def encode_text(clf: Classifier, ids) -> np.ndarray:
    """Text vector (H,) for one id sequence; empty input is an error."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("cannot encode an empty token sequence")
    return encode_batch(clf, [ids])[0]


def _as_ids(clf: Classifier, x) -> np.ndarray:
    if isinstance(x, Example):
        return encode(x, clf.vocab)
    return np.asarray(x, dtype=np.int64)


def probabilities(clf: Classifier, x) -> np.ndarray:
    """Class probability vector for an example or id sequence."""
    return softmax(logits(clf.head, encode_text(clf, _as_ids(clf, x))))


def probabilities_batch(clf: Classifier, seqs, chunk: int = 256) -> np.ndarray:
    out = []
    id_seqs = [_as_ids(clf, s) for s in seqs]
    for i in range(0, len(id_seqs), chunk):
        out.append(softmax(logits(clf.head, encode_batch(clf, id_seqs[i : i + chunk]))))
    return np.concatenate(out, axis=0)


def predict(clf: Classifier, x) -> int:
    """Argmax class, lowest index on ties."""
    return int(np.argmax(probabilities(clf, x)))


def predict_batch(clf: Classifier, seqs) -> np.ndarray:
    return np.argmax(probabilities_batch(clf, seqs), axis=1)


def accuracy(clf: Classifier, dataset: Dataset, chunk: int = 256) -> float:
    preds = predict_batch(clf, dataset.examples)
    labels = np.array([ex.label for ex in dataset.examples])
    return float((preds == labels).mean())


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


class AdamState:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for key, g in grads.items():
            if key not in self.m:
                self.m[key] = np.zeros_like(g)
                self.v[key] = np.zeros_like(g)
            self.m[key] = b1 * self.m[key] + (1 - b1) * g
            self.v[key] = b2 * self.v[key] + (1 - b2) * g * g
            m_hat = self.m[key] / (1 - b1**self.t)
            v_hat = self.v[key] / (1 - b2**self.t)
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SgdState:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params: dict, grads: dict) -> None:
        for key, g in grads.items():
            params[key] -= self.lr * g


def _trainable_params(clf: Classifier) -> dict[str, np.ndarray]:
    params = {"emb": clf.embeddings.vectors, "head_w": clf.head.weight, "head_b": clf.head.bias}
    for name, arr in clf.encoder.params.items():
        params[f"enc_{name}"] = arr
    return params


def loss_and_grads(clf: Classifier, id_seqs, labels):
    """Mean cross-entropy over a batch and gradients for every parameter."""
    ids, mask, lengths = pad_batch(id_seqs, clf.vocab.oov_id, _min_batch_len(clf))
    v, (ids_, mask_, cache) = _forward(clf, ids, mask, lengths)
    z = logits(clf.head, v)
    B = z.shape[0]
    shifted = z - z.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    labels = np.asarray(labels)
    loss = float(-logp[np.arange(B), labels].mean())

    dz = softmax(z)
    dz[np.arange(B), labels] -= 1.0
    dz /= B
    grads = {"head_w": dz.T @ v, "head_b": dz.sum(axis=0)}
    dv = dz @ clf.head.weight
    demb, enc_grads = clf.encoder.backward(dv, cache)
    demb *= mask[:, :, None]
    demb_table = np.zeros_like(clf.embeddings.vectors)
    np.add.at(demb_table, ids.ravel(), demb.reshape(-1, demb.shape[2]))
    grads["emb"] = demb_table
    for name, g in enc_grads.items():
        grads[f"enc_{name}"] = g
    return loss, grads


def train(
    dataset: Dataset,
    config: TrainConfig,
    vocab: Vocabulary | None = None,
    embeddings: EmbeddingTable | None = None,
    kind: str = "cnn",
    test_set: Dataset | None = None,
    classifier: Classifier | None = None,
    optimizer_state=None,
):
    """Train (or fine-tune) a classifier; returns (classifier, per-epoch metrics).

    Deterministic for a fixed ``config.seed``: same seed, same data, same
    parameters bit for bit. Pass ``classifier`` to fine-tune an existing model
    instead of initializing a fresh one. Raises on divergence (non-finite loss).
    """
    if not dataset.examples:
        raise ValueError("cannot train on an empty dataset")
    if classifier is None:
        if vocab is None or embeddings is None:
            raise ValueError("training a fresh model needs vocab and embeddings")
        classifier = make_classifier(
            kind, vocab, embeddings.copy(), dataset.num_classes,
            hidden=config.hidden, seed=config.seed,
        )
    params = _trainable_params(classifier)
    if optimizer_state is None:
        optimizer_state = (
            AdamState(config.lr) if config.optimizer == "adam" else SgdState(config.lr)
        )

    encoded = [encode(ex, classifier.vocab) for ex in dataset.examples]
    labels = np.array([ex.label for ex in dataset.examples])
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x7247]))
    metrics = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(encoded))
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = loss_and_grads(
                classifier, [encoded[i] for i in batch], labels[batch]
            )
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: loss={loss} at epoch {epoch}, "
                    f"batch starting {start}"
                )
            optimizer_state.step(params, grads)
            total_loss += loss * len(batch)
        row = {
            "epoch": epoch,
            "loss": total_loss / len(encoded),
            "train_accuracy": accuracy(classifier, dataset),
        }
        if test_set is not None:
            row["test_accuracy"] = accuracy(classifier, test_set)
        metrics.append(row)
        log.info(
            "epoch %d: loss %.4f train_acc %.4f%s",
            epoch, row["loss"], row["train_accuracy"],
            f" test_acc {row['test_accuracy']:.4f}" if test_set is not None else "",
        )
    return classifier, metrics


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------


def save_checkpoint(clf: Classifier, path) -> None:
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "kind": clf.kind,
        "hidden": clf.hidden,
        "num_classes": clf.num_classes,
        "emb_dim": clf.embeddings.dim,
        "conv_widths": list(clf.conv_widths),
        "conv_filters": list(clf.conv_filters),
        "n_matched": clf.embeddings.n_matched,
        "label_names": list(clf.label_names),
        "vocab_hash": clf.vocab.sha256(),
        "vocab_tokens": clf.vocab.id_to_token,
    }
    arrays = {
        "emb": clf.embeddings.vectors,
        "head_w": clf.head.weight,
        "head_b": clf.head.bias,
    }
    for name, arr in clf.encoder.params.items():
        arrays[f"enc_{name}"] = arr
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> Classifier:
    """Rebuild a classifier from a checkpoint; errors on version mismatch,
    corruption, or a vocabulary that no longer matches its stored hash."""
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise ValueError(f"corrupt or unreadable checkpoint {path}: {exc}") from exc
    with data:
        if "meta" not in data:
            raise ValueError(f"corrupt checkpoint {path}: missing meta entry")
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(
                f"checkpoint version mismatch: file has "
                f"{meta.get('format_version')}, expected {CHECKPOINT_VERSION}"
            )
        vocab = Vocabulary.from_tokens(meta["vocab_tokens"])
        if vocab.sha256() != meta["vocab_hash"]:
            raise ValueError("checkpoint vocabulary does not match its stored hash")
        required = {"emb", "head_w", "head_b"}
        if not required.issubset(set(data.files)):
            raise ValueError(f"corrupt checkpoint {path}: missing parameter arrays")
        emb = EmbeddingTable(data["emb"].copy(), meta.get("n_matched", 0))
        clf = make_classifier(
            meta["kind"], vocab, emb, meta["num_classes"], hidden=meta["hidden"],
            widths=tuple(meta["conv_widths"]) or (3, 4, 5),
            filters=tuple(meta["conv_filters"]) or None,
        )
        clf.label_names = tuple(meta.get("label_names", ()))
        clf.head.weight[...] = data["head_w"]
        clf.head.bias[...] = data["head_b"]
        for name in clf.encoder.params:
            key = f"enc_{name}"
            if key not in data.files:
                raise ValueError(f"corrupt checkpoint {path}: missing {key}")
            clf.encoder.params[name][...] = data[key]
    return clf
