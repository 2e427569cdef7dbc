"""Shared toy fixtures: tiny vocabularies, embeddings, classifiers."""

import numpy as np
import pytest

from boundary_attack.corpus import OOV_TOKEN, Example, Vocabulary, make_token
from boundary_attack.embeddings import EmbeddingTable
from boundary_attack.model import make_classifier


def make_example(text, label=0, eid="e"):
    return Example(tuple(make_token(w) for w in text.split()), label, eid)


def toy_vocab(n_words=12):
    return Vocabulary.from_tokens([OOV_TOKEN] + [f"w{i}" for i in range(n_words)])


def toy_embeddings(vocab, dim=6, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    vecs = rng.normal(0.0, scale, size=(vocab.size, dim))
    vecs[vocab.oov_id] = 0.0
    return EmbeddingTable(vecs)


def toy_classifier(kind="bag", num_classes=2, dim=6, hidden=8, seed=0, n_words=12):
    vocab = toy_vocab(n_words)
    emb = toy_embeddings(vocab, dim=dim, seed=seed)
    if kind == "bag":
        return make_classifier(kind, vocab, emb, num_classes, seed=seed)
    return make_classifier(
        kind, vocab, emb, num_classes, hidden=hidden, seed=seed,
        widths=(2, 3), filters=(hidden // 2, hidden - hidden // 2) if kind == "cnn" else None,
    )


@pytest.fixture
def bag_classifier():
    return toy_classifier("bag")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
