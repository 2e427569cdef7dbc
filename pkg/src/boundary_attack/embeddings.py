"""Pretrained word-embedding loading and id-indexed row lookup.

The file format is the common plain-text distribution: one line per token,
``token v1 v2 ... vD`` separated by single spaces. Rows are indexed by
vocabulary id; in-vocabulary tokens missing from the file fall back to zero
vectors (same as the reserved oov row) so that leave-one-out saliency keeps a
uniform meaning for every unknown.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Vocabulary

log = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    vectors: np.ndarray  # (V, D) float64, row index = vocabulary id
    n_matched: int = 0   # in-vocab tokens that had a file vector

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise ValueError("embedding matrix must be (V, D) with D > 0")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding matrix contains non-finite entries")

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def coverage(self) -> float:
        return self.n_matched / self.size

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.vectors.copy(), self.n_matched)


def load_embeddings(path, vocab: Vocabulary, dim: int) -> EmbeddingTable:
    """Build a (V, D) table from a text embedding file.

    In-vocab tokens found in the file get the file vector; everything else
    (including the oov row) starts at zero. A line whose value count differs
    from ``dim`` is an error naming the line number.
    """
    path = Path(path)
    vectors = np.zeros((vocab.size, dim), dtype=np.float64)
    seen = np.zeros(vocab.size, dtype=bool)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise ValueError(
                    f"{path}: dim mismatch at line {lineno}: "
                    f"expected {dim} values, got {len(values)}"
                )
            token_id = vocab.id_for(token)
            if token_id == vocab.oov_id or seen[token_id]:
                continue
            vectors[token_id] = [float(v) for v in values]
            seen[token_id] = True
    n_matched = int(seen.sum())
    log.info(
        "embedding coverage: %d/%d in-vocab tokens matched (%.1f%%)",
        n_matched, vocab.size, 100.0 * n_matched / vocab.size,
    )
    return EmbeddingTable(vectors, n_matched)


def lookup(table: EmbeddingTable, ids) -> np.ndarray:
    """Length-preserving gather of embedding rows for a sequence of ids."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.size):
        raise ValueError(f"token id out of range [0, {table.size})")
    return table.vectors[ids]
