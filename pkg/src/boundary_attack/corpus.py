"""Dataset ingestion, tokenization, vocabulary construction, and example encoding.

Conventions:
  * Tokens keep their original surface (capitalization matters when rendering
    replacements); vocabulary and embedding lookups always go through the
    lowercased form.
  * A token counts as punctuation iff every character is in a Unicode
    punctuation category (Po, Pd, Ps, Pe, Pi, Pf, Pc).
  * Vocabulary id 0 is reserved for the out-of-vocabulary token ``<oov>``.
"""

from __future__ import annotations

import csv
import hashlib
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

OOV_TOKEN = "<oov>"
OOV_ID = 0


def is_punctuation(surface: str) -> bool:
    """True iff every character is Unicode punctuation (category P*).

    The backtick is included as well: the tokenizer renders opening quotes as
    `` in the treebank convention, and quote tokens must count as punctuation.
    """
    return bool(surface) and all(
        ch == "`" or unicodedata.category(ch).startswith("P") for ch in surface
    )


@dataclass(frozen=True)
class Token:
    surface: str
    is_punctuation: bool = False

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")

    @property
    def lower(self) -> str:
        return self.surface.lower()


def make_token(surface: str) -> Token:
    return Token(surface, is_punctuation(surface))


@dataclass(frozen=True)
class Example:
    tokens: tuple[Token, ...]
    label: int
    id: str

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def with_token(self, position: int, token: Token) -> "Example":
        tokens = list(self.tokens)
        tokens[position] = token
        return Example(tuple(tokens), self.label, self.id)


@dataclass
class Dataset:
    examples: list[Example]
    num_classes: int
    split: str = ""
    label_names: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.examples)

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("a dataset needs at least 2 classes")
        for ex in self.examples:
            if not 0 <= ex.label < self.num_classes:
                raise ValueError(f"label {ex.label} out of range for example {ex.id}")


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------
#
# Treebank-style word splitting: punctuation is separated from words, clitics
# ("n't", "'s", "'ll", ...) become their own tokens, double quotes turn into
# `` / ''. Input text is first split into rough sentences so that
# sentence-final periods detach while abbreviation periods stay attached.

_SENT_BOUNDARY = re.compile(r'(?<=[.!?])(?<!\.\.)(["\')\]]*)\s+(?=["\'(\[]*[A-Z0-9])')

_COMMON_ABBREVS = frozenset(
    "mr mrs ms dr prof st jr sr vs etc inc ltd co no fig al".split()
)

_RULES_PRE = [
    # opening double quotes after start / whitespace / opening bracket
    (re.compile(r'^"'), "`` "),
    (re.compile(r'([\s(\[{<])"'), r"\1 `` "),
    # ellipsis and double dash
    (re.compile(r"\.\.\."), r" ... "),
    (re.compile(r"--"), r" -- "),
    # symbol-ish punctuation always splits
    (re.compile(r"[;@#$%&]"), r" \g<0> "),
    # comma / colon split unless followed by a digit (3:30, 1,000 stay whole)
    (re.compile(r"([,:])(?=\D|$)"), r" \1 "),
    # sentence-final period, possibly followed by closing quotes/brackets
    (re.compile(r"([^.\s])(\.)([\]\)}>\"']*)\s*$"), r"\1 \2\3 "),
    # question / exclamation marks
    (re.compile(r"[?!]"), r" \g<0> "),
    # brackets
    (re.compile(r"[\]\[(){}<>]"), r" \g<0> "),
    # closing single quote (possessive-less): quote followed by space
    (re.compile(r"([^'\s])'(?=\s|$)"), r"\1 ' "),
]

_RULES_POST = [
    # remaining double quotes close
    (re.compile(r'"'), " '' "),
    (re.compile(r"(\S)('')"), r"\1 \2 "),
    # clitic contractions; the preceding character stays attached to the stem
    (re.compile(r"([^'\s])('[sS]|'[mM]|'[dD])(?=\s|$)"), r"\1 \2 "),
    (re.compile(r"([^'\s])('ll|'LL|'re|'RE|'ve|'VE|n't|N'T)(?=\s|$)"), r"\1 \2 "),
]

_SPECIAL_SPLITS = [
    (re.compile(r"\b(can)(not)\b", re.IGNORECASE), r"\1 \2"),
    (re.compile(r"\b(gim)(me)\b", re.IGNORECASE), r"\1 \2"),
    (re.compile(r"\b(gon)(na)\b", re.IGNORECASE), r"\1 \2"),
    (re.compile(r"\b(got)(ta)\b", re.IGNORECASE), r"\1 \2"),
    (re.compile(r"\b(lem)(me)\b", re.IGNORECASE), r"\1 \2"),
    (re.compile(r"\b(wan)(na)\b", re.IGNORECASE), r"\1 \2"),
    (re.compile(r"(\s)('t)(is|was)\b", re.IGNORECASE), r"\1\2 \3"),
]


def _is_abbreviation(text: str, dot: int) -> bool:
    """Period at ``dot`` belongs to an abbreviation like "Mr." or "J."."""
    j = dot - 1
    while j >= 0 and (text[j].isalpha() or text[j] == "."):
        j -= 1
    word = text[j + 1 : dot]
    if not word:
        return False
    if len(word) == 1 and word.isalpha():
        return True  # single initial: "J. Smith"
    return word.lower().rstrip(".") in _COMMON_ABBREVS


def _split_sentences(text: str) -> list[str]:
    parts: list[str] = []
    start = 0
    for m in _SENT_BOUNDARY.finditer(text):
        dot = m.start() - 1
        if text[dot] == "." and _is_abbreviation(text, dot):
            continue
        parts.append(text[start : m.end(1)])
        start = m.end()
    parts.append(text[start:])
    return [p for p in parts if p.strip()]


def _tokenize_sentence(sent: str) -> list[str]:
    for pattern, repl in _RULES_PRE:
        sent = pattern.sub(repl, sent)
    for pattern, repl in _RULES_POST:
        sent = pattern.sub(repl, sent)
    for pattern, repl in _SPECIAL_SPLITS:
        sent = pattern.sub(repl, sent)
    return sent.split()


def tokenize(text: str) -> list[Token]:
    """Split raw text into word/punctuation tokens, order preserved.

    Deterministic; empty input gives an empty list. Surfaces keep their
    original capitalization -- use ``Token.lower`` for lookups.
    """
    surfaces: list[str] = []
    for sent in _split_sentences(text):
        surfaces.extend(_tokenize_sentence(sent))
    return [make_token(s) for s in surfaces]


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


@dataclass
class Vocabulary:
    """Bijective token <-> id map with a reserved out-of-vocabulary id 0."""

    id_to_token: list[str]
    token_to_id: dict[str, int] = field(repr=False)

    def __post_init__(self):
        if self.id_to_token[OOV_ID] != OOV_TOKEN:
            raise ValueError(f"id 0 must be the reserved token {OOV_TOKEN!r}")
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    @property
    def oov_id(self) -> int:
        return OOV_ID

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, surface: str) -> bool:
        key = surface.lower()
        return key != OOV_TOKEN and key in self.token_to_id

    def id_for(self, surface: str) -> int:
        return self.token_to_id.get(surface.lower(), OOV_ID)

    def token_for(self, token_id: int) -> str:
        return self.id_to_token[token_id]

    def sha256(self) -> str:
        digest = hashlib.sha256()
        for tok in self.id_to_token:
            digest.update(tok.encode("utf-8"))
            digest.update(b"\n")
        return digest.hexdigest()

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != OOV_TOKEN:
            raise ValueError(f"vocabulary file must start with {OOV_TOKEN!r}")
        return cls.from_tokens(lines)

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "Vocabulary":
        return cls(list(tokens), {t: i for i, t in enumerate(tokens)})


def build_vocab(dataset: Dataset, min_freq: int = 1) -> Vocabulary:
    """Vocabulary over lowercased token surfaces with frequency >= min_freq.

    Ordering is frequency descending, ties broken lexicographically, after the
    reserved oov token at id 0.
    """
    if not dataset.examples:
        raise ValueError("cannot build a vocabulary from an empty dataset")
    counts: Counter[str] = Counter()
    for ex in dataset.examples:
        counts.update(t.lower for t in ex.tokens)
    counts.pop(OOV_TOKEN, None)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary.from_tokens([OOV_TOKEN] + kept)


def encode(example: Example, vocab: Vocabulary) -> np.ndarray:
    """Token ids for an example; unknown surfaces map to the oov id."""
    return np.array([vocab.id_for(t.surface) for t in example.tokens], dtype=np.int64)


def encode_surfaces(surfaces, vocab: Vocabulary) -> np.ndarray:
    return np.array([vocab.id_for(s) for s in surfaces], dtype=np.int64)


def decode(ids, vocab: Vocabulary) -> list[str]:
    return [vocab.token_for(int(i)) for i in ids]


# ---------------------------------------------------------------------------
# Dataset loading
# ---------------------------------------------------------------------------


def _records_from_dir(path: Path):
    labels = sorted(p.name for p in path.iterdir() if p.is_dir())
    if not labels:
        raise ValueError(f"no label subdirectories under {path}")
    for label in labels:
        for f in sorted((path / label).glob("*.txt")):
            yield f"{label}/{f.stem}", label, f.read_text(encoding="utf-8")


def _records_from_tsv(path: Path):
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise ValueError(f"{path}: malformed record at line {lineno}: no tab")
            label, text = line.split("\t", 1)
            yield str(lineno), label, text


def _records_from_csv(path: Path):
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(
                    f"{path}: malformed record at line {lineno}: need label,text"
                )
            yield str(lineno), row[0], ",".join(row[1:])


def load_dataset(
    path,
    format: str = "tsv",
    max_len: int | None = None,
    labels: list[str] | None = None,
    split: str = "",
) -> Dataset:
    """Load a labelled text dataset.

    Formats: ``dir`` is a directory of ``<label>/<id>.txt`` files; ``tsv`` and
    ``csv`` are one ``label<sep>text`` record per line. When ``labels`` is
    given, any other label is an error; otherwise labels are discovered and
    mapped to dense ids in sorted order. Token sequences are truncated to
    ``max_len`` when set.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset path {path} does not exist")
    if max_len is not None and max_len < 1:
        raise ValueError("max_len must be positive")
    readers = {"dir": _records_from_dir, "tsv": _records_from_tsv, "csv": _records_from_csv}
    if format not in readers:
        raise ValueError(f"unknown dataset format {format!r}")

    records = list(readers[format](path))
    if not records:
        raise ValueError(f"empty dataset: {path}")

    if labels is None:
        label_names = sorted({label for _, label, _ in records})
    else:
        label_names = list(labels)
    label_ids = {name: i for i, name in enumerate(label_names)}
    if len(label_names) < 2:
        raise ValueError(f"dataset {path} has fewer than 2 label values")

    examples = []
    for rec_id, label, text in records:
        if label not in label_ids:
            raise ValueError(f"{path}: unknown label {label!r} in record {rec_id}")
        tokens = tokenize(text)
        if not tokens:
            raise ValueError(f"{path}: record {rec_id} has no tokens")
        if max_len is not None:
            tokens = tokens[:max_len]
        examples.append(Example(tuple(tokens), label_ids[label], rec_id))
    return Dataset(examples, len(label_names), split=split, label_names=tuple(label_names))
