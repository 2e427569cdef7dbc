"""Synthetic review-style corpora for desk-scale experiments and demos.

Full-size public sentiment corpora and pretrained embeddings are too large
(and not redistributable) for a self-contained test suite, so this module
generates a two-class "movie review" stand-in with the same moving parts:

  * a Zipf-distributed filler vocabulary of pseudo-words (~20k types),
  * per-class banks of strong opinion words that carry the label signal,
  * rare same-polarity alternates for each strong word, exported as the
    synonym lexicon -- the attack succeeds by swapping strong words for these
    under-trained alternates,
  * an embedding file in the standard text format (random vectors, partial
    coverage on purpose), and
  * train/test TSV files.

Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_ONSETS = "b bl br c ch cl cr d dr f fl fr g gl gr h j k l m n p pl pr qu r s sh sl sm sp st str t th tr v w".split()
_VOWELS = "a e i o u ai ea ee oo ou".split()
_CODAS = ["", "b", "ck", "d", "g", "l", "m", "n", "nd", "ng", "p", "r", "rd", "s", "st", "t", "x"]


def _pseudo_word(rng: np.random.Generator, n_syllables: int) -> str:
    parts = []
    for _ in range(n_syllables):
        parts.append(_ONSETS[rng.integers(len(_ONSETS))])
        parts.append(_VOWELS[rng.integers(len(_VOWELS))])
    parts.append(_CODAS[rng.integers(len(_CODAS))])
    return "".join(parts)


def _word_bank(rng: np.random.Generator, count: int, n_syllables, taken: set) -> list[str]:
    words = []
    while len(words) < count:
        w = _pseudo_word(rng, int(rng.integers(n_syllables[0], n_syllables[1] + 1)))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


@dataclass
class SyntheticCorpus:
    train_path: Path
    test_path: Path
    embeddings_path: Path
    lexicon_path: Path
    emb_dim: int
    n_filler: int
    n_strong_per_class: int


def make_review_corpus(
    out_dir,
    n_train: int = 5000,
    n_test: int = 1000,
    n_filler: int = 21000,
    n_strong_per_class: int = 80,
    n_synonyms: int = 3,
    emb_dim: int = 100,
    mean_len: int = 65,
    max_len: int = 200,
    seed: int = 0,
    embedding_coverage: float = 0.95,
) -> SyntheticCorpus:
    """Generate a binary sentiment corpus plus embeddings and a synonym lexicon.

    Documents mix Zipf-sampled filler with 3..7 strong words of the document's
    class and occasional opposite-class noise; strong-word alternates appear
    in training only a handful of times, so a trained model leans on the
    frequent forms and is vulnerable to alternate swaps.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x57A7]))

    taken: set[str] = set()
    filler = _word_bank(rng, n_filler, (1, 3), taken)
    strong = {
        "neg": _word_bank(rng, n_strong_per_class, (2, 3), taken),
        "pos": _word_bank(rng, n_strong_per_class, (2, 3), taken),
    }
    alternates = {
        label: [_word_bank(rng, n_synonyms, (2, 4), taken) for _ in bank]
        for label, bank in strong.items()
    }

    zipf_weights = 1.0 / np.arange(1, n_filler + 1) ** 1.07
    zipf_weights /= zipf_weights.sum()

    def make_doc(label: str) -> str:
        length = int(np.clip(rng.normal(mean_len, mean_len / 3), 20, max_len))
        words = [filler[i] for i in rng.choice(n_filler, size=length, p=zipf_weights)]
        n_strong = int(rng.integers(3, 7))
        bank = strong[label]
        picks = rng.choice(len(bank), size=min(n_strong, len(bank)), replace=False)
        slots = rng.choice(length, size=len(picks), replace=False)
        for slot, pick in zip(slots, picks):
            # occasionally write the rare alternate so that it is in-vocabulary
            if rng.random() < 0.01:
                alts = alternates[label][pick]
                words[slot] = alts[int(rng.integers(len(alts)))]
            else:
                words[slot] = bank[pick]
        if rng.random() < 0.25:
            other = "pos" if label == "neg" else "neg"
            noise_slot = int(rng.integers(length))
            if noise_slot not in set(slots.tolist()):
                words[noise_slot] = strong[other][int(rng.integers(n_strong_per_class))]
        # light punctuation so candidate filtering has something to skip
        sentences = []
        start = 0
        while start < len(words):
            step = int(rng.integers(8, 16))
            sentences.append(" ".join(words[start : start + step]) + " .")
            start += step
        return " ".join(sentences)

    def write_split(path: Path, count: int) -> None:
        labels = np.array(["neg", "pos"])[rng.integers(0, 2, size=count)]
        with path.open("w", encoding="utf-8") as fh:
            for label in labels:
                fh.write(f"{label}\t{make_doc(str(label))}\n")

    train_path = out_dir / "train.tsv"
    test_path = out_dir / "test.tsv"
    write_split(train_path, n_train)
    write_split(test_path, n_test)

    # ensure every alternate occurs at least once in training data: one short
    # document per strong word carrying all of its alternates
    with train_path.open("a", encoding="utf-8") as fh:
        for label, banks in alternates.items():
            for alts in banks:
                doc_words = [filler[j] for j in rng.choice(n_filler, size=24, p=zipf_weights)]
                slots = rng.choice(24, size=len(alts), replace=False)
                for slot, alt in zip(slots, alts):
                    doc_words[slot] = alt
                extra = " ".join(doc_words) + " ."
                fh.write(f"{label}\t{extra}\n")

    lexicon_path = out_dir / "lexicon.tsv"
    with lexicon_path.open("w", encoding="utf-8") as fh:
        for label in ("neg", "pos"):
            for word, alts in zip(strong[label], alternates[label]):
                fh.write(f"{word}\t{','.join(alts)}\n")
        # distractor entries between similar-frequency filler words; most
        # common words get synonyms, mirroring broad lexical-database coverage
        n_covered = min(5000, n_filler)
        order = rng.permutation(n_covered)
        for i in range(0, n_covered - 3, 4):
            lemma = filler[order[i]]
            syns = [filler[order[i + j]] for j in range(1, 4)]
            fh.write(f"{lemma}\t{','.join(syns)}\n")

    embeddings_path = out_dir / "embeddings.txt"
    vocab_words = filler + strong["neg"] + strong["pos"] + [
        alt for banks in alternates.values() for alts in banks for alt in alts
    ] + ["."]
    with embeddings_path.open("w", encoding="utf-8") as fh:
        for word in vocab_words:
            if rng.random() > embedding_coverage:
                continue
            vec = rng.normal(0.0, 0.35, size=emb_dim)
            fh.write(word + " " + " ".join(f"{x:.5f}" for x in vec) + "\n")

    return SyntheticCorpus(
        train_path, test_path, embeddings_path, lexicon_path,
        emb_dim, n_filler, n_strong_per_class,
    )
