"""Word-replacement attack: saliency-ranked selection, boundary-guided swaps.

Per iteration the attack (1) scores every remaining candidate position by how
much deleting its word (replacing it with the oov token) drops the true-class
probability, (2) picks the highest-scoring position, (3) finds the nearest
point on the head's decision boundary from the current text vector, and
(4) swaps in the synonym whose displacement has the largest signed projection
onto the boundary direction -- but only if that projection is positive.
Positions leave the candidate set once visited; the loop ends on a prediction
flip (success), an exhausted candidate set, or a spent replacement budget.

A greedy probability-drop baseline shares the same loop but picks synonyms by
true-class probability decrease instead of boundary projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Example, Token, Vocabulary, encode_surfaces, make_token
from .geometry import deepfool_affine, deepfool_iterative, projection_scores
from .model import Classifier, encode_batch, logits, softmax

SUCCESS = "success"
EXHAUSTED = "exhausted"
BUDGET_EXCEEDED = "budget_exceeded"


class SynonymLexicon:
    """Case-insensitive lemma -> ordered synonym list, loaded from TSV.

    File grammar: ``lemma<TAB>syn1,syn2,...`` one lemma per line, UTF-8.
    Self-synonyms are dropped and lists are deduplicated preserving order.
    """

    def __init__(self, mapping: dict[str, list[str]]):
        self._mapping: dict[str, tuple[str, ...]] = {}
        for lemma, syns in mapping.items():
            key = lemma.lower()
            seen, cleaned = set(), []
            for s in syns:
                s = s.lower()
                if s and s != key and s not in seen:
                    seen.add(s)
                    cleaned.append(s)
            self._mapping[key] = tuple(cleaned)

    def __len__(self) -> int:
        return len(self._mapping)

    def __contains__(self, lemma: str) -> bool:
        return lemma.lower() in self._mapping

    def lookup(self, surface: str) -> tuple[str, ...]:
        return self._mapping.get(surface.lower(), ())

    @classmethod
    def from_tsv(cls, path) -> "SynonymLexicon":
        mapping: dict[str, list[str]] = {}
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if "\t" not in line:
                    raise ValueError(f"{path}: malformed lexicon line {lineno}: no tab")
                lemma, rest = line.split("\t", 1)
                syns = [s.strip() for s in rest.split(",") if s.strip()]
                if not lemma or not syns:
                    raise ValueError(
                        f"{path}: malformed lexicon line {lineno}: empty lemma or synonyms"
                    )
                mapping[lemma] = syns
        return cls(mapping)


@dataclass
class AttackConfig:
    max_replacements: int = 50
    trace: bool = False
    boundary_search: str = "affine"  # "affine" or "iterative"

    def __post_init__(self):
        if self.max_replacements < 1:
            raise ValueError("replacement budget must be >= 1")
        if self.boundary_search not in ("affine", "iterative"):
            raise ValueError(f"unknown boundary search {self.boundary_search!r}")


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    position: int
    word: str
    synonym: str | None
    score: float | None           # z_max; None when no synonym was available
    distance_before: float | None
    distance_after: float | None
    true_prob_before: float
    true_prob_after: float


@dataclass
class AttackResult:
    status: str
    example: Example
    replacements: list[tuple[int, str, str]]
    trace: list[TraceStep]
    original_prediction: int
    final_prediction: int
    initial_distance: float | None
    final_distance: float | None
    initial_true_prob: float
    final_true_prob: float

    @property
    def replacement_rate(self) -> float:
        return len(self.replacements) / len(self.example.tokens)

    @property
    def succeeded(self) -> bool:
        return self.status == SUCCESS


def candidate_positions(example: Example, vocab: Vocabulary) -> list[int]:
    """Positions eligible for replacement: in-vocabulary, not punctuation."""
    return [
        k
        for k, tok in enumerate(example.tokens)
        if tok.surface in vocab and not tok.is_punctuation
    ]


def _match_case(synonym: str, original: str) -> str:
    if len(original) > 1 and original.isupper():
        return synonym.upper()
    if original[:1].isupper():
        return synonym[:1].upper() + synonym[1:]
    return synonym


def synonyms(lexicon: SynonymLexicon, token: Token, vocab: Vocabulary) -> list[Token]:
    """In-vocabulary synonyms of a token, case pattern copied from the original.

    Out-of-vocabulary synonyms are dropped: the encoder would collapse them to
    the oov embedding and the displacement geometry would be meaningless.
    """
    out = []
    for s in lexicon.lookup(token.surface):
        if s in vocab:
            out.append(make_token(_match_case(s, token.surface)))
    return out


# ---------------------------------------------------------------------------
# Saliency
# ---------------------------------------------------------------------------


def _forward_rows(clf: Classifier, id_rows, chunk: int = 64):
    """Text vectors and class probabilities for a list of id sequences."""
    vs, ps = [], []
    for i in range(0, len(id_rows), chunk):
        v = encode_batch(clf, id_rows[i : i + chunk])
        vs.append(v)
        ps.append(softmax(logits(clf.head, v)))
    return np.concatenate(vs, axis=0), np.concatenate(ps, axis=0)


def _saliency_scores(clf: Classifier, base_ids: np.ndarray, label: int, positions):
    """Leave-one-out saliency for each position, plus the base (v, probs)."""
    rows = [base_ids]
    for k in positions:
        variant = base_ids.copy()
        variant[k] = clf.vocab.oov_id
        rows.append(variant)
    v, p = _forward_rows(clf, rows)
    scores = p[0, label] - p[1:, label]
    return scores, v[0], p[0]


def word_saliency(clf: Classifier, example: Example, position: int) -> float:
    """Drop in true-class probability when the word at ``position`` is
    replaced by the oov token; the true class is the example's label."""
    if not 0 <= position < len(example.tokens):
        raise IndexError(f"position {position} out of range")
    base_ids = encode_surfaces(example.surfaces(), clf.vocab)
    scores, _, _ = _saliency_scores(clf, base_ids, example.label, [position])
    return float(scores[0])


def select_candidate(clf: Classifier, example: Example, candidates) -> int:
    """Candidate position with maximum saliency; leftmost position on ties."""
    candidates = sorted(candidates)
    if not candidates:
        raise ValueError("empty candidate set")
    base_ids = encode_surfaces(example.surfaces(), clf.vocab)
    scores, _, _ = _saliency_scores(clf, base_ids, example.label, candidates)
    return candidates[int(np.argmax(scores))]


# ---------------------------------------------------------------------------
# Attack loop
# ---------------------------------------------------------------------------


def _boundary_step(clf: Classifier, v: np.ndarray, config: AttackConfig):
    if config.boundary_search == "affine":
        return deepfool_affine(clf.head, v)
    return deepfool_iterative(clf.head, v)


def _signed(distance: float, prediction: int, reference: int) -> float:
    return distance if prediction == reference else -distance


def attack(
    clf: Classifier,
    example: Example,
    lexicon: SynonymLexicon,
    config: AttackConfig,
) -> AttackResult:
    """Perturb ``example`` until the classifier's prediction flips.

    Success means the final prediction differs from the prediction on the
    original example (the caller decides whether to restrict to correctly
    classified inputs). Signed distances in the result are taken with the
    original prediction as the reference class.
    """
    return _attack_loop(clf, example, lexicon, config, objective="projection")


def greedy_probability_baseline(
    clf: Classifier,
    example: Example,
    lexicon: SynonymLexicon,
    config: AttackConfig,
) -> AttackResult:
    """Same loop as :func:`attack` but the synonym is chosen by the largest
    drop in true-class probability; used as a non-geometric comparison."""
    return _attack_loop(clf, example, lexicon, config, objective="probability")


def _attack_loop(clf, example, lexicon, config, objective):
    vocab = clf.vocab
    label = example.label
    tokens = list(example.tokens)
    base_ids = encode_surfaces([t.surface for t in tokens], vocab)
    candidates = candidate_positions(example, vocab)

    use_geometry = objective == "projection"
    # a head whose rows all coincide has no decision boundary anywhere; no
    # replacement can flip it, so iterations just consume candidates
    degenerate_head = bool((clf.head.weight == clf.head.weight[0]).all())

    _, probs0 = _forward_rows(clf, [base_ids])
    orig_pred = int(np.argmax(probs0[0]))

    def head_distance(v, pred):
        if degenerate_head:
            return None
        step = _boundary_step(clf, v, config)
        return _signed(step.distance, pred, orig_pred)

    v0, p0 = None, probs0[0]
    initial_distance = None
    if not degenerate_head:
        v0 = encode_batch(clf, [base_ids])[0]
        initial_distance = head_distance(v0, orig_pred)
    initial_true_prob = float(p0[label])

    replacements: list[tuple[int, str, str]] = []
    trace: list[TraceStep] = []
    status = EXHAUSTED
    cur_pred = orig_pred
    cur_true_prob = initial_true_prob
    cur_distance = initial_distance
    iteration = 0

    while candidates:
        scores, v_cur, p_cur = _saliency_scores(clf, base_ids, label, candidates)
        cur_true_prob = float(p_cur[label])
        pred_now = int(np.argmax(p_cur))
        k_star = candidates[int(np.argmax(scores))]
        candidates.remove(k_star)
        word = tokens[k_star]

        syns = synonyms(lexicon, word, vocab)
        if not syns or (use_geometry and degenerate_head):
            trace.append(
                TraceStep(iteration, k_star, word.surface, None, None,
                          cur_distance, cur_distance, cur_true_prob, cur_true_prob)
            )
            iteration += 1
            continue

        step = None
        if use_geometry:
            step = _boundary_step(clf, v_cur, config)
            cur_distance = _signed(step.distance, pred_now, orig_pred)
            if step.distance == 0.0:
                # Already on the boundary: take the flip if it happened,
                # otherwise this position is spent without a replacement.
                if pred_now != orig_pred:
                    status = SUCCESS
                    cur_pred = pred_now
                    break
                trace.append(
                    TraceStep(iteration, k_star, word.surface, None, None,
                              cur_distance, cur_distance, cur_true_prob, cur_true_prob)
                )
                iteration += 1
                continue
        elif not degenerate_head:
            cur_distance = head_distance(v_cur, pred_now)

        variant_rows = []
        for syn in syns:
            row = base_ids.copy()
            row[k_star] = vocab.id_for(syn.surface)
            variant_rows.append(row)
        v_syn, p_syn = _forward_rows(clf, variant_rows)

        if use_geometry:
            z = projection_scores(v_syn - v_cur, step.offset)
            m_star = int(np.argmax(z))
            gain = float(z[m_star])
        else:
            drops = cur_true_prob - p_syn[:, label]
            m_star = int(np.argmax(drops))
            gain = float(drops[m_star])

        applied = gain > 0.0
        if applied:
            chosen = syns[m_star]
            tokens[k_star] = chosen
            base_ids[k_star] = vocab.id_for(chosen.surface)
            replacements.append((k_star, word.surface, chosen.surface))
            new_pred = int(np.argmax(p_syn[m_star]))
            new_true_prob = float(p_syn[m_star, label])
            new_distance = (
                None if degenerate_head
                else _signed(_boundary_step(clf, v_syn[m_star], config).distance,
                             new_pred, orig_pred)
            )
        else:
            new_pred = pred_now
            new_true_prob = cur_true_prob
            new_distance = cur_distance

        trace.append(
            TraceStep(
                iteration, k_star, word.surface,
                chosen.surface if applied else None,
                gain if use_geometry else None,
                cur_distance, new_distance, cur_true_prob, new_true_prob,
            )
        )
        iteration += 1
        cur_true_prob = new_true_prob
        cur_distance = new_distance

        if applied and new_pred != orig_pred:
            status = SUCCESS
            cur_pred = new_pred
            break
        if applied and len(replacements) >= config.max_replacements:
            status = BUDGET_EXCEEDED
            cur_pred = new_pred
            break
        cur_pred = new_pred

    final = Example(tuple(tokens), example.label, example.id)
    return AttackResult(
        status=status,
        example=final,
        replacements=replacements,
        trace=trace,
        original_prediction=orig_pred,
        final_prediction=cur_pred,
        initial_distance=initial_distance,
        final_distance=cur_distance,
        initial_true_prob=initial_true_prob,
        final_true_prob=cur_true_prob,
    )
