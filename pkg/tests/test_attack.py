"""Attack loop, saliency, synonym handling; brute-force oracle equivalence."""

import numpy as np
import pytest

from conftest import make_example, toy_classifier
from oracle_attack import oracle_decisions, random_toy
from boundary_attack.attack import (
    BUDGET_EXCEEDED,
    EXHAUSTED,
    SUCCESS,
    AttackConfig,
    SynonymLexicon,
    attack,
    candidate_positions,
    greedy_probability_baseline,
    select_candidate,
    synonyms,
    word_saliency,
)
from boundary_attack.corpus import OOV_TOKEN, Example, encode, make_token
from boundary_attack.model import predict, probabilities


# ---------------------------------------------------------------------------
# Lexicon
# ---------------------------------------------------------------------------


def test_lexicon_from_tsv(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("good\tfine,nice\nbad\tpoor\n", encoding="utf-8")
    lex = SynonymLexicon.from_tsv(path)
    assert lex.lookup("good") == ("fine", "nice")
    assert lex.lookup("GOOD") == ("fine", "nice")
    assert lex.lookup("missing") == ()


def test_lexicon_rejects_malformed(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("good fine,nice\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        SynonymLexicon.from_tsv(path)


def test_lexicon_drops_self_and_duplicates():
    lex = SynonymLexicon({"Good": ["good", "fine", "Fine", "nice", "fine"]})
    assert lex.lookup("good") == ("fine", "nice")


# ---------------------------------------------------------------------------
# synonyms op
# ---------------------------------------------------------------------------


def test_synonym_case_preserved(bag_classifier):
    # vocab has w0..; use a lexicon into vocab words
    lex = SynonymLexicon({"w1": ["w2", "w3"]})
    out = synonyms(lex, make_token("W1"), bag_classifier.vocab)
    assert [t.surface for t in out] == ["W2", "W3"]
    out = synonyms(lex, make_token("w1"), bag_classifier.vocab)
    assert [t.surface for t in out] == ["w2", "w3"]


def test_synonym_title_case():
    lex = SynonymLexicon({"ready": ["prepare"]})
    vocab_clf = toy_classifier("bag", n_words=3)
    vocab = vocab_clf.vocab
    vocab.token_to_id["prepare"] = len(vocab.id_to_token)
    vocab.id_to_token.append("prepare")
    out = synonyms(lex, make_token("Ready"), vocab)
    assert [t.surface for t in out] == ["Prepare"]


def test_synonym_absent_token(bag_classifier):
    lex = SynonymLexicon({"w1": ["w2"]})
    assert synonyms(lex, make_token("w9"), bag_classifier.vocab) == []


def test_out_of_vocab_synonyms_filtered(bag_classifier):
    lex = SynonymLexicon({"w1": ["w2", "notaword", "w3"]})
    out = synonyms(lex, make_token("w1"), bag_classifier.vocab)
    assert [t.surface for t in out] == ["w2", "w3"]


# ---------------------------------------------------------------------------
# Saliency and candidate selection
# ---------------------------------------------------------------------------


def test_saliency_of_oov_position_is_zero(bag_classifier):
    ex = Example(
        (make_token("w1"), make_token(OOV_TOKEN), make_token("w2")), 0, "e"
    )
    assert word_saliency(bag_classifier, ex, 1) == 0.0


def test_saliency_zero_for_uniform_head():
    clf = toy_classifier("bag")
    clf.head.weight[...] = 0.0
    clf.head.bias[...] = 0.0
    ex = make_example("w1 w2 w3")
    for k in range(3):
        assert word_saliency(clf, ex, k) == 0.0


def test_saliency_matches_direct_probability_difference():
    # two-token example, hand-checkable forward pass
    clf = toy_classifier("bag", dim=2, n_words=4)
    clf.embeddings.vectors[1:5] = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.0]])
    clf.head.weight[...] = np.array([[2.0, 0.0], [0.0, 2.0]])
    clf.head.bias[...] = 0.0
    ex = Example((make_token(clf.vocab.token_for(1)), make_token(clf.vocab.token_for(2))), 0, "e")
    base = probabilities(clf, ex)[0]
    variant = ex.with_token(0, make_token(OOV_TOKEN))
    expected = base - probabilities(clf, variant)[0]
    assert word_saliency(clf, ex, 0) == pytest.approx(float(expected), abs=1e-12)


def test_select_candidate_max_and_tie_break():
    clf, example, lexicon = random_toy(7)
    cands = candidate_positions(example, clf.vocab)
    got = select_candidate(clf, example, cands)
    sal = {k: word_saliency(clf, example, k) for k in cands}
    best = max(sal.values())
    assert got == min(k for k in cands if sal[k] == best)


def test_select_candidate_empty_error(bag_classifier):
    with pytest.raises(ValueError):
        select_candidate(bag_classifier, make_example("w1"), [])


def test_select_candidate_exhaustive_on_random_toys():
    for seed in range(25):
        clf, example, lexicon = random_toy(seed)
        cands = candidate_positions(example, clf.vocab)
        sal = {k: word_saliency(clf, example, k) for k in cands}
        best = max(sal.values())
        assert select_candidate(clf, example, cands) == min(
            k for k in cands if sal[k] == best
        )


def test_candidate_positions_exclude_oov_and_punct(bag_classifier):
    ex = Example(
        (
            make_token("w1"),
            make_token("."),
            make_token("notinvocab"),
            make_token("w2"),
        ),
        0,
        "e",
    )
    assert candidate_positions(ex, bag_classifier.vocab) == [0, 3]


# ---------------------------------------------------------------------------
# Attack loop vs brute-force oracle
# ---------------------------------------------------------------------------


def _production_decisions(result):
    return [(s.position, s.synonym) for s in result.trace]


@pytest.mark.parametrize("seed", range(30))
def test_attack_matches_exhaustive_oracle(seed):
    clf, example, lexicon = random_toy(seed)
    config = AttackConfig(max_replacements=4)
    result = attack(clf, example, lexicon, config)
    decisions, final_tokens, status = oracle_decisions(clf, example, lexicon, 4)
    assert _production_decisions(result) == decisions
    assert tuple(t.surface for t in result.example.tokens) == tuple(
        t.surface for t in final_tokens
    )
    assert result.status == status


@pytest.mark.parametrize("seed", range(20))
def test_baseline_matches_exhaustive_oracle(seed):
    clf, example, lexicon = random_toy(seed + 1000)
    config = AttackConfig(max_replacements=4)
    result = greedy_probability_baseline(clf, example, lexicon, config)
    decisions, final_tokens, status = oracle_decisions(
        clf, example, lexicon, 4, objective="probability"
    )
    assert _production_decisions(result) == decisions
    assert result.status == status


def test_attack_success_invariants():
    found = 0
    for seed in range(60):
        clf, example, lexicon = random_toy(seed)
        result = attack(clf, example, lexicon, AttackConfig(max_replacements=6))
        # success iff the prediction changed
        flipped = predict(clf, result.example) != predict(clf, example)
        assert (result.status == SUCCESS) == flipped
        assert len(result.replacements) <= 6
        positions = [p for p, _, _ in result.replacements]
        assert len(positions) == len(set(positions))
        assert 0.0 <= result.replacement_rate <= 1.0
        if result.status == SUCCESS:
            found += 1
            assert result.final_distance < 0.0
            # distances stay nonnegative until the final crossing
            applied = [s for s in result.trace if s.distance_after is not None]
            assert all(s.distance_before >= 0.0 for s in applied)
            crossings = sum(
                1
                for s in applied
                if s.distance_before >= 0.0 > s.distance_after
            )
            assert crossings == 1
    assert found >= 10  # the toy family must actually produce successes


def test_attack_exhausted_keeps_applied_replacements():
    # lexicon yields no useful synonyms -> attack ends exhausted
    clf = toy_classifier("bag")
    ex = make_example("w1 w2 w3", label=0)
    lex = SynonymLexicon({})
    result = attack(clf, ex, lex, AttackConfig(max_replacements=3))
    assert result.status == EXHAUSTED
    assert result.replacements == []
    assert [t.surface for t in result.example.tokens] == ["w1", "w2", "w3"]
    assert len(result.trace) == 3  # one consumed candidate per iteration


def test_attack_budget_exceeded():
    for seed in range(120):
        clf, example, lexicon = random_toy(seed)
        result = attack(clf, example, lexicon, AttackConfig(max_replacements=1))
        if result.status == BUDGET_EXCEEDED:
            assert len(result.replacements) == 1
            assert predict(clf, result.example) == predict(clf, example)
            return
    pytest.fail("no budget-limited instance found in toy family")


def test_replacements_only_on_positive_projection():
    for seed in range(20):
        clf, example, lexicon = random_toy(seed)
        result = attack(clf, example, lexicon, AttackConfig(max_replacements=5))
        replaced_positions = {p for p, _, _ in result.replacements}
        for s in result.trace:
            if s.synonym is not None:
                assert s.score > 0.0
                assert s.position in replaced_positions
            elif s.score is not None:
                assert s.score <= 0.0


def test_iterations_bounded_by_candidates():
    for seed in range(10):
        clf, example, lexicon = random_toy(seed)
        n_candidates = len(candidate_positions(example, clf.vocab))
        result = attack(clf, example, lexicon, AttackConfig(max_replacements=50))
        assert len(result.trace) <= n_candidates


def test_baseline_uniform_head_exhausts():
    clf = toy_classifier("bag")
    clf.head.weight[...] = 0.0
    clf.head.bias[...] = 0.0
    lex = SynonymLexicon({"w1": ["w2"], "w2": ["w3"], "w3": ["w1"]})
    result = greedy_probability_baseline(
        clf, make_example("w1 w2 w3"), lex, AttackConfig(max_replacements=5)
    )
    assert result.status == EXHAUSTED
    assert result.replacements == []


def test_geometry_not_much_worse_than_baseline_on_toys():
    geo, base = 0, 0
    n = 40
    for seed in range(n):
        clf, example, lexicon = random_toy(seed + 500)
        config = AttackConfig(max_replacements=5)
        geo += attack(clf, example, lexicon, config).status == SUCCESS
        base += (
            greedy_probability_baseline(clf, example, lexicon, config).status
            == SUCCESS
        )
    assert geo / n >= base / n - 0.05


def test_trace_probabilities_within_bounds():
    clf, example, lexicon = random_toy(3)
    result = attack(clf, example, lexicon, AttackConfig(max_replacements=5))
    for s in result.trace:
        assert 0.0 <= s.true_prob_before <= 1.0
        assert 0.0 <= s.true_prob_after <= 1.0


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(max_replacements=0)
    with pytest.raises(ValueError):
        AttackConfig(boundary_search="nope")
