"""Evaluation metrics, adversarial training, and report files."""

import copy
import csv

import numpy as np
import pytest

from conftest import make_example, toy_classifier
from oracle_attack import random_toy
from boundary_attack.attack import AttackConfig, SynonymLexicon
from boundary_attack.corpus import Dataset, build_vocab, load_dataset
from boundary_attack.embeddings import load_embeddings
from boundary_attack.harness import (
    AttackMetrics,
    PerExampleRow,
    RobustnessCurve,
    adversarial_train,
    emit_report,
    evaluate_attack,
    load_curve,
    load_report,
    run_id_for,
    write_traces,
)
from boundary_attack.model import TrainConfig, accuracy, train
from boundary_attack.synth import make_review_corpus


@pytest.fixture(scope="module")
def mini_setup(tmp_path_factory):
    """Small trained synthetic-review model shared across harness tests."""
    out = tmp_path_factory.mktemp("mini")
    corpus = make_review_corpus(
        out, n_train=400, n_test=150, n_filler=600, n_strong_per_class=24,
        emb_dim=20, mean_len=25, max_len=60, seed=5,
    )
    train_set = load_dataset(corpus.train_path, format="tsv", split="train")
    test_set = load_dataset(
        corpus.test_path, format="tsv", labels=list(train_set.label_names), split="test"
    )
    vocab = build_vocab(train_set)
    emb = load_embeddings(corpus.embeddings_path, vocab, 20)
    config = TrainConfig(epochs=6, batch_size=32, lr=5e-3, seed=0, hidden=32, emb_dim=20)
    clf, _ = train(train_set, config, vocab, emb, kind="cnn", test_set=test_set)
    lexicon = SynonymLexicon.from_tsv(corpus.lexicon_path)
    return clf, train_set, test_set, lexicon, config


def test_evaluate_skips_misclassified(mini_setup):
    clf, _, test_set, lexicon, _ = mini_setup
    from boundary_attack.harness import correctly_classified

    metrics, rows, _ = evaluate_attack(
        clf, test_set, lexicon, AttackConfig(max_replacements=25), sample_limit=40, seed=1
    )
    n_correct = len(correctly_classified(clf, test_set))
    assert metrics.n_attacked == 40
    assert metrics.n_skipped_misclassified == len(test_set.examples) - n_correct
    assert 0.0 <= metrics.success_rate <= 1.0
    assert len(rows) == metrics.n_attacked


def test_metrics_counts_consistent(mini_setup):
    clf, _, test_set, lexicon, _ = mini_setup
    metrics, rows, results = evaluate_attack(
        clf, test_set, lexicon, AttackConfig(max_replacements=25), sample_limit=30, seed=2
    )
    assert metrics.n_succeeded + metrics.n_exhausted + metrics.n_budget_exceeded == metrics.n_attacked
    assert metrics.success_rate == pytest.approx(metrics.n_succeeded / metrics.n_attacked)
    succ_rates = [r.replacement_rate for r in results if r.succeeded]
    if succ_rates:
        assert metrics.avg_replacement_rate == pytest.approx(float(np.mean(succ_rates)))


def test_avg_replacement_over_successes_only():
    fake = [
        type("R", (), {"status": "success", "replacement_rate": 0.2})(),
        type("R", (), {"status": "exhausted", "replacement_rate": 0.9})(),
        type("R", (), {"status": "success", "replacement_rate": 0.4})(),
    ]
    from boundary_attack.harness import _compute_metrics

    metrics = _compute_metrics(fake, n_skipped=0)
    assert metrics.avg_replacement_rate == pytest.approx(0.3)
    assert metrics.success_rate == pytest.approx(2 / 3)


def test_constant_classifier_never_succeeds():
    clf = toy_classifier("bag", n_words=6)
    clf.head.weight[...] = 0.0
    clf.head.bias[...] = np.array([1.0, 0.0])
    examples = [make_example("w1 w2", 0, "a"), make_example("w2 w3", 1, "b")]
    ds = Dataset(examples, 2)
    lexicon = SynonymLexicon({"w1": ["w2"], "w2": ["w3"], "w3": ["w4"]})
    metrics, _, _ = evaluate_attack(clf, ds, lexicon, AttackConfig(max_replacements=3))
    # only the class-0 example is "correctly" classified; nothing can flip it
    assert metrics.n_attacked == 1
    assert metrics.n_skipped_misclassified == 1
    assert metrics.success_rate == 0.0


def test_empty_eligible_set_error():
    clf = toy_classifier("bag", n_words=6)
    clf.head.weight[...] = 0.0
    clf.head.bias[...] = np.array([1.0, 0.0])
    ds = Dataset([make_example("w1", 1, "a")], 2)
    with pytest.raises(ValueError, match="correctly classified"):
        evaluate_attack(clf, ds, SynonymLexicon({}), AttackConfig(max_replacements=3))


def test_deterministic_given_seed(mini_setup):
    clf, _, test_set, lexicon, _ = mini_setup
    runs = []
    for _ in range(2):
        metrics, rows, _ = evaluate_attack(
            clf, test_set, lexicon, AttackConfig(max_replacements=25),
            sample_limit=25, seed=9,
        )
        runs.append((metrics, rows))
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]


def test_workers_do_not_change_results(mini_setup):
    clf, _, test_set, lexicon, _ = mini_setup
    config = AttackConfig(max_replacements=25)
    serial = evaluate_attack(clf, test_set, lexicon, config, sample_limit=20, seed=3)
    threaded = evaluate_attack(
        clf, test_set, lexicon, config, sample_limit=20, seed=3, workers=4
    )
    assert serial[0] == threaded[0]
    assert serial[1] == threaded[1]


def test_single_swap_corpus_rates():
    # every example flips after one replacement: success 1.0, rate 1/N each
    rows = []
    examples = []
    clfs = []
    clf, example, lexicon = random_toy(2, num_classes=2, with_punct=False)
    # hand-build a dataset where a single strong token decides the class
    from boundary_attack.model import predict

    ds = Dataset([
        type(example)(example.tokens, predict(clf, example), example.id)
    ], clf.num_classes)
    metrics, rows, results = evaluate_attack(
        clf, ds, lexicon, AttackConfig(max_replacements=len(example.tokens))
    )
    assert metrics.n_attacked == 1
    for r in results:
        if r.succeeded:
            assert r.replacement_rate == pytest.approx(
                len(r.replacements) / len(r.example.tokens)
            )


# ---------------------------------------------------------------------------
# Adversarial training
# ---------------------------------------------------------------------------


def test_adv_train_zero_epochs_leaves_model(mini_setup):
    clf, train_set, test_set, lexicon, config = mini_setup
    clf = copy.deepcopy(clf)
    before = clf.head.weight.copy()
    _, curve = adversarial_train(
        clf, train_set, test_set, lexicon, AttackConfig(max_replacements=25),
        config, epochs=0, per_epoch_attack_cap=20, eval_sample=20, seed=0,
    )
    assert curve.epochs == [0]
    assert np.array_equal(clf.head.weight, before)


def test_adv_train_reduces_success(mini_setup):
    clf, train_set, test_set, lexicon, config = mini_setup
    clf = copy.deepcopy(clf)
    fine_tune = TrainConfig(
        epochs=1, batch_size=32, lr=2e-3, seed=11, hidden=32, emb_dim=20
    )
    _, curve = adversarial_train(
        clf, train_set, test_set, lexicon, AttackConfig(max_replacements=25),
        fine_tune, epochs=3, per_epoch_attack_cap=120, eval_sample=60, seed=0,
    )
    assert len(curve.epochs) == 4 and curve.epochs[0] == 0
    assert curve.success_rate[3] <= curve.success_rate[0]
    assert all(0.0 <= s <= 1.0 for s in curve.success_rate)
    assert all(0.0 <= a <= 1.0 for a in curve.clean_accuracy)


def test_adv_train_prefers_original_labels(mini_setup):
    # augmentation keeps the original label on adversarial copies
    clf, train_set, test_set, lexicon, config = mini_setup
    clf = copy.deepcopy(clf)
    from boundary_attack.harness import correctly_classified
    from boundary_attack.attack import attack

    eligible = correctly_classified(clf, train_set)[:10]
    for ex in eligible:
        res = attack(clf, ex, lexicon, AttackConfig(max_replacements=25))
        assert res.example.label == ex.label


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _metrics_fixture():
    return AttackMetrics(0.75, 0.08, 40, 5, 30, 8, 2)


def _rows_fixture():
    return [
        PerExampleRow("e1", "success", 20, 2, 0.1, 1.5, -0.2, 0.9, 0.1),
        PerExampleRow("e2", "exhausted", 10, 0, 0.0, 0.8, 0.5, 0.7, 0.65),
    ]


def test_report_roundtrip(tmp_path):
    metrics = _metrics_fixture()
    written = emit_report(metrics, None, _rows_fixture(), tmp_path, config_echo={"seed": 1})
    loaded = load_report(written["report"])
    assert loaded["aggregates"] == metrics.as_dict()
    assert loaded["config"] == {"seed": 1}
    assert loaded["run_id"] == run_id_for({"seed": 1})


def test_per_example_csv_row_count(tmp_path):
    rows = _rows_fixture()
    written = emit_report(_metrics_fixture(), None, rows, tmp_path)
    with open(written["per_example"]) as fh:
        data = list(csv.DictReader(fh))
    assert len(data) == len(rows)
    assert data[0]["example_id"] == "e1"
    assert float(data[0]["final_distance"]) == -0.2


def test_empty_rows_valid_report(tmp_path):
    written = emit_report(_metrics_fixture(), None, [], tmp_path)
    with open(written["per_example"]) as fh:
        data = list(csv.DictReader(fh))
    assert data == []
    assert load_report(written["report"])["aggregates"]["n_attacked"] == 40


def test_curve_roundtrip(tmp_path):
    curve = RobustnessCurve([0, 1, 2], [0.9, 0.6, 0.4], [0.05, 0.08, 0.09], [0.95, 0.94, 0.93])
    written = emit_report(None, curve, None, tmp_path)
    loaded = load_curve(written["curve"])
    assert loaded == curve


def test_trace_files(tmp_path, mini_setup):
    clf, _, test_set, lexicon, _ = mini_setup
    _, _, results = evaluate_attack(
        clf, test_set, lexicon, AttackConfig(max_replacements=25, trace=True),
        sample_limit=3, seed=0,
    )
    out = write_traces(results, tmp_path / "traces")
    files = sorted(out.glob("*.tsv"))
    assert len(files) == 3
    header = files[0].read_text().splitlines()[0]
    assert header.split("\t") == [
        "iter", "position", "word", "synonym", "z_max", "distance_before",
        "distance_after", "true_prob_before", "true_prob_after",
    ]


def test_run_id_stable():
    assert run_id_for({"a": 1, "b": 2}) == run_id_for({"b": 2, "a": 1})
    assert run_id_for({"a": 1}) != run_id_for({"a": 2})
