"""Evaluate the attack over a test set and write report files.

Success rate counts only examples the model classified correctly; the
average replacement rate is taken over successful attacks. The geometric
synonym choice is compared against a greedy probability-drop baseline.
``report.json`` and ``per_example.csv`` land in ``demo_runs/evaluate``.
"""

from pathlib import Path

from boundary_attack.attack import AttackConfig, SynonymLexicon
from boundary_attack.corpus import build_vocab, load_dataset
from boundary_attack.embeddings import load_embeddings
from boundary_attack.harness import emit_report, evaluate_attack
from boundary_attack.model import TrainConfig, train
from boundary_attack.synth import make_review_corpus

workdir = Path("demo_runs/evaluate")
corpus = make_review_corpus(
    workdir / "data",
    n_train=1200, n_test=300, n_filler=3000, n_strong_per_class=60,
    emb_dim=50, mean_len=40, max_len=120, seed=7,
)
train_set = load_dataset(corpus.train_path, format="tsv", split="train")
test_set = load_dataset(
    corpus.test_path, format="tsv", labels=list(train_set.label_names), split="test"
)
vocab = build_vocab(train_set)
table = load_embeddings(corpus.embeddings_path, vocab, dim=50)
clf, _ = train(
    train_set,
    TrainConfig(epochs=6, batch_size=32, lr=5e-3, seed=0, hidden=64, emb_dim=50),
    vocab, table, kind="cnn",
)
lexicon = SynonymLexicon.from_tsv(corpus.lexicon_path)
config = AttackConfig(max_replacements=25)

for method in ("geometry", "baseline"):
    metrics, rows, _ = evaluate_attack(
        clf, test_set, lexicon, config, sample_limit=100, seed=1, workers=2,
        method=method,
    )
    print(f"{method:>9s}: success {metrics.success_rate:.1%}, "
          f"replaced {metrics.avg_replacement_rate:.1%} "
          f"({metrics.n_succeeded}/{metrics.n_attacked} fooled, "
          f"{metrics.n_skipped_misclassified} skipped as misclassified)")
    if method == "geometry":
        written = emit_report(
            metrics, None, rows, workdir / "report",
            config_echo={"budget": 25, "sample": 100, "seed": 1},
        )
        print(f"  report files: {', '.join(str(p) for p in written.values())}")
