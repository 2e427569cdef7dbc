"""Attack a single review and watch the trace.

Each iteration picks the most salient replaceable word, finds the nearest
decision boundary from the current text vector, and swaps in the synonym
whose displacement projects furthest along the boundary direction. On
success the signed distance crosses zero and the true-class probability
collapses.
"""

from pathlib import Path

from boundary_attack.attack import AttackConfig, SynonymLexicon, attack
from boundary_attack.corpus import build_vocab, load_dataset
from boundary_attack.embeddings import load_embeddings
from boundary_attack.harness import correctly_classified
from boundary_attack.model import TrainConfig, train
from boundary_attack.synth import make_review_corpus

workdir = Path("demo_runs/attack_one")
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
victim = correctly_classified(clf, test_set)[0]
result = attack(clf, victim, lexicon, AttackConfig(max_replacements=25))

print(f"status: {result.status}")
print(f"prediction: {result.original_prediction} -> {result.final_prediction}")
print(f"replaced {len(result.replacements)} of {len(victim.tokens)} words "
      f"({result.replacement_rate:.1%}):")
for pos, old, new in result.replacements:
    print(f"  [{pos:3d}] {old} -> {new}")

print("\n iter  position  word            synonym        "
      "   distance          true-class prob")
for s in result.trace:
    if s.synonym is None:
        continue
    print(
        f"  {s.iteration:3d}  {s.position:8d}  {s.word:<14s}  {s.synonym:<14s}"
        f"  {s.distance_before:+.3f} -> {s.distance_after:+.3f}"
        f"   {s.true_prob_before:.2%} -> {s.true_prob_after:.2%}"
    )
