"""Train a small convolutional text classifier on a synthetic review corpus.

The generator writes TSV splits, a text embedding file, and a synonym
lexicon; everything downstream (vocabulary, embedding table, training) is
deterministic for the seed. Expect ~95% clean test accuracy in under a
minute on a laptop CPU.
"""

from pathlib import Path

from boundary_attack.corpus import build_vocab, load_dataset
from boundary_attack.embeddings import load_embeddings
from boundary_attack.model import TrainConfig, save_checkpoint, train
from boundary_attack.synth import make_review_corpus

workdir = Path("demo_runs/train")
corpus = make_review_corpus(
    workdir / "data",
    n_train=1200, n_test=300, n_filler=3000, n_strong_per_class=60,
    emb_dim=50, mean_len=40, max_len=120, seed=7,
)

train_set = load_dataset(corpus.train_path, format="tsv", split="train")
test_set = load_dataset(
    corpus.test_path, format="tsv", labels=list(train_set.label_names), split="test"
)
vocab = build_vocab(train_set, min_freq=1)
table = load_embeddings(corpus.embeddings_path, vocab, dim=50)
print(f"{len(train_set.examples)} train docs, vocabulary {vocab.size}, "
      f"embedding coverage {table.coverage:.1%}")

config = TrainConfig(epochs=6, batch_size=32, lr=5e-3, seed=0, hidden=64, emb_dim=50)
clf, metrics = train(train_set, config, vocab, table, kind="cnn", test_set=test_set)
for row in metrics:
    print(f"epoch {row['epoch']}: loss {row['loss']:.3f} "
          f"train {row['train_accuracy']:.3f} test {row['test_accuracy']:.3f}")

save_checkpoint(clf, workdir / "model.npz")
vocab.save(workdir / "vocab.txt")
print(f"checkpoint saved to {workdir / 'model.npz'}")
