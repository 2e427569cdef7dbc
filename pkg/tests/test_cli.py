"""End-to-end command-line runs on a small synthetic corpus."""

import json

import pytest

from boundary_attack.cli import main
from boundary_attack.harness import load_curve, load_report
from boundary_attack.synth import make_review_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    return make_review_corpus(
        out, n_train=300, n_test=100, n_filler=500, n_strong_per_class=20,
        emb_dim=16, mean_len=20, max_len=50, seed=3,
    )


@pytest.fixture(scope="module")
def trained(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main([
        "train",
        "--data", str(corpus.train_path),
        "--test-data", str(corpus.test_path),
        "--emb", str(corpus.embeddings_path),
        "--model", "cnn",
        "--emb-dim", "16",
        "--hidden", "24",
        "--epochs", "6",
        "--lr", "0.005",
        "--batch-size", "32",
        "--seed", "7",
        "--out", str(out),
    ])
    assert code == 0
    return out


def test_train_outputs(trained):
    assert (trained / "model.npz").exists()
    assert (trained / "vocab.txt").exists()
    assert (trained / "config_echo.json").exists()
    metrics = json.loads((trained / "metrics.json").read_text())
    assert len(metrics["per_epoch"]) == 6
    assert metrics["per_epoch"][-1]["test_accuracy"] > 0.7


def test_train_missing_embedding_file(corpus, tmp_path):
    out = tmp_path / "run"
    code = main([
        "train", "--data", str(corpus.train_path), "--emb", str(tmp_path / "nope.txt"),
        "--seed", "1", "--out", str(out),
    ])
    assert code != 0
    assert not (out / "model.npz").exists()


def test_train_honors_max_len(corpus, tmp_path, capsys):
    out = tmp_path / "run"
    code = main([
        "train", "--data", str(corpus.train_path), "--emb", str(corpus.embeddings_path),
        "--emb-dim", "16", "--epochs", "1", "--max-len", "10",
        "--seed", "1", "--out", str(out),
    ])
    assert code == 0
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["max_len"] == 10


def test_attack_run(corpus, trained, tmp_path):
    out = tmp_path / "attack"
    code = main([
        "attack",
        "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.test_path),
        "--lexicon", str(corpus.lexicon_path),
        "--budget", "25",
        "--sample", "30",
        "--trace",
        "--workers", "2",
        "--seed", "11",
        "--out", str(out),
    ])
    assert code == 0
    report = load_report(out / "report.json")
    assert "success_rate" in report["aggregates"]
    assert (out / "per_example.csv").exists()
    traces = list((out / "traces").glob("*.tsv"))
    assert len(traces) == report["aggregates"]["n_attacked"]


def test_attack_vocab_mismatch(corpus, trained, tmp_path):
    bad_vocab = tmp_path / "bad_vocab.txt"
    bad_vocab.write_text("<oov>\nalpha\nbeta\n", encoding="utf-8")
    out = tmp_path / "attack2"
    code = main([
        "attack",
        "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.test_path),
        "--lexicon", str(corpus.lexicon_path),
        "--vocab", str(bad_vocab),
        "--seed", "1",
        "--out", str(out),
    ])
    assert code != 0


def test_attack_sample_is_seeded(corpus, trained, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main([
            "attack", "--ckpt", str(trained / "model.npz"),
            "--data", str(corpus.test_path), "--lexicon", str(corpus.lexicon_path),
            "--budget", "25", "--sample", "15", "--seed", "5", "--out", str(out),
        ])
        assert code == 0
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]


def test_profile_defaults(corpus, trained, tmp_path):
    out = tmp_path / "attack3"
    code = main([
        "attack", "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.test_path), "--lexicon", str(corpus.lexicon_path),
        "--profile", "agnews", "--sample", "5", "--seed", "5", "--out", str(out),
    ])
    assert code == 0
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["budget"] == 25
    assert echo["max_len"] is None


def test_config_echo_reproduces_run(corpus, trained, tmp_path):
    first = tmp_path / "first"
    code = main([
        "attack", "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.test_path), "--lexicon", str(corpus.lexicon_path),
        "--budget", "20", "--sample", "10", "--seed", "13", "--out", str(first),
    ])
    assert code == 0
    second = tmp_path / "second"
    code = main([
        "attack", "--config", str(first / "config_echo.json"),
        "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.test_path), "--lexicon", str(corpus.lexicon_path),
        "--seed", "13", "--out", str(second),
    ])
    assert code == 0
    rep1 = (first / "report.json").read_text().replace(str(first), "OUT")
    rep2 = (second / "report.json").read_text().replace(str(second), "OUT")
    assert rep1 == rep2
    assert (first / "per_example.csv").read_bytes() == (second / "per_example.csv").read_bytes()


@pytest.fixture(scope="module")
def advtrained(corpus, trained, tmp_path_factory):
    out = tmp_path_factory.mktemp("adv")
    code = main([
        "advtrain",
        "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.train_path),
        "--test-data", str(corpus.test_path),
        "--lexicon", str(corpus.lexicon_path),
        "--budget", "25",
        "--epochs", "3",
        "--cap", "60",
        "--eval-sample", "40",
        "--lr", "0.002",
        "--batch-size", "32",
        "--seed", "19",
        "--out", str(out),
    ])
    assert code == 0
    return out


def test_advtrain_outputs(advtrained):
    curve = load_curve(advtrained / "curve.csv")
    assert curve.epochs == [0, 1, 2, 3]
    assert (advtrained / "model_advtrained.npz").exists()
    report = load_report(advtrained / "report.json")
    assert report["curve"]["epochs"] == [0, 1, 2, 3]


def test_report_summary(advtrained, trained, corpus, tmp_path, capsys):
    attack_out = tmp_path / "atk"
    main([
        "attack", "--ckpt", str(trained / "model.npz"),
        "--data", str(corpus.test_path), "--lexicon", str(corpus.lexicon_path),
        "--budget", "25", "--sample", "10", "--seed", "5", "--out", str(attack_out),
    ])
    capsys.readouterr()
    code = main([
        "report", str(attack_out / "report.json"), str(attack_out / "report.json"),
        "--curve", str(advtrained / "curve.csv"), "--out", str(tmp_path / "series"),
    ])
    assert code == 0
    printed = capsys.readouterr().out
    assert "% success" in printed
    for name in ("success_rate", "avg_replacement_rate", "clean_accuracy"):
        series = (tmp_path / "series" / f"series_{name}.csv").read_text().splitlines()
        assert len(series) == 5  # header + 4 epochs


def test_report_malformed(tmp_path, capsys):
    bad = tmp_path / "report.json"
    bad.write_text("{not json", encoding="utf-8")
    code = main(["report", str(bad)])
    assert code != 0
    assert "malformed" in capsys.readouterr().err


def test_report_requires_inputs():
    assert main(["report"]) != 0


def test_seed_is_mandatory(corpus, tmp_path, capsys):
    with pytest.raises(SystemExit):
        main([
            "train", "--data", str(corpus.train_path),
            "--emb", str(corpus.embeddings_path), "--out", str(tmp_path / "x"),
        ])
