"""Command-line entry point: train, attack, advtrain, report subcommands.

Every run validates its input paths up front, writes a ``config_echo.json``
capturing the effective parameters into the output directory, and exits
nonzero (with a message on stderr) without partial outputs on configuration
errors. Re-running a subcommand with the same echo file and checkpoint
reproduces the outputs bit for bit; nothing written contains timestamps.

Dataset profiles bundle the usual defaults (``imdb``: max 600 tokens, budget
50; ``agnews``: unlimited length, budget 25); explicit flags win over the
profile. ``--workers`` falls back to the ``BA_WORKERS`` environment variable,
then to the machine's core count, and affects throughput only, never results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .attack import AttackConfig, SynonymLexicon
from .corpus import Vocabulary, build_vocab, load_dataset
from .embeddings import load_embeddings
from .harness import emit_report, load_curve, load_report, write_traces
from .model import TrainConfig, load_checkpoint, save_checkpoint, train

PROFILES = {
    "imdb": {"max_len": 600, "budget": 50},
    "agnews": {"max_len": None, "budget": 25},
}


def _workers_default() -> int:
    env = os.environ.get("BA_WORKERS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _require(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _profile_value(args, name: str, profile_key: str):
    value = getattr(args, name)
    if value is not None:
        return value
    if args.profile:
        return PROFILES[args.profile][profile_key]
    return None


def _write_echo(out_dir: Path, echo: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_echo.json").write_text(
        json.dumps(echo, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_eval_dataset(path, fmt, max_len, label_names, split):
    return load_dataset(path, format=fmt, max_len=max_len,
                        labels=list(label_names), split=split)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    data = _require(args.data, "dataset")
    emb = _require(args.emb, "embedding file")
    test = _require(args.test_data, "test dataset") if args.test_data else None
    out = Path(args.out)

    max_len = _profile_value(args, "max_len", "max_len")
    train_set = load_dataset(data, format=args.format, max_len=max_len, split="train")
    test_set = (
        _load_eval_dataset(test, args.format, max_len, train_set.label_names, "test")
        if test
        else None
    )
    vocab = build_vocab(train_set, min_freq=args.min_freq)
    table = load_embeddings(emb, vocab, args.emb_dim)

    config = TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
        optimizer=args.optimizer, seed=args.seed, hidden=args.hidden,
        emb_dim=args.emb_dim,
    )
    clf, metrics = train(train_set, config, vocab, table, kind=args.model, test_set=test_set)
    clf.label_names = train_set.label_names

    echo = {
        "subcommand": "train", "data": str(data), "test_data": str(test) if test else None,
        "format": args.format, "emb": str(emb), "model": args.model,
        "profile": args.profile, "max_len": max_len, "min_freq": args.min_freq,
        "epochs": args.epochs, "batch_size": args.batch_size, "lr": args.lr,
        "optimizer": args.optimizer, "hidden": args.hidden, "emb_dim": args.emb_dim,
        "seed": args.seed, "out": str(out),
    }
    _write_echo(out, echo)
    save_checkpoint(clf, out / "model.npz")
    vocab.save(out / "vocab.txt")
    (out / "metrics.json").write_text(
        json.dumps({"per_epoch": metrics, "embedding_coverage": table.coverage},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    for row in metrics:
        line = f"epoch {row['epoch']}: loss {row['loss']:.4f} train_acc {row['train_accuracy']:.4f}"
        if "test_accuracy" in row:
            line += f" test_acc {row['test_accuracy']:.4f}"
        print(line)
    if metrics and "test_accuracy" in metrics[-1]:
        print(f"clean test accuracy: {metrics[-1]['test_accuracy']:.4f}")
    print(f"checkpoint written to {out / 'model.npz'}")
    return 0


def cmd_attack(args) -> int:
    ckpt = _require(args.ckpt, "checkpoint")
    data = _require(args.data, "dataset")
    lex_path = _require(args.lexicon, "lexicon")
    out = Path(args.out)

    clf = load_checkpoint(ckpt)
    if args.vocab:
        supplied = Vocabulary.load(_require(args.vocab, "vocabulary"))
        if supplied.sha256() != clf.vocab.sha256():
            raise ValueError("vocabulary hash does not match the checkpoint")
    label_names = getattr(clf, "label_names", ()) or ()
    max_len = _profile_value(args, "max_len", "max_len")
    if label_names:
        test_set = _load_eval_dataset(data, args.format, max_len, label_names, "test")
    else:
        test_set = load_dataset(data, format=args.format, max_len=max_len, split="test")
    lexicon = SynonymLexicon.from_tsv(lex_path)

    budget = _profile_value(args, "budget", "budget") or 50
    config = AttackConfig(max_replacements=budget, trace=args.trace)
    metrics, rows, results = harness.evaluate_attack(
        clf, test_set, lexicon, config,
        sample_limit=args.sample, seed=args.seed, workers=args.workers,
        method=args.method,
    )

    echo = {
        "subcommand": "attack", "ckpt": str(ckpt), "data": str(data),
        "format": args.format, "lexicon": str(lex_path), "profile": args.profile,
        "max_len": max_len, "budget": budget, "sample": args.sample,
        "method": args.method, "trace": args.trace, "seed": args.seed,
        "out": str(out),
    }
    _write_echo(out, echo)
    # the report identifies the computation, not the destination directory
    emit_report(metrics, None, rows, out,
                config_echo={k: v for k, v in echo.items() if k != "out"})
    if args.trace:
        write_traces(results, out / "traces")
    print(
        f"attacked {metrics.n_attacked} correctly classified examples: "
        f"success rate {metrics.success_rate:.4f}, "
        f"avg replacement rate {metrics.avg_replacement_rate:.4f}"
    )
    return 0


def cmd_advtrain(args) -> int:
    ckpt = _require(args.ckpt, "checkpoint")
    data = _require(args.data, "train dataset")
    test = _require(args.test_data, "test dataset")
    lex_path = _require(args.lexicon, "lexicon")
    out = Path(args.out)

    clf = load_checkpoint(ckpt)
    label_names = getattr(clf, "label_names", ()) or ()
    max_len = _profile_value(args, "max_len", "max_len")
    if label_names:
        train_set = _load_eval_dataset(data, args.format, max_len, label_names, "train")
        test_set = _load_eval_dataset(test, args.format, max_len, label_names, "test")
    else:
        train_set = load_dataset(data, format=args.format, max_len=max_len, split="train")
        test_set = _load_eval_dataset(test, args.format, max_len, train_set.label_names, "test")
    lexicon = SynonymLexicon.from_tsv(lex_path)

    budget = _profile_value(args, "budget", "budget") or 50
    attack_config = AttackConfig(max_replacements=budget)
    train_config = TrainConfig(
        epochs=1, batch_size=args.batch_size, lr=args.lr, seed=args.seed,
        hidden=clf.hidden, emb_dim=clf.embeddings.dim,
    )
    clf, curve = harness.adversarial_train(
        clf, train_set, test_set, lexicon, attack_config, train_config,
        epochs=args.epochs, per_epoch_attack_cap=args.cap,
        eval_sample=args.eval_sample, seed=args.seed, workers=args.workers,
    )

    echo = {
        "subcommand": "advtrain", "ckpt": str(ckpt), "data": str(data),
        "test_data": str(test), "format": args.format, "lexicon": str(lex_path),
        "profile": args.profile, "max_len": max_len, "budget": budget,
        "epochs": args.epochs, "cap": args.cap, "eval_sample": args.eval_sample,
        "batch_size": args.batch_size, "lr": args.lr, "seed": args.seed,
        "out": str(out),
    }
    _write_echo(out, echo)
    clf.label_names = tuple(label_names) or train_set.label_names
    save_checkpoint(clf, out / "model_advtrained.npz")
    emit_report(None, curve, None, out,
                config_echo={k: v for k, v in echo.items() if k != "out"})
    for epoch, succ, repl, acc in curve.rows():
        print(f"epoch {epoch}: success {succ:.4f} replacement {repl:.4f} clean_acc {acc:.4f}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out) if args.out else None
    if not args.inputs and not args.curve:
        raise ValueError("nothing to report: pass report files and/or --curve")
    reports = []
    for path in args.inputs:
        p = _require(path, "report")
        try:
            data = load_report(p)
            agg = data["aggregates"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed report {p}: {exc}") from exc
        reports.append((p, data, agg))

    if reports:
        name_w = max(len(str(p)) for p, _, _ in reports)
        header = f"{'report':<{name_w}}  {'% success':>9}  {'% replaced':>10}  {'attacked':>8}"
        print(header)
        print("-" * len(header))
        for p, data, agg in reports:
            if agg is None:
                print(f"{str(p):<{name_w}}  {'-':>9}  {'-':>10}  {'-':>8}")
                continue
            print(
                f"{str(p):<{name_w}}  {100 * agg['success_rate']:>9.2f}  "
                f"{100 * agg['avg_replacement_rate']:>10.2f}  {agg['n_attacked']:>8}"
            )

    if args.curve:
        curve_path = _require(args.curve, "curve file")
        curve = load_curve(curve_path)
        if out is None:
            raise ValueError("--out is required when emitting curve series")
        out.mkdir(parents=True, exist_ok=True)
        series = {
            "success_rate": curve.success_rate,
            "avg_replacement_rate": curve.avg_replacement_rate,
            "clean_accuracy": curve.clean_accuracy,
        }
        for name, values in series.items():
            lines = ["epoch," + name]
            lines += [f"{e},{v!r}" for e, v in zip(curve.epochs, values)]
            (out / f"series_{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"curve series written to {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sub, *, needs_format=True):
    sub.add_argument("--seed", type=int, required=True, help="random seed (required)")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--config", help="JSON file of defaults (e.g. a config_echo.json)")
    if needs_format:
        sub.add_argument("--format", choices=("dir", "tsv", "csv"), default="tsv")
        sub.add_argument("--profile", choices=tuple(PROFILES), default=None)
        sub.add_argument("--max-len", dest="max_len", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundary-attack",
        description="Train small text classifiers and attack them via decision-boundary geometry.",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("train", help="train a classifier on a labelled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--test-data", dest="test_data", default=None)
    p.add_argument("--emb", required=True, help="embedding text file")
    p.add_argument("--model", choices=("cnn", "rnn", "bag"), default="cnn")
    p.add_argument("--min-freq", dest="min_freq", type=int, default=1)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--emb-dim", dest="emb_dim", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("attack", help="attack a trained checkpoint over a test set")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--vocab", default=None, help="optional vocabulary file to cross-check")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--method", choices=("geometry", "baseline"), default="geometry")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--workers", type=int, default=_workers_default())
    _add_common(p)
    p.set_defaults(func=cmd_attack)

    p = subs.add_parser("advtrain", help="adversarially fine-tune a pretrained checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test-data", dest="test_data", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--cap", type=int, default=500)
    p.add_argument("--eval-sample", dest="eval_sample", type=int, default=200)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--workers", type=int, default=_workers_default())
    _add_common(p)
    p.set_defaults(func=cmd_advtrain)

    p = subs.add_parser("report", help="summarize reports and emit plot series")
    p.add_argument("inputs", nargs="*", help="report.json files to summarize")
    p.add_argument("--curve", default=None, help="curve.csv from advtrain")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config_file(argv, parser):
    """Let --config supply defaults; explicit flags still win."""
    if argv is None:
        argv = sys.argv[1:]
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        payload = json.loads(Path(known.config).read_text(encoding="utf-8"))
        payload.pop("subcommand", None)
        payload.pop("out", None)
        for action in parser._subparsers._group_actions[0].choices.values():
            valid = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in payload.items() if k in valid})
    return argv


def main(argv=None) -> int:
    parser = build_parser()
    argv = _apply_config_file(argv, parser)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
