"""Attack evaluation over datasets, adversarial training, report emission.

Metrics follow the evaluation protocol of the attack: the success rate is
computed over correctly classified examples only (misclassified originals are
skipped and never enter the denominator), and the average replacement rate is
taken over successful attacks. Attacking distinct examples is embarrassingly
parallel; results are always ordered by the examples' dataset order so a
worker pool cannot change any output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .attack import (
    SUCCESS,
    EXHAUSTED,
    BUDGET_EXCEEDED,
    AttackConfig,
    AttackResult,
    SynonymLexicon,
    attack,
    greedy_probability_baseline,
)
from .corpus import Dataset, Example
from .model import (
    AdamState,
    Classifier,
    SgdState,
    TrainConfig,
    accuracy,
    predict_batch,
    train,
)

log = logging.getLogger(__name__)


@dataclass
class AttackMetrics:
    success_rate: float
    avg_replacement_rate: float
    n_attacked: int
    n_skipped_misclassified: int
    n_succeeded: int
    n_exhausted: int
    n_budget_exceeded: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class RobustnessCurve:
    """Per-epoch robustness series; row 0 is the model before fine-tuning."""

    epochs: list[int]
    success_rate: list[float]
    avg_replacement_rate: list[float]
    clean_accuracy: list[float]

    def rows(self):
        return zip(self.epochs, self.success_rate, self.avg_replacement_rate, self.clean_accuracy)


@dataclass
class PerExampleRow:
    example_id: str
    status: str
    n_tokens: int
    n_replacements: int
    replacement_rate: float
    initial_distance: float | None
    final_distance: float | None
    initial_true_prob: float
    final_true_prob: float

    @classmethod
    def from_result(cls, res: AttackResult) -> "PerExampleRow":
        return cls(
            example_id=res.example.id,
            status=res.status,
            n_tokens=len(res.example.tokens),
            n_replacements=len(res.replacements),
            replacement_rate=res.replacement_rate,
            initial_distance=res.initial_distance,
            final_distance=res.final_distance,
            initial_true_prob=res.initial_true_prob,
            final_true_prob=res.final_true_prob,
        )


def _compute_metrics(results, n_skipped) -> AttackMetrics:
    n_succ = sum(1 for r in results if r.status == SUCCESS)
    rates = [r.replacement_rate for r in results if r.status == SUCCESS]
    return AttackMetrics(
        success_rate=n_succ / len(results) if results else 0.0,
        avg_replacement_rate=float(np.mean(rates)) if rates else 0.0,
        n_attacked=len(results),
        n_skipped_misclassified=n_skipped,
        n_succeeded=n_succ,
        n_exhausted=sum(1 for r in results if r.status == EXHAUSTED),
        n_budget_exceeded=sum(1 for r in results if r.status == BUDGET_EXCEEDED),
    )


def _attack_many(clf, examples, lexicon, config, workers, method):
    fn = attack if method == "geometry" else greedy_probability_baseline
    if workers <= 1:
        return [fn(clf, ex, lexicon, config) for ex in examples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ex: fn(clf, ex, lexicon, config), examples))


def correctly_classified(clf: Classifier, dataset: Dataset) -> list[Example]:
    preds = predict_batch(clf, dataset.examples)
    return [ex for ex, p in zip(dataset.examples, preds) if p == ex.label]


def evaluate_attack(
    clf: Classifier,
    test_set: Dataset,
    lexicon: SynonymLexicon,
    config: AttackConfig,
    sample_limit: int | None = None,
    seed: int = 0,
    workers: int = 1,
    method: str = "geometry",
):
    """Attack the correctly classified examples of ``test_set``.

    ``sample_limit`` keeps a seeded random subset of the eligible examples
    (dataset order preserved). Returns ``(AttackMetrics, per-example rows,
    AttackResults)``; deterministic for fixed seed, checkpoint, and inputs.
    """
    eligible = correctly_classified(clf, test_set)
    n_skipped = len(test_set.examples) - len(eligible)
    if not eligible:
        raise ValueError("no correctly classified examples to attack")
    if sample_limit is not None and sample_limit < len(eligible):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA77AC]))
        keep = sorted(rng.choice(len(eligible), size=sample_limit, replace=False))
        eligible = [eligible[i] for i in keep]
    results = _attack_many(clf, eligible, lexicon, config, workers, method)
    rows = [PerExampleRow.from_result(r) for r in results]
    return _compute_metrics(results, n_skipped), rows, results


def adversarial_train(
    clf: Classifier,
    train_set: Dataset,
    test_set: Dataset,
    lexicon: SynonymLexicon,
    attack_config: AttackConfig,
    train_config: TrainConfig,
    epochs: int,
    per_epoch_attack_cap: int = 500,
    eval_sample: int | None = 200,
    seed: int = 0,
    workers: int = 1,
):
    """Fine-tune a pretrained classifier on freshly generated adversarial examples.

    Each epoch attacks up to ``per_epoch_attack_cap`` correctly classified
    training examples, adds the successful perturbations (with their original
    labels) to that epoch's training data only, fine-tunes for one pass, and
    measures (attack success, replacement rate, clean accuracy) on a fixed
    held-out evaluation subset of the test set. Row 0 of the returned curve is
    the model as given, before any fine-tuning.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xADF]))
    eval_ids = None
    if eval_sample is not None and eval_sample < len(test_set.examples):
        keep = sorted(rng.choice(len(test_set.examples), size=eval_sample, replace=False))
        eval_ids = keep
    eval_set = Dataset(
        [test_set.examples[i] for i in eval_ids] if eval_ids is not None else list(test_set.examples),
        test_set.num_classes,
        split="attack-eval",
        label_names=test_set.label_names,
    )

    def measure():
        metrics, _, _ = evaluate_attack(
            clf, eval_set, lexicon, attack_config, seed=seed, workers=workers
        )
        return metrics

    curve = RobustnessCurve([], [], [], [])

    def record(epoch, metrics):
        curve.epochs.append(epoch)
        curve.success_rate.append(metrics.success_rate)
        curve.avg_replacement_rate.append(metrics.avg_replacement_rate)
        curve.clean_accuracy.append(accuracy(clf, test_set))

    record(0, measure())
    optimizer_state = (
        AdamState(train_config.lr)
        if train_config.optimizer == "adam"
        else SgdState(train_config.lr)
    )
    for epoch in range(1, epochs + 1):
        eligible = correctly_classified(clf, train_set)
        if per_epoch_attack_cap < len(eligible):
            keep = sorted(
                rng.choice(len(eligible), size=per_epoch_attack_cap, replace=False)
            )
            eligible = [eligible[i] for i in keep]
        results = _attack_many(clf, eligible, lexicon, attack_config, workers, "geometry")
        adversarial = [
            Example(r.example.tokens, r.example.label, f"{r.example.id}#adv{epoch}")
            for r in results
            if r.status == SUCCESS
        ]
        if not adversarial:
            log.warning("epoch %d: attack produced no adversarial examples", epoch)
        augmented = Dataset(
            list(train_set.examples) + adversarial,
            train_set.num_classes,
            split="adv-train",
            label_names=train_set.label_names,
        )
        epoch_config = TrainConfig(
            epochs=1,
            batch_size=train_config.batch_size,
            lr=train_config.lr,
            optimizer=train_config.optimizer,
            seed=train_config.seed + epoch,
            hidden=train_config.hidden,
            emb_dim=train_config.emb_dim,
        )
        _, _metrics = train(
            augmented, epoch_config, classifier=clf, optimizer_state=optimizer_state
        )
        record(epoch, measure())
        log.info(
            "adversarial epoch %d: %d adv examples, success %.3f, clean acc %.3f",
            epoch, len(adversarial), curve.success_rate[-1], curve.clean_accuracy[-1],
        )
    return clf, curve


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

PER_EXAMPLE_COLUMNS = [
    "example_id", "status", "n_tokens", "n_replacements", "replacement_rate",
    "initial_distance", "final_distance", "initial_true_prob", "final_true_prob",
]


def run_id_for(config_echo: dict) -> str:
    """Short content-derived run identifier (no timestamps: reruns match)."""
    blob = json.dumps(config_echo, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def emit_report(
    metrics: AttackMetrics | None,
    curve: RobustnessCurve | None,
    rows: list[PerExampleRow] | None,
    out_dir,
    config_echo: dict | None = None,
    formats=("json", "csv"),
) -> dict:
    """Write ``report.json`` / ``per_example.csv`` (and ``curve.csv``).

    The JSON report nests the aggregates, a config echo, and a content-derived
    run id; the CSV holds one row per attacked example. Returns the mapping of
    artifact name to path. Unwritable paths raise OSError.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_echo = config_echo or {}
    written = {}

    if "json" in formats:
        payload = {
            "run_id": run_id_for(config_echo),
            "config": config_echo,
            "aggregates": metrics.as_dict() if metrics else None,
            "curve": (
                {
                    "epochs": curve.epochs,
                    "success_rate": curve.success_rate,
                    "avg_replacement_rate": curve.avg_replacement_rate,
                    "clean_accuracy": curve.clean_accuracy,
                }
                if curve
                else None
            ),
        }
        report_path = out_dir / "report.json"
        report_path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written["report"] = report_path

    if "csv" in formats and rows is not None:
        csv_path = out_dir / "per_example.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(PER_EXAMPLE_COLUMNS)
            for row in rows:
                writer.writerow(
                    [
                        row.example_id, row.status, row.n_tokens, row.n_replacements,
                        repr(row.replacement_rate),
                        "" if row.initial_distance is None else repr(row.initial_distance),
                        "" if row.final_distance is None else repr(row.final_distance),
                        repr(row.initial_true_prob), repr(row.final_true_prob),
                    ]
                )
        written["per_example"] = csv_path

    if curve is not None:
        curve_path = out_dir / "curve.csv"
        with curve_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "success_rate", "avg_replacement_rate", "clean_accuracy"])
            for epoch, succ, repl, acc in curve.rows():
                writer.writerow([epoch, repr(succ), repr(repl), repr(acc)])
        written["curve"] = curve_path
    return written


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_curve(path) -> RobustnessCurve:
    with Path(path).open(encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        epochs, succ, repl, acc = [], [], [], []
        for row in reader:
            epochs.append(int(row["epoch"]))
            succ.append(float(row["success_rate"]))
            repl.append(float(row["avg_replacement_rate"]))
            acc.append(float(row["clean_accuracy"]))
    return RobustnessCurve(epochs, succ, repl, acc)


def write_traces(results, out_dir) -> Path:
    """One structured trace file per example: iteration, swap, projection,
    signed distance and true-class probability before/after."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for res in results:
        lines = [
            "iter\tposition\tword\tsynonym\tz_max\tdistance_before\t"
            "distance_after\ttrue_prob_before\ttrue_prob_after"
        ]
        for s in res.trace:
            lines.append(
                f"{s.iteration}\t{s.position}\t{s.word}\t{s.synonym or '-'}\t"
                f"{'' if s.score is None else repr(s.score)}\t"
                f"{'' if s.distance_before is None else repr(s.distance_before)}\t"
                f"{'' if s.distance_after is None else repr(s.distance_after)}\t"
                f"{repr(s.true_prob_before)}\t{repr(s.true_prob_after)}"
            )
        safe_id = res.example.id.replace("/", "_")
        (out_dir / f"{safe_id}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_dir
