"""ROC/AUC metrics and the experiment drivers (benchmark, feature ranking,
feature ablation).

AUC is the trapezoidal area under the tie-grouped ROC curve, which equals
the pair-counting statistic P(score_pos > score_neg) + 0.5 P(equal). Rule
scores (SOFA/qSOFA/MEWS at the anchor hour) are ranked by their integer
value with that same half-credit tie convention.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import gold
from .channels import CORE_VITALS
from .cohort import apply_inclusion, bin_hourly, impute
from .ensemble import AverageEnsemble, StackedEnsemble, WeightedEnsemble
from .errors import DomainError
from .features import (
    LabeledDataset,
    TaskSpec,
    build_dataset,
    select_negatives,
    split,
    vital_block_columns,
)
from .models import fit_on_dataset

RULE_SCORES = ("sofa", "qsofa", "mews")
BASE_MODELS = ("logistic", "forest", "boosted", "mlp")
COMBINERS = ("average", "weighted", "stacked")


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


def _check_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if scores.shape != labels.shape:
        raise DomainError("scores and labels differ in length")
    if not np.isfinite(scores).all():
        raise DomainError("non-finite scores")
    if labels.min() == labels.max():
        raise DomainError("AUC undefined: single-class labels")
    return scores, labels


def roc_curve(scores, labels) -> list:
    """Tie-grouped ROC points from (0,0) to (1,1), thresholds descending.

    All rows sharing a score flip to positive together; the (0,0) endpoint
    carries threshold +inf.
    """
    scores, labels = _check_scores_labels(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    points = [RocPoint(np.inf, 0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            tp += int(y[j])
            fp += int(1 - y[j])
            j += 1
        points.append(RocPoint(float(s[i]), tp / n_pos, fp / n_neg))
        i = j
    return points


def auc(scores, labels) -> float:
    """Trapezoidal area under the ROC curve."""
    points = roc_curve(scores, labels)
    area = 0.0
    for a, b in zip(points, points[1:]):
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0
    return area


def bootstrap_auc_ci(scores, labels, n_boot=1000, seed=0, level=0.95):
    """Percentile bootstrap CI for AUC; degenerate resamples are skipped."""
    scores, labels = _check_scores_labels(scores, labels)
    rng = np.random.default_rng(seed)
    n = len(scores)
    stats = []
    for _ in range(n_boot):
        rows = rng.integers(0, n, size=n)
        ys = labels[rows]
        if ys.min() == ys.max():
            continue
        stats.append(auc(scores[rows], ys))
    if not stats:
        return None
    lo = float(np.percentile(stats, 100 * (1 - level) / 2))
    hi = float(np.percentile(stats, 100 * (1 + level) / 2))
    return lo, hi


def derive_seed(master: int, *tags) -> int:
    """Stable per-job seed from the master seed and string tags."""
    text = "|".join([str(int(master)), *map(str, tags)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**31 - 1)


# ---------------------------------------------------------------------------
# cohort preparation


@dataclass
class PreparedEpisode:
    episode: object
    grid: object  # imputed
    labeling: object


@dataclass
class PreparedCohort:
    included: list  # PreparedEpisode, structurally included
    excluded: list  # (episode_id, reason)

    def positives(self, category: str) -> list:
        """(episode, grid, labeling) triples positive for the category and
        passing the 7-hour history criterion."""
        out = []
        for pe in self.included:
            first = pe.labeling.first(category)
            if first is None:
                continue
            verdict = apply_inclusion(pe.episode, pe.grid, first)
            if verdict.included:
                out.append((pe.episode, pe.grid, pe.labeling))
        return out

    def negatives(self) -> list:
        """(episode, grid) pairs with no positive hours in any category."""
        return [
            (pe.episode, pe.grid)
            for pe in self.included
            if pe.labeling.first("sepsis") is None
        ]


def prepare_cohort(episodes, bands=None) -> PreparedCohort:
    """Bin, impute and label every episode; apply the structural inclusion
    criteria (age, unit, observed vitals). History criteria are applied per
    category at dataset-assembly time."""
    bands = bands or gold.default_bands()
    included, excluded = [], []
    for ep in episodes:
        grid = bin_hourly(ep)
        verdict = apply_inclusion(ep, grid, None)
        if not verdict.included:
            excluded.append((ep.episode_id, verdict.reason))
            continue
        imputed = impute(grid)
        labeling = gold.label_positive_hours(ep, imputed, bands)
        included.append(PreparedEpisode(ep, imputed, labeling))
    return PreparedCohort(included, excluded)


# ---------------------------------------------------------------------------
# benchmark


@dataclass
class CellResult:
    task: str
    category: str
    n_rows: int = 0
    n_positive: int = 0
    sizes: dict = field(default_factory=dict)  # split -> row count
    model_auc: dict = field(default_factory=dict)
    model_ci: dict = field(default_factory=dict)
    rule_auc: dict = field(default_factory=dict)
    rule_ci: dict = field(default_factory=dict)
    skipped: str | None = None  # reason when the cell is n/a
    curves: dict = field(default_factory=dict)  # name -> (scores, labels); not serialized

    def to_json_dict(self):
        return {
            "task": self.task,
            "category": self.category,
            "n_rows": self.n_rows,
            "n_positive": self.n_positive,
            "sizes": self.sizes,
            "model_auc": self.model_auc,
            "model_ci": self.model_ci,
            "rule_auc": self.rule_auc,
            "rule_ci": self.rule_ci,
            "skipped": self.skipped,
        }


@dataclass
class ExperimentReport:
    seed: int
    config_digest: str
    cells: list
    excluded: list = field(default_factory=list)

    def cell(self, task: str, category: str) -> CellResult:
        for c in self.cells:
            if c.task == task and c.category == category:
                return c
        raise KeyError((task, category))

    def to_json_dict(self):
        return {
            "format": "sepsiskit-report",
            "version": 1,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "excluded": [list(e) for e in self.excluded],
            "cells": [c.to_json_dict() for c in self.cells],
        }


def _dataset_for_cell(cohort: PreparedCohort, spec: TaskSpec, run_cfg, seed: int):
    positives = cohort.positives(spec.category)
    if not positives:
        raise DomainError(f"degenerate dataset: no {spec.category} positives")
    pool = cohort.negatives()
    negatives = select_negatives(
        pool, run_cfg.negatives_count, derive_seed(seed, "negatives", spec.task, spec.category)
    )
    ds = build_dataset(
        positives,
        negatives,
        spec,
        derive_seed(seed, "dataset", spec.task, spec.category),
        negative_anchors_per_episode=run_cfg.negative_anchors_per_episode,
    )
    return split(ds, derive_seed(seed, "split", spec.task, spec.category))


def _rule_scores_for_rows(cohort, dataset, mask, bands):
    grids = {pe.episode.episode_id: pe.grid for pe in cohort.included}
    rows = np.nonzero(mask)[0]
    out = {name: np.zeros(len(rows)) for name in RULE_SCORES}
    scorers = {"sofa": gold.sofa_score, "qsofa": gold.qsofa_score, "mews": gold.mews_score}
    for k, i in enumerate(rows):
        grid = grids[dataset.episode_ids[i]]
        values = grid.hour_values(int(dataset.anchor_hours[i]))
        for name in RULE_SCORES:
            out[name][k] = scorers[name](values, bands)
    return out


def evaluate_cell(cohort, spec: TaskSpec, run_cfg, seed: int, bands=None) -> CellResult:
    """Fit all models and combiners for one (task, category) and score the
    test split. Degenerate datasets yield a skipped cell, not an error."""
    bands = bands or gold.default_bands()
    cell = CellResult(task=spec.task, category=spec.category)
    try:
        dataset = _dataset_for_cell(cohort, spec, run_cfg, seed)
    except DomainError as exc:
        cell.skipped = str(exc)
        return cell
    cell.n_rows = len(dataset)
    cell.n_positive = int(dataset.y.sum())
    cell.sizes = {p: int(dataset.mask(p).sum()) for p in ("train", "val", "test")}
    test_mask = dataset.mask("test")
    X_test, y_test = dataset.part("test")
    if y_test.min() == y_test.max() if len(y_test) else True:
        cell.skipped = "single-class test split"
        return cell

    boot_seed = derive_seed(seed, "bootstrap", spec.task, spec.category)

    def record(name, scores):
        cell.model_auc[name] = auc(scores, y_test)
        if run_cfg.bootstrap_samples:
            ci = bootstrap_auc_ci(
                scores, y_test, n_boot=run_cfg.bootstrap_samples, seed=boot_seed
            )
            if ci is not None:
                cell.model_ci[name] = [ci[0], ci[1]]
        cell.curves[name] = (scores, y_test)

    base_models = {}
    for name in BASE_MODELS:
        model = fit_on_dataset(
            name,
            dataset,
            run_cfg.hyperparameters_for(name, spec.task, spec.category),
            seed=derive_seed(seed, "model", name, spec.task, spec.category),
        )
        base_models[name] = model
        record(name, model.predict_proba(X_test))

    combiner_bases = {m: base_models[m] for m in ("forest", "boosted", "mlp")}
    record("average", AverageEnsemble(combiner_bases).predict_proba(X_test))

    X_val, y_val = dataset.part("val")
    weighted = WeightedEnsemble(combiner_bases)
    if len(y_val) and y_val.min() != y_val.max():
        weighted.fit_weights(X_val, y_val)
        record("weighted", weighted.predict_proba(X_test))
    else:
        cell.model_auc["weighted"] = None

    stacked = StackedEnsemble(
        base_hyperparameters={
            m: run_cfg.hyperparameters_for(m, spec.task, spec.category)
            for m in combiner_bases
        },
        meta_hyperparameters=run_cfg.meta_hyperparameters,
        seed=derive_seed(seed, "stacked", spec.task, spec.category),
        k_folds=run_cfg.k_folds,
        meta_inputs=run_cfg.meta_inputs,
    )
    stacked.fit(dataset)
    record("stacked", stacked.predict_proba(X_test))

    rule_scores = _rule_scores_for_rows(cohort, dataset, test_mask, bands)
    for name in RULE_SCORES:
        scores = rule_scores[name]
        cell.rule_auc[name] = auc(scores, y_test)
        if run_cfg.bootstrap_samples:
            ci = bootstrap_auc_ci(
                scores, y_test, n_boot=run_cfg.bootstrap_samples, seed=boot_seed
            )
            if ci is not None:
                cell.rule_ci[name] = [ci[0], ci[1]]
        cell.curves[name] = (scores, y_test)
    return cell


def run_benchmark(cohort: PreparedCohort, run_cfg, seed: int, bands=None) -> ExperimentReport:
    """The full model and rule-score comparison over every (task, category)."""
    cells = []
    for task in run_cfg.tasks:
        for category in run_cfg.categories:
            spec = TaskSpec.for_task(task, category)
            cells.append(evaluate_cell(cohort, spec, run_cfg, seed, bands))
    return ExperimentReport(
        seed=seed,
        config_digest=run_cfg.digest,
        cells=cells,
        excluded=cohort.excluded,
    )


# ---------------------------------------------------------------------------
# feature ranking and ablation


def _auc_for_columns(dataset, columns, model_type, hyper, seed):
    sub = dataset.select_columns(columns)
    model = fit_on_dataset(model_type, sub, hyper, seed=seed)
    X_test, y_test = sub.part("test")
    return auc(model.predict_proba(X_test), y_test)


def rank_features(cohort, spec: TaskSpec, run_cfg, seed: int):
    """Test AUC of each vital's 5-block alone, in the fixed vital order
    (heart rate, SpO2, respiratory rate, systolic BP, diastolic BP,
    temperature). Returns [(vital, auc)] with 6 entries."""
    dataset = _dataset_for_cell(cohort, spec, run_cfg, seed)
    model_type = run_cfg.rank_model
    hyper = run_cfg.hyperparameters_for(model_type, spec.task, spec.category)
    out = []
    for vital in CORE_VITALS:
        cell_seed = derive_seed(seed, "rank", vital, spec.task, spec.category)
        out.append(
            (vital, _auc_for_columns(dataset, vital_block_columns(vital), model_type, hyper, cell_seed))
        )
    return out


def ablate_features(cohort, spec: TaskSpec, order, run_cfg, seed: int):
    """Test AUC over growing prefixes of `order` (a permutation of the six
    vitals); k = 1..6 blocks of 5 features each. Returns [(k, vitals, auc)]."""
    if sorted(order) != sorted(CORE_VITALS):
        raise DomainError(f"order must be a permutation of {CORE_VITALS}")
    dataset = _dataset_for_cell(cohort, spec, run_cfg, seed)
    model_type = run_cfg.rank_model
    hyper = run_cfg.hyperparameters_for(model_type, spec.task, spec.category)
    out = []
    for k in range(1, len(order) + 1):
        columns = []
        for vital in order[:k]:
            columns.extend(vital_block_columns(vital))
        cell_seed = derive_seed(seed, "ablate", k, spec.task, spec.category)
        out.append((k, tuple(order[:k]), _auc_for_columns(dataset, columns, model_type, hyper, cell_seed)))
    return out


# ---------------------------------------------------------------------------
# report output


def write_report(report: ExperimentReport, directory) -> None:
    """Emit report.json (machine surface), report.txt (human table) and one
    ROC-points CSV per model per cell."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_json_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(directory, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_report_text(report))
    roc_dir = os.path.join(directory, "roc")
    os.makedirs(roc_dir, exist_ok=True)
    for cell in report.cells:
        for name, (scores, labels) in cell.curves.items():
            path = os.path.join(roc_dir, f"{cell.task}_{cell.category}_{name}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["threshold", "tpr", "fpr"])
                for pt in roc_curve(scores, labels):
                    writer.writerow([repr(pt.threshold), repr(pt.tpr), repr(pt.fpr)])


def format_report_text(report: ExperimentReport) -> str:
    names = list(BASE_MODELS) + list(COMBINERS) + list(RULE_SCORES)
    lines = [
        f"benchmark seed={report.seed} config={report.config_digest[:12]}",
        "",
        "task        category        " + "  ".join(f"{n:>8}" for n in names),
    ]
    for cell in report.cells:
        if cell.skipped:
            lines.append(f"{cell.task:<11} {cell.category:<15} n/a ({cell.skipped})")
            continue
        vals = []
        for n in names:
            v = cell.model_auc.get(n, cell.rule_auc.get(n))
            vals.append(f"{v:8.3f}" if v is not None else f"{'n/a':>8}")
        lines.append(f"{cell.task:<11} {cell.category:<15} " + "  ".join(vals))
    lines.append("")
    return "\n".join(lines) + "\n"
