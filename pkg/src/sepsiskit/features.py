"""30-element feature vectors and labeled dataset assembly.

Each of the six core vitals contributes a 5-block anchored at hour t:
(v_t, v_{t-1}, v_{t-2}, v_t - v_{t-1}, v_{t-1} - v_{t-2}), concatenated
vital-major in the fixed core order. Detection anchors at the positive
hour; prediction anchors `lookahead` hours earlier.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import CHANNEL_INDEX, CORE_VITALS
from .cohort import Episode, HourlyGrid
from .errors import DomainError
from .gold import HourLabeling

N_FEATURES = 5 * len(CORE_VITALS)
FEATURE_NAMES = tuple(f"f{i:02d}" for i in range(N_FEATURES))
TASKS = {"detection": 0, "prediction": 4}

SPLIT_NAMES = ("train", "val", "test")
SPLIT_FRACTIONS = (0.7, 0.1)  # train, val; test is the remainder


@dataclass(frozen=True)
class TaskSpec:
    category: str
    lookahead_hours: int = 0

    def __post_init__(self):
        if self.lookahead_hours < 0:
            raise DomainError("lookahead_hours must be >= 0")

    @property
    def task(self) -> str:
        return "prediction" if self.lookahead_hours else "detection"

    @classmethod
    def for_task(cls, task: str, category: str) -> "TaskSpec":
        if task not in TASKS:
            raise DomainError(f"unknown task {task!r}")
        return cls(category=category, lookahead_hours=TASKS[task])


@dataclass(frozen=True)
class FeatureVector:
    episode_id: str
    anchor_hour: int
    values: np.ndarray  # shape (30,)


@dataclass
class LabeledDataset:
    task: str
    category: str
    X: np.ndarray  # (n, 30)
    y: np.ndarray  # (n,) int64 in {0, 1}
    episode_ids: list
    anchor_hours: np.ndarray  # (n,) int64
    split: np.ndarray  # (n,) unicode, '' until split() assigns
    seed: int | None = None
    skipped_positive_anchors: int = 0
    skipped_negative_episodes: int = 0
    feature_columns: tuple = field(default=FEATURE_NAMES)

    def __len__(self) -> int:
        return self.X.shape[0]

    def mask(self, part: str) -> np.ndarray:
        if part not in SPLIT_NAMES:
            raise DomainError(f"unknown split {part!r}")
        return self.split == part

    def part(self, part: str):
        m = self.mask(part)
        return self.X[m], self.y[m]

    def select_columns(self, columns) -> "LabeledDataset":
        """Dataset restricted to the given feature columns (for ranking/ablation)."""
        idx = [FEATURE_NAMES.index(c) for c in columns]
        return replace(
            self, X=self.X[:, idx].copy(), feature_columns=tuple(columns)
        )


def vital_block_columns(vital: str) -> tuple:
    """The five feature-column names contributed by one core vital."""
    base = 5 * CORE_VITALS.index(vital)
    return FEATURE_NAMES[base : base + 5]


def build_feature_vector(grid: HourlyGrid, anchor: int) -> FeatureVector:
    """Assemble the 30-vector anchored at `anchor` from an imputed grid.

    Requires two preceding hours: the trained models never see a stay's
    first or second hour.
    """
    if anchor < 2:
        raise DomainError(f"insufficient history: anchor {anchor} < 2")
    if anchor >= grid.hours:
        raise DomainError(f"anchor {anchor} beyond grid ({grid.hours} hours)")
    values = np.empty(N_FEATURES)
    for k, vital in enumerate(CORE_VITALS):
        col = grid.cells[:, CHANNEL_INDEX[vital]]
        vt, v1, v2 = col[anchor], col[anchor - 1], col[anchor - 2]
        values[5 * k : 5 * k + 5] = (vt, v1, v2, vt - v1, v1 - v2)
    if not np.isfinite(values).all():
        raise DomainError(
            f"non-finite feature values at anchor {anchor} of {grid.episode_id}"
        )
    return FeatureVector(grid.episode_id, anchor, values)


def build_dataset(
    positives,
    negatives,
    spec: TaskSpec,
    seed: int,
    negative_anchors_per_episode: int = 1,
) -> LabeledDataset:
    """Assemble a labeled dataset for one (task, category).

    positives: iterable of (Episode, HourlyGrid, HourLabeling); one positive
    row per positive hour h anchored at h - lookahead (anchors below hour 2
    are skipped and counted). negatives: iterable of (Episode, HourlyGrid);
    anchors chosen uniformly at random (seeded) among hours >= 2.
    """
    rows, labels, eids, anchors = [], [], [], []
    skipped_pos = 0
    for episode, grid, labeling in positives:
        if not isinstance(labeling, HourLabeling):
            raise DomainError("positives must carry an HourLabeling")
        seen = set()
        for h in sorted(labeling.hours(spec.category)):
            a = h - spec.lookahead_hours
            if a < 2:
                skipped_pos += 1
                continue
            if a >= grid.hours or a in seen:
                continue
            seen.add(a)
            fv = build_feature_vector(grid, a)
            rows.append(fv.values)
            labels.append(1)
            eids.append(episode.episode_id)
            anchors.append(a)
    rng = np.random.default_rng(seed)
    skipped_neg = 0
    for episode, grid in negatives:
        eligible = grid.hours - 2
        if eligible < 1:
            skipped_neg += 1
            continue
        k = min(negative_anchors_per_episode, eligible)
        chosen = rng.choice(eligible, size=k, replace=False) + 2
        for a in sorted(int(c) for c in set(chosen.tolist())):
            fv = build_feature_vector(grid, a)
            rows.append(fv.values)
            labels.append(0)
            eids.append(episode.episode_id)
            anchors.append(a)
    n_pos = sum(labels)
    if n_pos == 0 or n_pos == len(labels):
        raise DomainError(
            f"degenerate dataset: {n_pos} positive rows of {len(labels)}"
        )
    return LabeledDataset(
        task=spec.task,
        category=spec.category,
        X=np.asarray(rows),
        y=np.asarray(labels, dtype=np.int64),
        episode_ids=eids,
        anchor_hours=np.asarray(anchors, dtype=np.int64),
        split=np.full(len(labels), "", dtype="<U5"),
        seed=seed,
        skipped_positive_anchors=skipped_pos,
        skipped_negative_episodes=skipped_neg,
    )


def split(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Assign 70:10:20 train/val/test splits at episode level.

    Episode counts are floor(0.7 E) / floor(0.1 E) / remainder; all rows of
    one episode share a split. Deterministic given the seed.
    """
    order = list(dict.fromkeys(dataset.episode_ids))  # first-appearance order
    n_ep = len(order)
    if n_ep < 10:
        raise DomainError(f"need >= 10 episodes to split, got {n_ep}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_ep)
    n_train = int(0.7 * n_ep)
    n_val = int(0.1 * n_ep)
    assignment = {}
    for rank, ep_idx in enumerate(perm):
        if rank < n_train:
            part = "train"
        elif rank < n_train + n_val:
            part = "val"
        else:
            part = "test"
        assignment[order[ep_idx]] = part
    new_split = np.array([assignment[e] for e in dataset.episode_ids], dtype="<U5")
    return replace(dataset, split=new_split, seed=dataset.seed)


def select_negatives(pool, count: int, seed: int) -> list:
    """Uniform sample without replacement of min(count, len(pool)) episodes."""
    if not pool:
        raise DomainError("empty negative pool")
    if count >= len(pool):
        return list(pool)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pool), size=count, replace=False)
    return [pool[int(i)] for i in idx]


def export_dataset(dataset: LabeledDataset, path) -> None:
    """Write the dataset as CSV: f00..f29, episode_id, anchor_hour, label, split."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(FEATURE_NAMES) + ["episode_id", "anchor_hour", "label", "split"])
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.X[i]]
            row += [
                dataset.episode_ids[i],
                str(int(dataset.anchor_hours[i])),
                str(int(dataset.y[i])),
                str(dataset.split[i]),
            ]
            writer.writerow(row)


def load_dataset(path, task: str = "detection", category: str = "sepsis") -> LabeledDataset:
    """Read a dataset CSV written by export_dataset."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = list(FEATURE_NAMES) + ["episode_id", "anchor_hour", "label", "split"]
        if header != expected:
            raise DomainError(f"unexpected dataset header {header[:4]}...")
        X, y, eids, anchors, parts = [], [], [], [], []
        for row in reader:
            X.append([float(v) for v in row[:N_FEATURES]])
            eids.append(row[N_FEATURES])
            anchors.append(int(row[N_FEATURES + 1]))
            y.append(int(row[N_FEATURES + 2]))
            parts.append(row[N_FEATURES + 3])
    return LabeledDataset(
        task=task,
        category=category,
        X=np.asarray(X),
        y=np.asarray(y, dtype=np.int64),
        episode_ids=eids,
        anchor_hours=np.asarray(anchors, dtype=np.int64),
        split=np.asarray(parts, dtype="<U5"),
    )
