"""Vital-sign ingestion: delimited-text parsing, hourly binning,
carry-forward/back-fill imputation, and cohort inclusion checks.

File formats
------------
Vitals file: UTF-8 CSV with header
    episode_id, age, unit, channel, minute, value
one row per raw measurement, rows may arrive in any order. `minute` is
a non-negative integer offset from the episode's first measurement;
`channel` is one of the tokens in `channels.ALL_CHANNELS`.

Annotation file: UTF-8 CSV with header
    episode_id, annotation, hour
where annotation is `infection` or `refractory_hypotension`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import ALL_CHANNELS, CHANNEL_INDEX, CORE_VITALS, PLAUSIBLE_RANGE
from .errors import DomainError

VITALS_HEADER = ["episode_id", "age", "unit", "channel", "minute", "value"]
ANNOTATIONS_HEADER = ["episode_id", "annotation", "hour"]

ANNOTATION_KINDS = ("infection", "refractory_hypotension")

# Ward codes accepted as "medical ICU" by the inclusion criteria.
MICU_UNITS = {"micu"}


@dataclass(frozen=True)
class VitalSample:
    episode_id: str
    channel: str
    time: int  # minutes since episode start
    value: float


@dataclass
class Episode:
    episode_id: str
    patient_age: float
    unit: str
    samples: list[VitalSample] = field(default_factory=list)
    infection_suspected_hours: frozenset = frozenset()
    fluid_refractory_hypotension_hours: frozenset = frozenset()


@dataclass
class HourlyGrid:
    """Dense hour x channel matrix; NaN marks missing cells.

    Column order is channels.ALL_CHANNELS. observed_mask is True where at
    least one raw measurement fell in that hour (cell = mean of those).
    """

    episode_id: str
    hours: int
    cells: np.ndarray
    observed_mask: np.ndarray

    def hour_values(self, hour: int) -> dict:
        """Channel -> value mapping at one hour (NaN for missing)."""
        return {ch: float(self.cells[hour, i]) for ch, i in CHANNEL_INDEX.items()}

    def channel_column(self, channel: str) -> np.ndarray:
        return self.cells[:, CHANNEL_INDEX[channel]]


@dataclass(frozen=True)
class ParseError:
    line: int
    message: str


@dataclass
class ParseReport:
    errors: list[ParseError] = field(default_factory=list)

    def add(self, line: int, message: str) -> None:
        self.errors.append(ParseError(line, message))

    def __len__(self) -> int:
        return len(self.errors)


@dataclass(frozen=True)
class InclusionVerdict:
    included: bool
    reason: str | None = None  # first failing criterion: age|unit|vitals|history


def _open_stream(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def parse_vitals(source) -> tuple[list[Episode], ParseReport]:
    """Parse a vitals CSV into Episodes (one per distinct episode_id).

    `source` is a path or a text/byte stream. Malformed rows are collected
    in the returned ParseReport with their line numbers and excluded from
    the episodes; the first row seen for an episode fixes its age and unit,
    later rows disagreeing on either are row-level errors.
    """
    stream, owned = _open_stream(source)
    if isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8")
    report = ParseReport()
    episodes: dict[str, Episode] = {}
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise DomainError("vitals stream is empty") from None
        if [c.strip() for c in header] != VITALS_HEADER:
            raise DomainError(
                f"bad vitals header {header!r}, expected {VITALS_HEADER!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                report.add(lineno, f"expected 6 fields, got {len(row)}")
                continue
            eid, age_s, unit, channel, minute_s, value_s = (f.strip() for f in row)
            if not eid:
                report.add(lineno, "empty episode_id")
                continue
            if channel not in CHANNEL_INDEX:
                report.add(lineno, f"unknown channel {channel!r}")
                continue
            try:
                age = float(age_s)
            except ValueError:
                report.add(lineno, f"non-numeric age {age_s!r}")
                continue
            try:
                minute = int(minute_s)
            except ValueError:
                report.add(lineno, f"non-integer minute {minute_s!r}")
                continue
            if minute < 0:
                report.add(lineno, f"negative minute {minute}")
                continue
            try:
                value = float(value_s)
            except ValueError:
                report.add(lineno, f"non-numeric value {value_s!r}")
                continue
            if not math.isfinite(value):
                report.add(lineno, f"non-finite value {value_s!r}")
                continue
            lo, hi = PLAUSIBLE_RANGE[channel]
            if not (lo <= value <= hi):
                report.add(
                    lineno,
                    f"value {value} outside plausible range [{lo}, {hi}] for {channel}",
                )
                continue
            ep = episodes.get(eid)
            if ep is None:
                ep = Episode(episode_id=eid, patient_age=age, unit=unit)
                episodes[eid] = ep
            else:
                if age != ep.patient_age:
                    report.add(lineno, f"age {age} conflicts with {ep.patient_age} for {eid}")
                    continue
                if unit != ep.unit:
                    report.add(lineno, f"unit {unit!r} conflicts with {ep.unit!r} for {eid}")
                    continue
            ep.samples.append(VitalSample(eid, channel, minute, value))
    finally:
        if owned:
            stream.close()
    for ep in episodes.values():
        ep.samples.sort(key=lambda s: s.time)
    return list(episodes.values()), report


def parse_annotations(source) -> tuple[dict, ParseReport]:
    """Parse the annotation CSV into {episode_id: {kind: set(hours)}}."""
    stream, owned = _open_stream(source)
    report = ParseReport()
    out: dict[str, dict[str, set]] = {}
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise DomainError("annotation stream is empty") from None
        if [c.strip() for c in header] != ANNOTATIONS_HEADER:
            raise DomainError(
                f"bad annotation header {header!r}, expected {ANNOTATIONS_HEADER!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                report.add(lineno, f"expected 3 fields, got {len(row)}")
                continue
            eid, kind, hour_s = (f.strip() for f in row)
            if kind not in ANNOTATION_KINDS:
                report.add(lineno, f"unknown annotation {kind!r}")
                continue
            try:
                hour = int(hour_s)
            except ValueError:
                report.add(lineno, f"non-integer hour {hour_s!r}")
                continue
            if hour < 0:
                report.add(lineno, f"negative hour {hour}")
                continue
            out.setdefault(eid, {k: set() for k in ANNOTATION_KINDS})[kind].add(hour)
    finally:
        if owned:
            stream.close()
    return out, report


def attach_annotations(episodes: list[Episode], annotations: dict) -> list[Episode]:
    """Copy episodes with their annotation hour-sets filled in.

    Hours beyond an episode's span are dropped (the sets must reference
    hours inside the episode); annotations for unknown episodes are ignored.
    """
    out = []
    for ep in episodes:
        ann = annotations.get(ep.episode_id)
        if ann is None:
            out.append(ep)
            continue
        last_hour = ep.samples[-1].time // 60 if ep.samples else -1
        inf = frozenset(h for h in ann["infection"] if h <= last_hour)
        ref = frozenset(h for h in ann["refractory_hypotension"] if h <= last_hour)
        out.append(
            replace(
                ep,
                infection_suspected_hours=inf,
                fluid_refractory_hypotension_hours=ref,
            )
        )
    return out


def load_cohort(vitals_path, annotations_path=None):
    """Parse vitals (and optionally annotations) into annotated episodes."""
    episodes, vit_report = parse_vitals(vitals_path)
    ann_report = ParseReport()
    if annotations_path is not None:
        annotations, ann_report = parse_annotations(annotations_path)
        episodes = attach_annotations(episodes, annotations)
    return episodes, vit_report, ann_report


def bin_hourly(episode: Episode) -> HourlyGrid:
    """Bin raw samples to an hourly grid; hour h covers minutes [60h, 60h+60).

    A cell with >=1 sample holds the arithmetic mean of that hour's samples
    and its observed_mask is True; everything else is NaN/False. The grid
    spans hours 0 .. last sample's hour.
    """
    if not episode.samples:
        raise DomainError(f"no samples in episode {episode.episode_id}")
    hours = episode.samples[-1].time // 60 + 1
    n_ch = len(ALL_CHANNELS)
    sums = np.zeros((hours, n_ch))
    counts = np.zeros((hours, n_ch), dtype=np.int64)
    for s in episode.samples:
        h = s.time // 60
        c = CHANNEL_INDEX[s.channel]
        sums[h, c] += s.value
        counts[h, c] += 1
    cells = np.full((hours, n_ch), np.nan)
    mask = counts > 0
    cells[mask] = sums[mask] / counts[mask]
    return HourlyGrid(episode.episode_id, hours, cells, mask)


def impute(grid: HourlyGrid) -> HourlyGrid:
    """Carry-forward imputation with back-fill for leading gaps.

    Missing cells take the nearest earlier observed value; cells before the
    first observation take the nearest later one. Channels without a single
    observation stay missing, except core vitals, which are an inclusion
    violation. observed_mask is unchanged. Idempotent.
    """
    cells = grid.cells.copy()
    for ch in ALL_CHANNELS:
        c = CHANNEL_INDEX[ch]
        col = cells[:, c]
        obs = ~np.isnan(col)
        if not obs.any():
            if ch in CORE_VITALS:
                raise DomainError(
                    f"inclusion violated: no {ch} measurement in episode {grid.episode_id}"
                )
            continue
        idx = np.where(obs, np.arange(grid.hours), -1)
        np.maximum.accumulate(idx, out=idx)
        first = int(np.argmax(obs))
        idx[: first] = first
        cells[:, c] = col[idx]
    return HourlyGrid(grid.episode_id, grid.hours, cells, grid.observed_mask.copy())


def apply_inclusion(
    episode: Episode, grid: HourlyGrid, first_positive_hour: int | None = None
) -> InclusionVerdict:
    """Inclusion criteria: adult, medical ICU, every core vital observed at
    least once, and (for positives) at least 7 hours before the first
    positive hour. The verdict carries the first failing criterion.
    """
    if episode.patient_age < 18:
        return InclusionVerdict(False, "age")
    if episode.unit.lower() not in MICU_UNITS:
        return InclusionVerdict(False, "unit")
    for ch in CORE_VITALS:
        if not grid.observed_mask[:, CHANNEL_INDEX[ch]].any():
            return InclusionVerdict(False, "vitals")
    if first_positive_hour is not None and first_positive_hour < 7:
        return InclusionVerdict(False, "history")
    return InclusionVerdict(True)
