"""Per-hour gold-standard labeling and rule-based severity scores.

Categories form a severity chain: an hour is

  sepsis          when >=2 SIRS criteria hold and infection is suspected,
  severe_sepsis   when additionally systolic BP < 90 mmHg (hypotension proxy),
  septic_shock    when additionally hypotension is fluid-refractory
                  (annotation hour-set).

SOFA/qSOFA/MEWS thresholds live in a band table that can be loaded from a
key-value file (see DEFAULT_BANDS_TEXT for the format and defaults). A
missing input channel contributes 0 to a score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cohort import Episode, HourlyGrid
from .errors import ConfigError
from .kvconfig import load_kv_file, parse_kv_text

CATEGORIES = ("sepsis", "severe_sepsis", "septic_shock")

SOFA_ORGAN_CHANNELS = {
    "respiration": "pf_ratio",
    "coagulation": "platelets",
    "liver": "bilirubin",
    "cns": "gcs",
    "renal": "creatinine",
}

MEWS_COMPONENTS = ("hr", "sbp", "resp_rate", "temp", "gcs")

DEFAULT_BANDS_TEXT = """\
# sepsiskit band tables, version 1.
# Banded components: value v scores scores[i] for the half-open interval
# [edges[i-1], edges[i]); below edges[0] it scores scores[0], at or above
# the last edge it scores scores[-1]. len(scores) == len(edges) + 1.
bands.version = 1

sirs.temp_above = 38.0
sirs.temp_below = 36.0
sirs.hr_above = 90.0
sirs.resp_rate_above = 20.0
sirs.wbc_above = 12.0
sirs.wbc_below = 4.0

severe.sbp_below = 90.0

qsofa.gcs_below = 15.0
qsofa.resp_rate_at_least = 22.0
qsofa.sbp_at_most = 100.0

sofa.respiration.edges = 100,200,300,400
sofa.respiration.scores = 4,3,2,1,0
sofa.coagulation.edges = 20,50,100,150
sofa.coagulation.scores = 4,3,2,1,0
sofa.liver.edges = 1.2,2.0,6.0,12.0
sofa.liver.scores = 0,1,2,3,4
sofa.cardiovascular.map_below = 70.0
sofa.cns.edges = 6,10,13,15
sofa.cns.scores = 4,3,2,1,0
sofa.renal.edges = 1.2,2.0,3.5,5.0
sofa.renal.scores = 0,1,2,3,4

mews.hr.edges = 41,51,101,111,130
mews.hr.scores = 2,1,0,1,2,3
mews.sbp.edges = 71,81,101,200
mews.sbp.scores = 3,2,1,0,2
mews.resp_rate.edges = 9,15,21,30
mews.resp_rate.scores = 2,0,1,2,3
mews.temp.edges = 35.0,38.5
mews.temp.scores = 2,0,2
mews.gcs.edges = 9,13,15
mews.gcs.scores = 3,2,1,0
"""


@dataclass(frozen=True)
class Band:
    """Piecewise-constant score over half-open intervals."""

    edges: tuple
    scores: tuple

    def lookup(self, value: float) -> int:
        i = 0
        for edge in self.edges:
            if value >= edge:
                i += 1
            else:
                break
        return self.scores[i]


@dataclass(frozen=True)
class BandConfig:
    sirs_temp_above: float
    sirs_temp_below: float
    sirs_hr_above: float
    sirs_resp_rate_above: float
    sirs_wbc_above: float
    sirs_wbc_below: float
    severe_sbp_below: float
    qsofa_gcs_below: float
    qsofa_resp_rate_at_least: float
    qsofa_sbp_at_most: float
    sofa_bands: dict  # organ -> Band (five banded organs)
    sofa_map_below: float
    mews_bands: dict  # channel -> Band


def _band(pairs: dict, prefix: str) -> Band:
    from .kvconfig import parse_floats, parse_ints

    try:
        edges = parse_floats(pairs[f"{prefix}.edges"])
        scores = parse_ints(pairs[f"{prefix}.scores"])
    except KeyError as exc:
        raise ConfigError(f"missing band key {exc.args[0]!r}") from None
    if len(scores) != len(edges) + 1:
        raise ConfigError(f"{prefix}: need len(scores) == len(edges) + 1")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConfigError(f"{prefix}: edges must be strictly ascending")
    if any(s < 0 for s in scores):
        raise ConfigError(f"{prefix}: negative score")
    return Band(edges, scores)


def bands_from_pairs(pairs: dict) -> BandConfig:
    def num(key):
        try:
            return float(pairs[key])
        except KeyError:
            raise ConfigError(f"missing band key {key!r}") from None
        except ValueError:
            raise ConfigError(f"bad number for {key!r}: {pairs[key]!r}") from None

    return BandConfig(
        sirs_temp_above=num("sirs.temp_above"),
        sirs_temp_below=num("sirs.temp_below"),
        sirs_hr_above=num("sirs.hr_above"),
        sirs_resp_rate_above=num("sirs.resp_rate_above"),
        sirs_wbc_above=num("sirs.wbc_above"),
        sirs_wbc_below=num("sirs.wbc_below"),
        severe_sbp_below=num("severe.sbp_below"),
        qsofa_gcs_below=num("qsofa.gcs_below"),
        qsofa_resp_rate_at_least=num("qsofa.resp_rate_at_least"),
        qsofa_sbp_at_most=num("qsofa.sbp_at_most"),
        sofa_bands={o: _band(pairs, f"sofa.{o}") for o in SOFA_ORGAN_CHANNELS},
        sofa_map_below=num("sofa.cardiovascular.map_below"),
        mews_bands={c: _band(pairs, f"mews.{c}") for c in MEWS_COMPONENTS},
    )


def default_bands() -> BandConfig:
    return bands_from_pairs(parse_kv_text(DEFAULT_BANDS_TEXT))


def load_bands(path) -> BandConfig:
    return bands_from_pairs(load_kv_file(path))


def _present(value) -> bool:
    return value is not None and not math.isnan(value)


def sirs_count(values: dict, bands: BandConfig | None = None) -> int:
    """Number of SIRS criteria met at one hour (0..4).

    Criteria: temperature above/below the fever bounds, tachycardia,
    tachypnea, deranged WBC. A missing WBC contributes 0.
    """
    b = bands or default_bands()
    count = 0
    t = values.get("temp")
    if _present(t) and (t > b.sirs_temp_above or t < b.sirs_temp_below):
        count += 1
    hr = values.get("hr")
    if _present(hr) and hr > b.sirs_hr_above:
        count += 1
    rr = values.get("resp_rate")
    if _present(rr) and rr > b.sirs_resp_rate_above:
        count += 1
    wbc = values.get("wbc")
    if _present(wbc) and (wbc > b.sirs_wbc_above or wbc < b.sirs_wbc_below):
        count += 1
    return count


def qsofa_score(values: dict, bands: BandConfig | None = None) -> int:
    """qSOFA at one hour: altered mentation, tachypnea, low systolic BP (0..3)."""
    b = bands or default_bands()
    score = 0
    gcs = values.get("gcs")
    if _present(gcs) and gcs < b.qsofa_gcs_below:
        score += 1
    rr = values.get("resp_rate")
    if _present(rr) and rr >= b.qsofa_resp_rate_at_least:
        score += 1
    sbp = values.get("sbp")
    if _present(sbp) and sbp <= b.qsofa_sbp_at_most:
        score += 1
    return score


def mews_score(values: dict, bands: BandConfig | None = None) -> int:
    """MEWS at one hour: banded HR, systolic BP, respiratory rate,
    temperature and neuro response (GCS-mapped), summed (0..14)."""
    b = bands or default_bands()
    score = 0
    for ch in MEWS_COMPONENTS:
        v = values.get(ch)
        if _present(v):
            score += b.mews_bands[ch].lookup(v)
    return score


def sofa_score(values: dict, bands: BandConfig | None = None) -> int:
    """SOFA at one hour: six organ-system sub-scores of 0..4, summed (0..24).

    Respiration, coagulation, liver, CNS and renal are banded lookups on
    their channels; cardiovascular takes the worse of the MAP criterion
    (MAP below threshold -> 1) and the vasopressor dose flag (1/2/3 ->
    2/3/4). Missing channels score 0 for their system.
    """
    b = bands or default_bands()
    score = 0
    for organ, ch in SOFA_ORGAN_CHANNELS.items():
        v = values.get(ch)
        if _present(v):
            score += b.sofa_bands[organ].lookup(v)
    cardio = 0
    map_v = values.get("map")
    if _present(map_v) and map_v < b.sofa_map_below:
        cardio = 1
    vaso = values.get("vasopressor")
    if _present(vaso) and vaso >= 1.0:
        cardio = max(cardio, min(4, int(vaso) + 1))
    return score + cardio


@dataclass
class HourLabeling:
    episode_id: str
    positive_hours: dict  # category -> frozenset of hour indices
    first_positive_hour: dict  # category -> int | None

    def hours(self, category: str) -> frozenset:
        return self.positive_hours[category]

    def first(self, category: str):
        return self.first_positive_hour[category]


def label_positive_hours(
    episode: Episode, grid: HourlyGrid, bands: BandConfig | None = None
) -> HourLabeling:
    """Per-hour positivity for the three categories on an imputed grid.

    Pure function of (grid, annotations); septic_shock hours are a subset
    of severe_sepsis hours, which are a subset of sepsis hours.
    """
    b = bands or default_bands()
    sepsis, severe, shock = set(), set(), set()
    for h in range(grid.hours):
        vals = grid.hour_values(h)
        if sirs_count(vals, b) < 2 or h not in episode.infection_suspected_hours:
            continue
        sepsis.add(h)
        sbp = vals.get("sbp")
        if not (_present(sbp) and sbp < b.severe_sbp_below):
            continue
        severe.add(h)
        if h in episode.fluid_refractory_hypotension_hours:
            shock.add(h)
    positive = {
        "sepsis": frozenset(sepsis),
        "severe_sepsis": frozenset(severe),
        "septic_shock": frozenset(shock),
    }
    first = {c: (min(hs) if hs else None) for c, hs in positive.items()}
    return HourLabeling(episode.episode_id, positive, first)
