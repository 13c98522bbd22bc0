"""Measurement channel registry.

Six core vitals (always required for inclusion) plus extended channels
used by the rule-based severity scores. The core order is fixed and is
the vital-major order of the 30-element feature vector.
"""

# Fixed order: heart rate, SpO2, respiratory rate, systolic BP, diastolic BP, temperature.
CORE_VITALS = ("hr", "spo2", "resp_rate", "sbp", "dbp", "temp")

EXTENDED_CHANNELS = (
    "gcs",
    "pf_ratio",
    "map",
    "bilirubin",
    "platelets",
    "creatinine",
    "vasopressor",
    "wbc",
)

ALL_CHANNELS = CORE_VITALS + EXTENDED_CHANNELS

CHANNEL_INDEX = {name: i for i, name in enumerate(ALL_CHANNELS)}

# Physiologic plausibility bounds (inclusive); values outside are rejected
# at parse time with a row-level error.
PLAUSIBLE_RANGE = {
    "hr": (20.0, 300.0),
    "spo2": (0.0, 100.0),
    "resp_rate": (0.0, 80.0),
    "sbp": (20.0, 300.0),
    "dbp": (10.0, 250.0),
    "temp": (25.0, 45.0),
    "gcs": (3.0, 15.0),
    "pf_ratio": (20.0, 700.0),
    "map": (10.0, 250.0),
    "bilirubin": (0.0, 80.0),
    "platelets": (0.0, 2000.0),
    "creatinine": (0.0, 40.0),
    "vasopressor": (0.0, 3.0),
    "wbc": (0.0, 200.0),
}


def is_core(channel: str) -> bool:
    return channel in CORE_VITALS
