"""Bundled synthetic facility-demand generator.

The evaluation pipeline needs a dataset that ships with the package, so
this module generates one deterministically from a seed. The signal is a
linear trend plus daily and weekly harmonics, with the daily amplitude
modulated over the week. That modulation is the deliberate nonlinearity:
it produces sideband frequencies that no finite daily+weekly Fourier
basis can represent, while a lag-window recurrent model can track it.

The parameters below are version 1 of the generator and are frozen;
change them only by bumping GENERATOR_VERSION.
"""

from __future__ import annotations

import numpy as np

from .series import TimeSeries

GENERATOR_VERSION = 1

# Frozen v1 signal parameters (kW / hours).
BASE_KW = 220.0
TREND_KW_PER_HOUR = 0.01
DAILY_AMP_KW = 30.0
DAILY_PHASE = -1.2
DAILY_SECOND_AMP_KW = 6.0
DAILY_SECOND_PHASE = 0.5
WEEKLY_AMP_KW = 8.0
WEEKLY_PHASE = 0.3
MODULATION_DEPTH = 0.45
MODULATION_PHASE = 0.7
NOISE_STD_KW = 2.5

# A Monday midnight, so weekly phase lines up with calendar weekdays.
DEFAULT_START = "2022-01-03T00:00"


def generate_demand(
    hours: int,
    seed: int,
    start: str = DEFAULT_START,
) -> TimeSeries:
    """Deterministic hourly demand series of the given length."""
    if hours < 2:
        raise ValueError("need at least two hours of data")
    t = np.arange(hours, dtype=np.float64)
    daily = 2.0 * np.pi * t / 24.0
    weekly = 2.0 * np.pi * t / 168.0
    amp = DAILY_AMP_KW * (1.0 + MODULATION_DEPTH * np.sin(weekly + MODULATION_PHASE))
    signal = (
        BASE_KW
        + TREND_KW_PER_HOUR * t
        + amp * np.sin(daily + DAILY_PHASE)
        + DAILY_SECOND_AMP_KW * np.sin(2.0 * daily + DAILY_SECOND_PHASE)
        + WEEKLY_AMP_KW * np.sin(weekly + WEEKLY_PHASE)
    )
    noise = np.random.default_rng(seed).normal(0.0, NOISE_STD_KW, size=hours)
    stamps = np.datetime64(start, "s") + np.arange(hours) * np.timedelta64(3600, "s")
    return TimeSeries(stamps, signal + noise)


def facility_columns(hours: int, seed: int) -> dict[str, np.ndarray]:
    """Correlated sub-metered channels derived from one demand signal.

    Useful for exercising the correlation matrix: the channels share the
    total-load signal with independent measurement noise, so pairwise
    correlations land high but below 1.
    """
    total = generate_demand(hours, seed).values
    rng = np.random.default_rng(seed + 1)
    noise = lambda scale: rng.normal(0.0, scale, size=hours)
    return {
        "electricity_kw": total + noise(1.0),
        "hvac_kw": 0.55 * total + noise(3.0),
        "lighting_kw": 0.25 * total + noise(2.0),
        "equipment_kw": 0.20 * total + noise(2.5),
    }
