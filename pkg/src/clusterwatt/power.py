"""Node power as a function of CPU utilization, and regression fitting of it.

Utilization is always a fraction in [0, 1] at this API; the fitted formulas
themselves take a percentage, so evaluation multiplies by 100 internally.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientData, InvalidSpec

UTIL_FLOOR = 0.01


class PowerFamily(str, Enum):
    POWER_LAW = "power-law"
    EXPONENTIAL = "exponential"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class PowerModel:
    """Two-parameter regression of node watts on CPU utilization.

    power-law    a * (100c) ** b
    exponential  a * exp(b * 100c)
    logarithmic  a + b * ln(100c)
    """

    family: PowerFamily
    coeff_a: float
    coeff_b: float

    def __post_init__(self):
        object.__setattr__(self, "family", PowerFamily(self.family))
        if not (math.isfinite(self.coeff_a) and math.isfinite(self.coeff_b)):
            raise InvalidSpec("power_model", "coefficients must be finite")

    def __call__(self, utilization: float) -> float:
        return eval_power(self, utilization)


def clamp_utilization(utilization: float) -> float:
    return min(1.0, max(UTIL_FLOOR, utilization))


def eval_power(model: PowerModel, utilization: float) -> float:
    """Watts drawn at ``utilization``, clamped to [0.01, 1]."""
    pct = 100.0 * clamp_utilization(utilization)
    a, b = model.coeff_a, model.coeff_b
    if model.family is PowerFamily.POWER_LAW:
        watts = a * pct**b
    elif model.family is PowerFamily.EXPONENTIAL:
        watts = a * math.exp(b * pct)
    else:
        watts = a + b * math.log(pct)
    return max(0.0, watts)


@dataclass(frozen=True)
class CalibrationSample:
    utilization: float
    watts: float

    def __post_init__(self):
        if not 0.0 <= self.utilization <= 1.0:
            raise InvalidSpec("utilization", f"{self.utilization} outside [0, 1]")
        if not self.watts > 0.0:
            raise InvalidSpec("watts", f"{self.watts} must be positive")


@dataclass(frozen=True)
class FitReport:
    chosen: PowerModel
    r_squared_by_family: dict[PowerFamily, float] = field(hash=False)
    models_by_family: dict[PowerFamily, PowerModel] = field(hash=False, repr=False)

    @property
    def r_squared(self) -> float:
        return self.r_squared_by_family[self.chosen.family]


def _r_squared(observed: np.ndarray, predicted: np.ndarray) -> float:
    ss_res = float(np.sum((observed - predicted) ** 2))
    ss_tot = float(np.sum((observed - observed.mean()) ** 2))
    scale = float(np.sum(observed**2))
    # flat data: a perfect constant fit scores 1 instead of 0/0
    if ss_tot <= 1e-24 * scale:
        return 1.0 if ss_res <= 1e-18 * scale else 0.0
    return 1.0 - ss_res / ss_tot


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares ``y = intercept + slope * x``."""
    slope, intercept = np.polyfit(x, y, 1)
    return float(intercept), float(slope)


def fit_power_model(samples: Sequence[CalibrationSample]) -> FitReport:
    """Fit all three families and keep the one with the best R^2.

    Power-law and exponential are fitted as straight lines in log space, the
    logarithmic family directly; R^2 is always scored on raw watts so the
    families compare fairly. Ties go to the earlier family in
    ``PowerFamily`` order.
    """
    if len(samples) < 3:
        raise InsufficientData(f"need at least 3 samples, got {len(samples)}")
    util = np.array([s.utilization for s in samples], dtype=float)
    watts = np.array([s.watts for s in samples], dtype=float)
    if np.any(util <= 0.0):
        raise InsufficientData("utilizations must be > 0 for log-domain fits")
    if np.ptp(util) == 0.0:
        raise InsufficientData("need at least 2 distinct utilizations")

    pct = 100.0 * util
    ln_pct = np.log(pct)
    ln_w = np.log(watts)

    models: dict[PowerFamily, PowerModel] = {}
    ln_a, b = _line_fit(ln_pct, ln_w)
    models[PowerFamily.POWER_LAW] = PowerModel(PowerFamily.POWER_LAW, math.exp(ln_a), b)
    ln_a, b = _line_fit(pct, ln_w)
    models[PowerFamily.EXPONENTIAL] = PowerModel(PowerFamily.EXPONENTIAL, math.exp(ln_a), b)
    a, b = _line_fit(ln_pct, watts)
    models[PowerFamily.LOGARITHMIC] = PowerModel(PowerFamily.LOGARITHMIC, a, b)

    r2 = {}
    for family, model in models.items():
        predicted = np.array([eval_power(model, u) for u in util])
        r2[family] = _r_squared(watts, predicted)

    best = max(PowerFamily, key=lambda f: (r2[f], -list(PowerFamily).index(f)))
    return FitReport(chosen=models[best], r_squared_by_family=r2, models_by_family=models)


def read_samples_csv(path: str | Path) -> list[CalibrationSample]:
    """Read a ``utilization,watts`` CSV (utilization as a fraction)."""
    with open(path, newline="") as fh:
        return parse_samples(fh)


def parse_samples(lines: Iterable[str]) -> list[CalibrationSample]:
    rows = csv.reader(lines)
    header = [h.strip() for h in next(rows, [])]
    if header != ["utilization", "watts"]:
        raise InvalidSpec("header", "expected 'utilization,watts'")
    samples = []
    for row in rows:
        if not row or not "".join(row).strip():
            continue
        samples.append(CalibrationSample(float(row[0]), float(row[1])))
    return samples
