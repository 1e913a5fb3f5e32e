# Temporal kernel weighting: period indexing, normalized lags, kernel
# weights, bandwidth grids and weight-decay horizons.
#
# Conventions:
#   lag  = (target_period - origin_period) / bandwidth
#   weight(lag) in (0, 1], equal to 1 at lag 0
# Epanechnikov and Triangular are only defined for lag < 1; instead of
# clipping weights to zero we restrict the admissible bandwidth grid so
# that every training lag stays inside the support.

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum

__all__ = [
    "Granularity",
    "KernelKind",
    "BandwidthError",
    "BandwidthGrid",
    "WeightVector",
    "assign_period_indices",
    "normalized_lag",
    "kernel_weight",
    "weights_for_target",
    "min_bandwidth",
    "build_grid",
    "decay_horizon",
]


class Granularity(Enum):
    YEARLY = "yearly"
    MONTHLY = "monthly"

    @property
    def increment(self) -> float:
        """Period-index distance between two adjacent calendar periods."""
        return 1.0 if self is Granularity.YEARLY else 0.1


class KernelKind(Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"
    TRIANGULAR = "triangular"

    @property
    def finite_support(self) -> bool:
        """True if weights are only defined for lags strictly below 1."""
        return self in (KernelKind.EPANECHNIKOV, KernelKind.TRIANGULAR)


class BandwidthError(ValueError):
    """Bandwidth inadmissible for the requested kernel."""


def _completion_year(value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"unparseable completion value: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, (date, datetime)):
        return value.year
    raise ValueError(f"unparseable completion value: {value!r}")


def _completion_month(value) -> int:
    # Absolute month number so calendar gaps consume index distance.
    if isinstance(value, (date, datetime)):
        return value.year * 12 + (value.month - 1)
    raise ValueError(f"monthly granularity needs a full date, got {value!r}")


def assign_period_indices(completions, granularity: Granularity) -> list[float]:
    """Map completion years/dates to period indices.

    The oldest period gets index 1 (yearly) or 0.1 (monthly); every later
    calendar period is one increment further, whether or not any project
    completed in between.
    """
    completions = list(completions)
    if not completions:
        raise ValueError("no completion dates given")
    if granularity is Granularity.YEARLY:
        years = [_completion_year(c) for c in completions]
        oldest = min(years)
        return [float(1 + y - oldest) for y in years]
    months = [_completion_month(c) for c in completions]
    oldest = min(months)
    return [round(0.1 * (1 + m - oldest), 10) for m in months]


def normalized_lag(origin: float, target: float, bandwidth: float) -> float:
    """Elapsed periods from origin to target, scaled by the bandwidth."""
    if bandwidth <= 0:
        raise BandwidthError(f"bandwidth must be positive, got {bandwidth}")
    if origin > target:
        raise ValueError(
            f"origin period {origin} is newer than target period {target}"
        )
    return (target - origin) / bandwidth


def kernel_weight(kind: KernelKind, lag: float) -> float:
    """Weight for a single normalized lag.

    Finite-support kinds reject lags at or beyond 1; the Gaussian decays
    smoothly for any nonnegative lag and the Uniform kind is constant.
    """
    if lag < 0:
        raise ValueError(f"negative lag: {lag}")
    if kind.finite_support and lag >= 1:
        raise BandwidthError(
            f"lag {lag} outside the support of the {kind.value} kernel"
        )
    if kind is KernelKind.UNIFORM:
        return 1.0
    if kind is KernelKind.GAUSSIAN:
        return math.exp(-0.5 * lag * lag)
    if kind is KernelKind.EPANECHNIKOV:
        return 1.0 - lag * lag
    return 1.0 - lag  # triangular


@dataclass(frozen=True)
class WeightVector:
    """Per-record weights aligned with the training records."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("empty weight vector")
        for w in self.weights:
            if not (0.0 < w <= 1.0):
                raise ValueError(f"weight {w} outside (0, 1]")

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


def weights_for_target(
    indices, target: float, kind: KernelKind, bandwidth: float
) -> WeightVector:
    """Kernel weights for training records relative to a target period."""
    lags = [normalized_lag(idx, target, bandwidth) for idx in indices]
    if kind.finite_support and any(lag >= 1 for lag in lags):
        raise BandwidthError(
            f"bandwidth {bandwidth} below support minimum for "
            f"{kind.value} kernel (max elapsed {max(lags) * bandwidth:g})"
        )
    return WeightVector(tuple(kernel_weight(kind, lag) for lag in lags))


def min_bandwidth(
    kind: KernelKind, max_elapsed: float, step: float, lo: float = 1.0
) -> float:
    """Smallest admissible bandwidth on a grid anchored at ``lo``.

    For finite-support kinds this is the smallest grid value strictly
    greater than the largest elapsed time the grid must serve, so every
    lag stays below 1.  Gaussian and Uniform are unrestricted.
    """
    if max_elapsed < 0:
        raise ValueError(f"negative max_elapsed: {max_elapsed}")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if not kind.finite_support:
        return float(lo)
    k = max(0, math.ceil((max_elapsed - lo) / step - 1e-9))
    candidate = lo + k * step
    if candidate <= max_elapsed + 1e-9:
        candidate += step
    return candidate


@dataclass(frozen=True)
class BandwidthGrid:
    """Ascending bandwidth values from lo to hi at a fixed step."""

    lo: float
    hi: float
    step: float
    values: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.lo <= 0:
            raise ValueError(f"grid lower bound must be positive, got {self.lo}")
        if self.lo > self.hi + 1e-9:
            raise ValueError(f"empty grid: lo {self.lo} exceeds hi {self.hi}")
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        object.__setattr__(
            self,
            "values",
            tuple(round(self.lo + i * self.step, 10) for i in range(n)),
        )


def build_grid(
    kind: KernelKind,
    max_elapsed: float,
    lo: float = 1.0,
    hi: float = 100.0,
    step: float = 1.0,
) -> BandwidthGrid:
    """Admissible bandwidth grid for a kernel over a known elapsed span."""
    if lo > hi:
        raise ValueError(f"lo {lo} exceeds hi {hi}")
    start = max(lo, min_bandwidth(kind, max_elapsed, step, lo=lo))
    if start > hi + 1e-9:
        raise BandwidthError(
            f"empty grid: {kind.value} kernel needs bandwidth >= {start}, "
            f"grid tops out at {hi}"
        )
    return BandwidthGrid(lo=start, hi=hi, step=step)


def decay_horizon(kind: KernelKind, bandwidth: float, threshold: float) -> float:
    """Elapsed time at which the kernel weight falls to the threshold.

    The Uniform kernel never decays, so its horizon is infinite.
    """
    if bandwidth <= 0:
        raise BandwidthError(f"bandwidth must be positive, got {bandwidth}")
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    if kind is KernelKind.UNIFORM:
        return math.inf
    if kind is KernelKind.GAUSSIAN:
        return bandwidth * math.sqrt(-2.0 * math.log(threshold))
    if kind is KernelKind.EPANECHNIKOV:
        return bandwidth * math.sqrt(1.0 - threshold)
    return bandwidth * (1.0 - threshold)  # triangular
