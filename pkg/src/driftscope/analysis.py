# The sweep engine.  For every (split, kernel, bandwidth) cell a
# kernel-weighted fit and an unweighted fit are built on the same
# training data; relative errors of both, on training and test records,
# form the four curves a stationarity reading needs.  Convergence of the
# weighted training curve onto the flat unweighted line, combined with
# the kernel's weight-decay horizon at the convergence bandwidth, yields
# the per-split verdict.

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import stats
from .chronology import Split, SplitPlan, build_split_plan, resolve_levels
from .kernels import (
    KernelKind,
    WeightVector,
    build_grid,
    decay_horizon,
    weights_for_target,
)

__all__ = [
    "AnalysisConfig",
    "SweepCell",
    "SweepResult",
    "SweepError",
    "ConvergencePoint",
    "Classification",
    "StationarityVerdict",
    "SweepSummary",
    "fit_cell",
    "run_sweep",
    "detect_convergence",
    "stationarity_verdict",
    "summarize",
]


@dataclass(frozen=True)
class AnalysisConfig:
    epsilon: float = 0.05  # relative convergence tolerance
    theta: float = 0.01  # weight-decay threshold
    grid_lo: float = 1.0
    grid_hi: float = 100.0
    grid_step: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not (0.0 < self.theta < 1.0):
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")


class SweepError(RuntimeError):
    """A cell failed; carries the (split, kernel, bandwidth) coordinates."""

    def __init__(self, message, split=None, kernel=None, bandwidth=None):
        coords = []
        if split is not None:
            coords.append(f"split {split}")
        if kernel is not None:
            coords.append(f"kernel {kernel.value}")
        if bandwidth is not None:
            coords.append(f"bandwidth {bandwidth:g}")
        prefix = f"[{', '.join(coords)}] " if coords else ""
        super().__init__(prefix + str(message))
        self.split = split
        self.kernel = kernel
        self.bandwidth = bandwidth


@dataclass(frozen=True)
class SweepCell:
    split: int
    kernel: KernelKind
    bandwidth: float
    re_train_nu: float
    re_test_nu: float | None  # None on the all-data split
    re_train_u: float
    re_test_u: float | None


@dataclass(frozen=True)
class SweepResult:
    dataset: str
    config: AnalysisConfig
    kernels: tuple[KernelKind, ...]
    grids: dict  # KernelKind -> BandwidthGrid
    plan: SplitPlan
    cells: tuple[SweepCell, ...]

    def curve(self, split: int, kernel: KernelKind) -> list[SweepCell]:
        return [
            c for c in self.cells if c.split == split and c.kernel == kernel
        ]


def _re_pair(model, design, actuals, log_scale: bool):
    fitted = stats.predict(model, design)
    predictions = stats.back_transform(fitted) if log_scale else fitted
    return stats.relative_error(predictions, actuals)


def _fit_both(train_design, test_design, train_actuals, test_actuals, weights, log_scale):
    model = stats.weighted_least_squares(train_design, weights)
    re_train = _re_pair(model, train_design, train_actuals, log_scale)
    re_test = (
        _re_pair(model, test_design, test_actuals, log_scale)
        if test_design is not None
        else None
    )
    return re_train, re_test


@dataclass(frozen=True)
class _SplitContext:
    """Designs and raw actuals for one split, built once and reused for
    every bandwidth."""

    split: Split
    train_design: stats.DesignMatrix
    test_design: stats.DesignMatrix | None
    train_actuals: tuple[float, ...]
    test_actuals: tuple[float, ...] | None
    log_scale: bool


def _split_context(dataset, split: Split, formula) -> _SplitContext:
    by_id = {r.id: r for r in dataset.records}
    train_rows = [by_id[i].attributes for i in split.train_ids]
    test_rows = [by_id[i].attributes for i in split.test_ids]
    train_design = stats.build_design_matrix(train_rows, formula)
    test_design = (
        stats.build_design_matrix(test_rows, formula, levels=train_design.levels)
        if test_rows
        else None
    )
    return _SplitContext(
        split=split,
        train_design=train_design,
        test_design=test_design,
        train_actuals=tuple(r[formula.response] for r in train_rows),
        test_actuals=tuple(r[formula.response] for r in test_rows) or None,
        log_scale=formula.response_transform == stats.LOG,
    )


def fit_cell(dataset, split: Split, formula, kind: KernelKind, bandwidth: float) -> SweepCell:
    """Fit the weighted and unweighted models for one grid cell."""
    ctx = _split_context(dataset, split, formula)
    return _cell_from_context(ctx, kind, bandwidth)


def _cell_from_context(ctx: _SplitContext, kind: KernelKind, bandwidth: float) -> SweepCell:
    split = ctx.split
    weights = weights_for_target(split.train_indices, split.target, kind, bandwidth)
    re_train_nu, re_test_nu = _fit_both(
        ctx.train_design, ctx.test_design, ctx.train_actuals, ctx.test_actuals,
        weights, ctx.log_scale,
    )
    uniform = WeightVector((1.0,) * len(split.train_ids))
    re_train_u, re_test_u = _fit_both(
        ctx.train_design, ctx.test_design, ctx.train_actuals, ctx.test_actuals,
        uniform, ctx.log_scale,
    )
    return SweepCell(
        split=split.ordinal,
        kernel=kind,
        bandwidth=bandwidth,
        re_train_nu=re_train_nu,
        re_test_nu=re_test_nu,
        re_train_u=re_train_u,
        re_test_u=re_test_u,
    )


def run_sweep(dataset, kernels, config: AnalysisConfig = AnalysisConfig()) -> SweepResult:
    """Sweep every split x kernel x admissible bandwidth.

    Grids are fixed per kernel at the dataset level (the largest elapsed
    span any split must serve decides the finite-support minimum), so
    every split of one dataset shares a common bandwidth axis.
    """
    kernels = tuple(kernels)
    if not kernels:
        raise ValueError("empty kernel set")
    formula = resolve_levels(
        dataset.formula, [r.attributes for r in dataset.records]
    )
    plan = build_split_plan(
        dataset.records,
        dataset.granularity,
        dataset.mode,
        formula,
        overrides=dataset.overrides,
    )
    max_elapsed = max(
        s.target - min(s.train_indices) for s in plan.splits
    )
    grids = {}
    for kind in kernels:
        grids[kind] = build_grid(
            kind,
            max_elapsed,
            lo=config.grid_lo,
            hi=config.grid_hi,
            step=config.grid_step,
        )

    contexts = []
    for split in plan.splits:
        try:
            contexts.append(_split_context(dataset, split, formula))
        except (ValueError, stats.SingularDesignError) as exc:
            raise SweepError(exc, split=split.ordinal) from exc

    cells = []
    for ctx in contexts:
        for kind in kernels:
            for b in grids[kind].values:
                try:
                    cells.append(_cell_from_context(ctx, kind, b))
                except (ValueError, stats.SingularDesignError) as exc:
                    raise SweepError(
                        exc, split=ctx.split.ordinal, kernel=kind, bandwidth=b
                    ) from exc
    return SweepResult(
        dataset=dataset.name,
        config=config,
        kernels=kernels,
        grids=grids,
        plan=plan,
        cells=tuple(cells),
    )


@dataclass(frozen=True)
class ConvergencePoint:
    bandwidth: float
    sustained: bool
    at_grid_minimum: bool


def detect_convergence(curve, uniform_re: float, epsilon: float) -> ConvergencePoint | None:
    """Smallest bandwidth from which the weighted curve stays within
    tolerance of the unweighted value for the rest of the grid.

    ``curve`` is a sequence of (bandwidth, re) pairs in ascending
    bandwidth order.  The tolerance is relative to the unweighted value
    but floored at epsilon in absolute terms.
    """
    curve = list(curve)
    if not curve:
        raise ValueError("empty curve")
    tolerance = epsilon * max(1.0, uniform_re)
    b_star = None
    for b, re in curve:
        if abs(re - uniform_re) <= tolerance:
            if b_star is None:
                b_star = b
        else:
            b_star = None
    if b_star is None:
        return None
    return ConvergencePoint(
        bandwidth=b_star,
        sustained=True,
        at_grid_minimum=b_star == curve[0][0],
    )


class Classification(Enum):
    STATIONARY = "stationary"
    NEAR_STATIONARY = "near_stationary"
    NON_STATIONARY = "non_stationary"


@dataclass(frozen=True)
class StationarityVerdict:
    split: int
    kernel: KernelKind
    classification: Classification
    convergence: ConvergencePoint | None
    horizon: float | None
    train_span: float
    epsilon: float
    theta: float


def stationarity_verdict(
    point: ConvergencePoint | None,
    kind: KernelKind,
    train_span: float,
    config: AnalysisConfig,
    split: int = 0,
) -> StationarityVerdict:
    """Classify one (split, kernel) slice.

    No sustained convergence means the process never looks uniform: non
    stationary.  Convergence across the whole grid means weighting never
    mattered: near stationary.  Otherwise the verdict hinges on whether
    the weights at the convergence bandwidth have decayed within the
    training span.
    """
    if train_span <= 0:
        raise ValueError(f"train span must be positive, got {train_span}")
    if point is None:
        return StationarityVerdict(
            split, kind, Classification.NON_STATIONARY, None, None,
            train_span, config.epsilon, config.theta,
        )
    horizon = decay_horizon(kind, point.bandwidth, config.theta)
    if point.at_grid_minimum:
        cls = Classification.NEAR_STATIONARY
    elif horizon <= train_span:
        cls = Classification.STATIONARY
    else:
        cls = Classification.NON_STATIONARY
    return StationarityVerdict(
        split, kind, cls, point, horizon, train_span,
        config.epsilon, config.theta,
    )


@dataclass(frozen=True)
class SweepSummary:
    dataset: str
    verdicts: tuple[StationarityVerdict, ...]
    kernel_agreement: float | None  # None with fewer than 2 weighted kernels
    test_re_range: dict  # split ordinal -> (min, max) over all test REs

    def verdict(self, split: int, kernel: KernelKind) -> StationarityVerdict:
        for v in self.verdicts:
            if v.split == split and v.kernel == kernel:
                return v
        raise KeyError((split, kernel))


def summarize(sweep: SweepResult, config: AnalysisConfig | None = None) -> SweepSummary:
    """Per-split, per-kernel verdicts plus cross-kernel agreement and the
    spread of test relative errors."""
    config = config or sweep.config
    verdicts = []
    for split in sweep.plan.splits:
        span = max(split.train_span, sweep.plan.granularity.increment)
        for kind in sweep.kernels:
            curve = [
                (c.bandwidth, c.re_train_nu) for c in sweep.curve(split.ordinal, kind)
            ]
            uniform_re = sweep.curve(split.ordinal, kind)[0].re_train_u
            point = detect_convergence(curve, uniform_re, config.epsilon)
            verdicts.append(
                stationarity_verdict(point, kind, span, config, split=split.ordinal)
            )

    weighted = [k for k in sweep.kernels if k is not KernelKind.UNIFORM]
    agreement = None
    if len(weighted) >= 2:
        agree = 0
        total = 0
        for split in sweep.plan.splits:
            calls = {
                v.classification
                for v in verdicts
                if v.split == split.ordinal and v.kernel in weighted
            }
            total += 1
            if len(calls) == 1:
                agree += 1
        agreement = agree / total if total else None

    test_re_range = {}
    for split in sweep.plan.splits:
        values = []
        for c in sweep.cells:
            if c.split == split.ordinal and c.re_test_nu is not None:
                values.append(c.re_test_nu)
                values.append(c.re_test_u)
        if values:
            test_re_range[split.ordinal] = (min(values), max(values))
    return SweepSummary(
        dataset=sweep.dataset,
        verdicts=tuple(verdicts),
        kernel_agreement=agreement,
        test_re_range=test_re_range,
    )
