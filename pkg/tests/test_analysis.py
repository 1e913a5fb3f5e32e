import math

import pytest

from driftscope.analysis import (
    AnalysisConfig,
    Classification,
    ConvergencePoint,
    SweepError,
    detect_convergence,
    fit_cell,
    run_sweep,
    stationarity_verdict,
    summarize,
)
from driftscope.chronology import ChronologyMode, build_split_plan
from driftscope.datasets import SynthConfig, synthesize
from driftscope.kernels import Granularity, KernelKind

ALL_KERNELS = (
    KernelKind.GAUSSIAN,
    KernelKind.EPANECHNIKOV,
    KernelKind.TRIANGULAR,
)


@pytest.fixture(scope="module")
def stationary_dataset():
    return synthesize(SynthConfig(seed=42))


@pytest.fixture(scope="module")
def stationary_sweep(stationary_dataset):
    return run_sweep(stationary_dataset, ALL_KERNELS, AnalysisConfig())


def _plan(dataset):
    return build_split_plan(
        dataset.records, dataset.granularity, dataset.mode, dataset.formula
    )


class TestFitCell:
    def test_uniform_kernel_curves_coincide(self, stationary_dataset):
        split = _plan(stationary_dataset).splits[0]
        cell = fit_cell(
            stationary_dataset, split, stationary_dataset.formula,
            KernelKind.UNIFORM, 10.0,
        )
        assert cell.re_train_nu == cell.re_train_u
        assert cell.re_test_nu == cell.re_test_u

    def test_noiseless_data_gives_zero_res(self):
        ds = synthesize(SynthConfig(seed=3, noise_sd=0.0))
        split = _plan(ds).splits[0]
        cell = fit_cell(ds, split, ds.formula, KernelKind.GAUSSIAN, 5.0)
        assert cell.re_train_nu == pytest.approx(0.0, abs=1e-12)
        assert cell.re_test_nu == pytest.approx(0.0, abs=1e-12)
        assert cell.re_train_u == pytest.approx(0.0, abs=1e-12)

    def test_all_data_split_has_no_test_res(self, stationary_dataset):
        split = _plan(stationary_dataset).splits[-1]
        cell = fit_cell(
            stationary_dataset, split, stationary_dataset.formula,
            KernelKind.GAUSSIAN, 5.0,
        )
        assert cell.re_test_nu is None and cell.re_test_u is None


class TestRunSweep:
    def test_full_grid_shape(self, stationary_dataset, stationary_sweep):
        plan = stationary_sweep.plan
        n_splits = len(plan.splits)
        expected = 0
        for kind in ALL_KERNELS:
            expected += n_splits * len(stationary_sweep.grids[kind].values)
        assert len(stationary_sweep.cells) == expected

    def test_finite_support_grids_start_above_span(self, stationary_sweep):
        max_elapsed = max(
            s.target - min(s.train_indices) for s in stationary_sweep.plan.splits
        )
        for kind in (KernelKind.EPANECHNIKOV, KernelKind.TRIANGULAR):
            assert stationary_sweep.grids[kind].values[0] > max_elapsed

    def test_uniform_re_constant_across_bandwidth(self, stationary_sweep):
        for split in stationary_sweep.plan.splits:
            for kind in ALL_KERNELS:
                curve = stationary_sweep.curve(split.ordinal, kind)
                values = {c.re_train_u for c in curve}
                assert max(values) - min(values) <= 1e-12

    def test_deterministic(self, stationary_dataset):
        a = run_sweep(stationary_dataset, (KernelKind.GAUSSIAN,))
        b = run_sweep(stationary_dataset, (KernelKind.GAUSSIAN,))
        assert a.cells == b.cells

    def test_weighted_curve_approaches_uniform_at_large_bandwidth(
        self, stationary_sweep
    ):
        for split in stationary_sweep.plan.splits:
            curve = stationary_sweep.curve(split.ordinal, KernelKind.GAUSSIAN)
            first, last = curve[0], curve[-1]
            assert abs(last.re_train_nu - last.re_train_u) <= (
                abs(first.re_train_nu - first.re_train_u) + 1e-9
            )

    def test_empty_kernel_set(self, stationary_dataset):
        with pytest.raises(ValueError):
            run_sweep(stationary_dataset, ())

    def test_failed_cell_reports_coordinates(self):
        # two records per period is too few once the formula needs 3 rows
        ds = synthesize(SynthConfig(seed=8, n_projects=6, n_periods=3, noise_sd=0.0))
        records = tuple(
            type(r)(id=r.id, completion=r.completion, attributes={**r.attributes, "size": 100.0})
            for r in ds.records
        )
        broken = type(ds)(
            name=ds.name, granularity=ds.granularity, mode=ds.mode,
            records=records, formula=ds.formula,
        )
        with pytest.raises(SweepError, match="split"):
            run_sweep(broken, (KernelKind.GAUSSIAN,))


class TestDetectConvergence:
    def test_identical_curve_converges_at_grid_min(self):
        curve = [(b, 0.5) for b in range(1, 11)]
        point = detect_convergence(curve, 0.5, 0.05)
        assert point.bandwidth == 1
        assert point.at_grid_minimum and point.sustained

    def test_never_within_tolerance(self):
        curve = [(b, 2.0) for b in range(1, 11)]
        assert detect_convergence(curve, 0.5, 0.05) is None

    def test_sustained_tail_required(self):
        # transient touch at b=2 does not count
        curve = [(1, 2.0), (2, 0.5), (3, 2.0), (4, 0.52), (5, 0.51), (6, 0.5)]
        point = detect_convergence(curve, 0.5, 0.05)
        assert point.bandwidth == 4

    def test_tolerance_scales_with_large_uniform_re(self):
        curve = [(1, 10.8), (2, 10.4), (3, 10.2)]
        point = detect_convergence(curve, 10.0, 0.05)
        assert point.bandwidth == 2

    def test_empty_curve(self):
        with pytest.raises(ValueError):
            detect_convergence([], 1.0, 0.05)


class TestStationarityVerdict:
    def _config(self):
        return AnalysisConfig()

    def test_no_convergence_is_non_stationary(self):
        v = stationarity_verdict(None, KernelKind.GAUSSIAN, 7.0, self._config())
        assert v.classification is Classification.NON_STATIONARY
        assert v.horizon is None

    def test_horizon_beyond_span_is_non_stationary(self):
        point = ConvergencePoint(bandwidth=5.0, sustained=True, at_grid_minimum=False)
        v = stationarity_verdict(point, KernelKind.GAUSSIAN, 7.0, self._config())
        assert v.classification is Classification.NON_STATIONARY
        assert v.horizon == pytest.approx(15.17, abs=0.01)

    def test_full_grid_convergence_is_near_stationary(self):
        point = ConvergencePoint(bandwidth=1.0, sustained=True, at_grid_minimum=True)
        v = stationarity_verdict(point, KernelKind.GAUSSIAN, 7.0, self._config())
        assert v.classification is Classification.NEAR_STATIONARY

    def test_attainable_horizon_is_stationary(self):
        point = ConvergencePoint(bandwidth=2.0, sustained=True, at_grid_minimum=False)
        v = stationarity_verdict(point, KernelKind.GAUSSIAN, 16.0, self._config())
        assert v.horizon < 16.0
        assert v.classification is Classification.STATIONARY

    def test_large_bandwidth_on_short_span(self):
        point = ConvergencePoint(bandwidth=18.0, sustained=True, at_grid_minimum=False)
        v = stationarity_verdict(point, KernelKind.GAUSSIAN, 16.0, self._config())
        assert v.horizon == pytest.approx(18 * math.sqrt(-2 * math.log(0.01)), rel=1e-9)
        assert v.classification is Classification.NON_STATIONARY

    def test_decreasing_theta_never_promotes_to_stationary(self):
        point = ConvergencePoint(bandwidth=6.0, sustained=True, at_grid_minimum=False)
        for span in (5.0, 10.0, 20.0, 40.0):
            coarse = stationarity_verdict(
                point, KernelKind.GAUSSIAN, span, AnalysisConfig(theta=0.05)
            )
            fine = stationarity_verdict(
                point, KernelKind.GAUSSIAN, span, AnalysisConfig(theta=0.005)
            )
            if coarse.classification is Classification.NON_STATIONARY:
                assert fine.classification is Classification.NON_STATIONARY


class TestSummarize:
    def test_uniform_kernel_only_all_near_stationary(self, stationary_dataset):
        sweep = run_sweep(stationary_dataset, (KernelKind.UNIFORM,))
        summary = summarize(sweep)
        assert all(
            v.classification is Classification.NEAR_STATIONARY
            for v in summary.verdicts
        )

    def test_verdict_per_split_and_kernel(self, stationary_sweep):
        summary = summarize(stationary_sweep)
        n_splits = len(stationary_sweep.plan.splits)
        assert len(summary.verdicts) == n_splits * len(ALL_KERNELS)

    def test_all_data_split_not_in_test_ranges(self, stationary_sweep):
        summary = summarize(stationary_sweep)
        final = stationary_sweep.plan.splits[-1].ordinal
        assert final not in summary.test_re_range
        for ordinal, (lo, hi) in summary.test_re_range.items():
            assert 0 <= lo <= hi

    def test_kernel_agreement_reported(self, stationary_sweep):
        summary = summarize(stationary_sweep)
        assert 0.0 <= summary.kernel_agreement <= 1.0
