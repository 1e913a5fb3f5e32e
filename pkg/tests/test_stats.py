import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as stn

from driftscope.stats import (
    LOG,
    ModelFormula,
    SingularDesignError,
    Term,
    back_transform,
    build_design_matrix,
    predict,
    relative_error,
    sample_variance,
    weighted_least_squares,
)


def _line_rows(xs, ys):
    return [{"x": x, "y": y} for x, y in zip(xs, ys)]


LINE = ModelFormula(
    response="y", terms=(Term("x"),), response_transform="identity"
)


def _design(xs, ys):
    return build_design_matrix(_line_rows(xs, ys), LINE)


class TestDesignMatrix:
    def test_dummy_coding_against_reference(self):
        formula = ModelFormula(
            response="effort",
            terms=(
                Term("size", transform=LOG),
                Term("lang", kind="categorical", reference="1"),
            ),
        )
        rows = [
            {"effort": 100, "size": 10, "lang": "1"},
            {"effort": 150, "size": 20, "lang": "2"},
            {"effort": 120, "size": 15, "lang": "3"},
        ]
        d = build_design_matrix(rows, formula)
        assert d.labels == ("intercept", "ln(size)", "lang=2", "lang=3")
        # reference-level record has all-zero indicators
        assert list(d.matrix[0][2:]) == [0.0, 0.0]
        assert d.matrix[1][2] == 1.0 and d.matrix[2][3] == 1.0
        assert d.response[0] == pytest.approx(math.log(100))

    def test_log_of_nonpositive_value(self):
        formula = ModelFormula(response="y", terms=(Term("x", transform=LOG),))
        with pytest.raises(ValueError, match="log"):
            build_design_matrix([{"y": 1.0, "x": 0.0}], formula)

    def test_missing_value(self):
        with pytest.raises(ValueError, match="missing"):
            build_design_matrix([{"y": 1.0}], LINE)

    def test_unseen_level_at_prediction(self):
        formula = ModelFormula(
            response="y",
            terms=(Term("t", kind="categorical", reference="a"),),
            response_transform="identity",
        )
        train = build_design_matrix(
            [{"y": 1, "t": "a"}, {"y": 2, "t": "b"}], formula
        )
        with pytest.raises(ValueError, match="unseen level"):
            build_design_matrix([{"y": 3, "t": "c"}], formula, levels=train.levels)

    def test_reference_recode_leaves_fit_unchanged(self):
        rng = np.random.default_rng(7)
        rows = [
            {"y": float(rng.normal()), "x": float(rng.normal()), "t": t}
            for t in ["a", "b", "c", "a", "b", "c", "a", "b", "c", "a"]
        ]
        fitted = {}
        for ref in ("a", "b"):
            formula = ModelFormula(
                response="y",
                terms=(Term("x"), Term("t", kind="categorical", reference=ref)),
                response_transform="identity",
            )
            d = build_design_matrix(rows, formula)
            m = weighted_least_squares(d, np.ones(len(rows)))
            fitted[ref] = d.matrix @ m.coefficients
        assert fitted["a"] == pytest.approx(fitted["b"], abs=1e-9)


class TestWeightedLeastSquares:
    def test_exact_fit_is_weight_invariant(self):
        xs = [0.0, 1.0, 2.0, 3.0]
        ys = [1 + 2 * x for x in xs]
        for w in ([1, 1, 1, 1], [0.2, 0.9, 0.5, 1.0]):
            m = weighted_least_squares(_design(xs, ys), w)
            assert m.coefficients == pytest.approx([1.0, 2.0], abs=1e-10)

    def test_integer_weights_equal_row_replication(self):
        xs = [0.0, 1.0, 2.0]
        ys = [0.9, 3.2, 4.9]
        weighted = weighted_least_squares(_design(xs, ys), [2, 1, 3])
        xs_rep = [0.0, 0.0, 1.0, 2.0, 2.0, 2.0]
        ys_rep = [0.9, 0.9, 3.2, 4.9, 4.9, 4.9]
        replicated = weighted_least_squares(
            _design(xs_rep, ys_rep), [1.0] * 6
        )
        assert weighted.coefficients == pytest.approx(replicated.coefficients, abs=1e-8)

    def test_single_column_gives_weighted_mean(self):
        formula = ModelFormula(response="y", terms=(), response_transform="identity")
        d = build_design_matrix([{"y": 1.0}, {"y": 4.0}], formula)
        m = weighted_least_squares(d, [3.0, 1.0])
        assert m.coefficients[0] == pytest.approx((3 * 1 + 1 * 4) / 4)

    def test_weight_scale_invariance(self):
        xs = [0.0, 1.0, 2.0, 4.0]
        ys = [0.5, 2.2, 3.9, 8.5]
        w = [0.3, 1.1, 0.7, 0.9]
        a = weighted_least_squares(_design(xs, ys), w)
        b = weighted_least_squares(_design(xs, ys), [17.0 * v for v in w])
        assert a.coefficients == pytest.approx(b.coefficients, rel=1e-10)

    def test_orthogonality_invariant(self):
        rng = np.random.default_rng(11)
        xs = rng.normal(size=12)
        ys = rng.normal(size=12)
        w = rng.uniform(0.1, 1.0, size=12)
        d = _design(list(xs), list(ys))
        m = weighted_least_squares(d, w)
        grad = d.matrix.T @ (w * m.residuals)
        scale = max(1.0, np.max(np.abs(d.matrix.T @ (w * d.response))))
        assert np.max(np.abs(grad)) <= 1e-8 * scale

    def test_perturbing_coefficients_never_helps(self):
        rng = np.random.default_rng(3)
        xs = list(rng.normal(size=10))
        ys = list(rng.normal(size=10))
        w = rng.uniform(0.2, 1.0, size=10)
        d = _design(xs, ys)
        m = weighted_least_squares(d, w)

        def objective(beta):
            r = d.response - d.matrix @ beta
            return float(np.sum(w * r * r))

        best = objective(m.coefficients)
        for j in range(len(m.coefficients)):
            for delta in (1e-3, -1e-3):
                beta = m.coefficients.copy()
                beta[j] += delta
                assert objective(beta) >= best

    def test_singular_design(self):
        rows = [{"y": 1.0, "x": 2.0, "x2": 4.0}, {"y": 2.0, "x": 3.0, "x2": 6.0},
                {"y": 3.0, "x": 4.0, "x2": 8.0}]
        formula = ModelFormula(
            response="y", terms=(Term("x"), Term("x2")), response_transform="identity"
        )
        with pytest.raises(SingularDesignError):
            weighted_least_squares(build_design_matrix(rows, formula), [1, 1, 1])

    def test_underdetermined(self):
        with pytest.raises(SingularDesignError):
            weighted_least_squares(_design([1.0], [2.0]), [1.0])

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ValueError):
            weighted_least_squares(_design([1, 2, 3], [1, 2, 3]), [1.0, 0.0, 1.0])

    @settings(max_examples=50, deadline=None)
    @given(stn.integers(min_value=0, max_value=2**32 - 1))
    def test_uniform_weights_match_ols(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 30))
        xs = rng.normal(size=n)
        ys = rng.normal(size=n)
        d = _design(list(xs), list(ys))
        wls = weighted_least_squares(d, np.ones(n))
        ols, *_ = np.linalg.lstsq(d.matrix, d.response, rcond=None)
        assert wls.coefficients == pytest.approx(ols, rel=1e-10, abs=1e-12)


class TestPredict:
    def test_intercept_only(self):
        formula = ModelFormula(response="y", terms=(), response_transform="identity")
        d = build_design_matrix([{"y": 5.0}, {"y": 7.0}], formula)
        m = weighted_least_squares(d, [1.0, 1.0])
        assert list(predict(m, d)) == pytest.approx([6.0, 6.0])

    def test_exact_line_extrapolates(self):
        m = weighted_least_squares(_design([0, 1, 2], [1, 3, 5]), [1, 1, 1])
        d10 = _design([10.0], [0.0])
        assert predict(m, d10)[0] == pytest.approx(21.0)

    def test_label_mismatch(self):
        m = weighted_least_squares(_design([0, 1, 2], [1, 3, 5]), [1, 1, 1])
        formula = ModelFormula(response="y", terms=(Term("z"),), response_transform="identity")
        other = build_design_matrix([{"y": 1.0, "z": 1.0}], formula)
        with pytest.raises(ValueError, match="match"):
            predict(m, other)


class TestBackTransform:
    def test_zero_maps_to_one(self):
        assert back_transform([0.0]) == pytest.approx([1.0])

    def test_inverse_of_log(self):
        assert back_transform([math.log(152.0)])[0] == pytest.approx(152.0)

    @given(stn.floats(min_value=1e-6, max_value=1e6))
    def test_round_trip(self, v):
        assert back_transform([math.log(v)])[0] == pytest.approx(v, rel=1e-12)


class TestRelativeError:
    def test_perfect_predictions(self):
        assert relative_error([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_constant_predictor_is_exactly_one(self):
        assert relative_error([7.7, 7.7, 7.7], [1.0, 5.0, 9.0]) == pytest.approx(1.0, abs=1e-12)

    def test_hand_computed(self):
        assert relative_error([9.0, 13.0], [10.0, 12.0]) == pytest.approx(1.0)

    def test_shift_invariance(self):
        p = [1.0, 2.0, 4.0]
        a = [1.5, 2.5, 3.0]
        shifted = relative_error([v + 100 for v in p], [v + 100 for v in a])
        assert shifted == pytest.approx(relative_error(p, a), rel=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            relative_error([1.0], [2.0])

    def test_zero_variance_actuals(self):
        with pytest.raises(ValueError):
            relative_error([1.0, 2.0], [3.0, 3.0])


class TestSampleVariance:
    def test_hand_computed(self):
        assert sample_variance([2.0, 4.0]) == 2.0

    def test_constant_is_zero(self):
        assert sample_variance([5.0, 5.0, 5.0]) == 0.0

    def test_shift_invariance(self):
        v = [1.1, 2.7, 9.3, 4.2]
        assert sample_variance([x + 42 for x in v]) == pytest.approx(
            sample_variance(v), abs=1e-12
        )

    def test_too_short(self):
        with pytest.raises(ValueError):
            sample_variance([1.0])
