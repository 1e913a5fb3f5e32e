# Regression machinery: model formulas, design matrices with log
# transforms and dummy coding, weighted least squares, prediction with
# back-transformation, and the variance-ratio relative error.

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .swilk import swilk

__all__ = [
    "Term",
    "ModelFormula",
    "DesignMatrix",
    "FittedModel",
    "NormalityReport",
    "SingularDesignError",
    "shapiro_wilk",
    "build_design_matrix",
    "weighted_least_squares",
    "predict",
    "back_transform",
    "relative_error",
    "sample_variance",
    "normality_diagnostics",
]

LOG = "log"
IDENTITY = "identity"


class SingularDesignError(RuntimeError):
    """Design matrix is rank deficient or has too few rows."""


@dataclass(frozen=True)
class Term:
    """One explanatory term: a numeric column (optionally log-scaled) or
    a categorical column expanded against a reference level."""

    column: str
    kind: str = "numeric"  # "numeric" | "categorical"
    transform: str = IDENTITY
    reference: str | None = None
    levels: tuple[str, ...] | None = None  # full level set, if known up front

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.transform not in (LOG, IDENTITY):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.kind == "categorical" and self.reference is None:
            raise ValueError(f"categorical term {self.column!r} needs a reference level")


@dataclass(frozen=True)
class ModelFormula:
    response: str
    terms: tuple[Term, ...]
    response_transform: str = LOG

    def describe(self) -> str:
        lhs = f"ln({self.response})" if self.response_transform == LOG else self.response
        parts = []
        for t in self.terms:
            if t.kind == "numeric" and t.transform == LOG:
                parts.append(f"ln({t.column})")
            else:
                parts.append(t.column)
        return f"{lhs} = {' + '.join(parts)}"

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.response, *(t.column for t in self.terms))


@dataclass(frozen=True)
class NormalityReport:
    statistic: float
    p_value: float
    sample_size: int
    alpha: float
    normal: bool


def shapiro_wilk(sample, alpha: float = 0.05) -> NormalityReport:
    """Shapiro-Wilk normality test (Royston AS R94, 3 <= n <= 5000)."""
    sample = list(sample)
    w, p = swilk(sample)
    return NormalityReport(
        statistic=w,
        p_value=p,
        sample_size=len(sample),
        alpha=alpha,
        normal=p > alpha,
    )


@dataclass(frozen=True)
class DesignMatrix:
    """Intercept-first design with its transformed response vector.

    ``levels`` records, per categorical column, the non-reference levels
    in column order; prediction designs must be built with the training
    levels so unseen categories fail loudly.
    """

    matrix: np.ndarray
    response: np.ndarray
    labels: tuple[str, ...]
    levels: dict[str, tuple[str, ...]]

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]


def _transformed(value, transform: str, column: str) -> float:
    v = float(value)
    if transform == LOG:
        if v <= 0:
            raise ValueError(f"cannot log-transform nonpositive {column}={v}")
        return math.log(v)
    return v


def build_design_matrix(
    rows, formula: ModelFormula, levels: dict[str, tuple[str, ...]] | None = None
) -> DesignMatrix:
    """Build the design matrix and transformed response for a formula.

    ``rows`` is a sequence of mappings (one per record).  When ``levels``
    is given it fixes the dummy coding (prediction against a trained
    model); otherwise levels come from the term declaration or, failing
    that, from the data.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no records to build a design from")
    for col in formula.columns:
        for row in rows:
            if col not in row or row[col] in (None, ""):
                raise ValueError(f"missing value for column {col!r}")

    used_levels: dict[str, tuple[str, ...]] = {}
    labels: list[str] = ["intercept"]
    columns: list[np.ndarray] = [np.ones(len(rows))]

    for term in formula.terms:
        if term.kind == "numeric":
            labels.append(
                f"ln({term.column})" if term.transform == LOG else term.column
            )
            columns.append(
                np.array([_transformed(r[term.column], term.transform, term.column) for r in rows])
            )
            continue

        observed = [str(r[term.column]) for r in rows]
        if levels is not None and term.column in levels:
            non_ref = tuple(levels[term.column])
        elif term.levels is not None:
            non_ref = tuple(l for l in term.levels if l != term.reference)
        else:
            non_ref = tuple(sorted(set(observed) - {term.reference}))
        if levels is None and term.reference not in observed and term.levels is None:
            raise ValueError(
                f"reference level {term.reference!r} absent from column {term.column!r}"
            )
        known = set(non_ref) | {term.reference}
        for v in observed:
            if v not in known:
                raise ValueError(
                    f"unseen level {v!r} in column {term.column!r}; "
                    f"training levels were {sorted(known)}"
                )
        used_levels[term.column] = non_ref
        for level in non_ref:
            labels.append(f"{term.column}={level}")
            columns.append(np.array([1.0 if v == level else 0.0 for v in observed]))

    y = np.array(
        [_transformed(r[formula.response], formula.response_transform, formula.response) for r in rows]
    )
    return DesignMatrix(
        matrix=np.column_stack(columns),
        response=y,
        labels=tuple(labels),
        levels=used_levels,
    )


@dataclass(frozen=True)
class FittedModel:
    coefficients: np.ndarray
    labels: tuple[str, ...]
    residuals: np.ndarray  # transformed scale, training rows
    weights: np.ndarray
    normality: dict[str, NormalityReport] = field(default_factory=dict)


def weighted_least_squares(design: DesignMatrix, weights) -> FittedModel:
    """Minimize the weighted sum of squared transformed-scale residuals.

    Rows are scaled by sqrt(weight) and the plain least-squares problem
    is solved by orthogonal decomposition, which keeps dummy-heavy
    designs numerically stable.
    """
    w = np.asarray(list(weights), dtype=float)
    if w.shape[0] != design.n_rows:
        raise ValueError(
            f"{w.shape[0]} weights for {design.n_rows} design rows"
        )
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    if design.n_rows < design.n_columns:
        raise SingularDesignError(
            f"{design.n_rows} rows cannot identify {design.n_columns} coefficients"
        )
    sw = np.sqrt(w)
    xw = design.matrix * sw[:, None]
    yw = design.response * sw
    coef, _, rank, _ = np.linalg.lstsq(xw, yw, rcond=None)
    if rank < design.n_columns:
        raise SingularDesignError("singular design")
    residuals = design.response - design.matrix @ coef
    return FittedModel(
        coefficients=coef,
        labels=design.labels,
        residuals=residuals,
        weights=w,
    )


def predict(model: FittedModel, design: DesignMatrix) -> np.ndarray:
    """Linear predictions on the transformed scale."""
    if design.labels != model.labels:
        raise ValueError(
            f"design columns {design.labels} do not match model columns {model.labels}"
        )
    return design.matrix @ model.coefficients


def back_transform(log_predictions) -> np.ndarray:
    """Undo the natural-log response transform."""
    return np.exp(np.asarray(log_predictions, dtype=float))


def sample_variance(values) -> float:
    v = np.asarray(list(values), dtype=float)
    if v.shape[0] < 2:
        raise ValueError(f"variance needs at least 2 points, got {v.shape[0]}")
    return float(np.var(v, ddof=1))


def relative_error(predictions, actuals) -> float:
    """Variance of residuals over variance of the actuals.

    A value of 1 is the constant-predictor benchmark; values near zero
    indicate accurate predictions.
    """
    p = np.asarray(list(predictions), dtype=float)
    a = np.asarray(list(actuals), dtype=float)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} vs {a.shape[0]}")
    denom = sample_variance(a)
    if denom <= 0:
        raise ValueError("actuals have zero variance")
    return sample_variance(a - p) / denom


def normality_diagnostics(
    rows, formula: ModelFormula, alpha: float = 0.05
) -> dict[str, NormalityReport]:
    """Shapiro-Wilk reports for the response and each numeric term, on
    their transformed scales.  Variables too small or constant to test
    are omitted."""
    rows = list(rows)
    reports: dict[str, NormalityReport] = {}
    targets = [(formula.response, formula.response_transform)]
    targets += [
        (t.column, t.transform) for t in formula.terms if t.kind == "numeric"
    ]
    for column, transform in targets:
        try:
            values = [_transformed(r[column], transform, column) for r in rows]
            reports[column] = shapiro_wilk(values, alpha=alpha)
        except ValueError:
            continue
    return reports
