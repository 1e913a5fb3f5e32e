# Dataset descriptors and ingestion.  A descriptor declares where the
# chronology and model attributes live in a CSV, how rows are filtered,
# and which regression formula applies; built-in descriptors cover the
# NASA93, Desharnais, Kitchenham, Maxwell and XBC schemas.  The XBC data
# itself is proprietary, so a seeded synthetic generator with
# controllable process drift stands in for validation work.

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum

import numpy as np

from .chronology import ChronologyMode, completion_date
from .kernels import Granularity, assign_period_indices
from .stats import IDENTITY, LOG, ModelFormula, Term

__all__ = [
    "DataError",
    "ProjectRecord",
    "Dataset",
    "DatasetDescriptor",
    "CocomoMode",
    "CocomoModeConstants",
    "COCOMO_MODES",
    "EffortMultipliers",
    "SynthConfig",
    "builtin_descriptor",
    "BUILTIN_NAMES",
    "load_dataset",
    "write_csv",
    "effective_multiplier",
    "cocomo_effort",
    "synth_descriptor",
    "synthesize",
]

MISSING_TOKENS = {"", "?", "NA", "na", "null", "NULL"}


class DataError(ValueError):
    """Input data violates its descriptor."""


@dataclass(frozen=True)
class ProjectRecord:
    id: str
    completion: object  # int year or datetime.date
    attributes: dict
    start: date | None = None
    duration_days: int | None = None


@dataclass(frozen=True)
class Dataset:
    name: str
    granularity: Granularity
    mode: ChronologyMode
    records: tuple[ProjectRecord, ...]
    formula: ModelFormula
    overrides: tuple[int, ...] | None = None

    def period_indices(self) -> list[float]:
        return assign_period_indices(
            [r.completion for r in self.records], self.granularity
        )


# --- descriptors -----------------------------------------------------------


@dataclass(frozen=True)
class DatasetDescriptor:
    """Declarative bridge from a raw CSV to a fittable dataset."""

    name: str
    granularity: Granularity
    chronology: ChronologyMode
    columns: dict  # keys: id, completion, start, duration (all optional but id)
    formula: ModelFormula
    filters: tuple[dict, ...] = ()
    derived_products: dict = field(default_factory=dict)
    overrides: tuple[int, ...] | None = None
    expected_rows: int | None = None

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "granularity": self.granularity.value,
            "chronology": self.chronology.value,
            "columns": self.columns,
            "filters": list(self.filters),
            "formula": {
                "response": self.formula.response,
                "response_transform": self.formula.response_transform,
                "terms": [
                    {
                        "column": t.column,
                        "kind": t.kind,
                        "transform": t.transform,
                        "reference": t.reference,
                        "levels": list(t.levels) if t.levels else None,
                    }
                    for t in self.formula.terms
                ],
            },
            "derived_products": self.derived_products,
            "overrides": list(self.overrides) if self.overrides else None,
            "expected_rows": self.expected_rows,
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "DatasetDescriptor":
        doc = json.loads(text)
        f = doc["formula"]
        formula = ModelFormula(
            response=f["response"],
            response_transform=f.get("response_transform", LOG),
            terms=tuple(
                Term(
                    column=t["column"],
                    kind=t.get("kind", "numeric"),
                    transform=t.get("transform", IDENTITY),
                    reference=t.get("reference"),
                    levels=tuple(t["levels"]) if t.get("levels") else None,
                )
                for t in f["terms"]
            ),
        )
        return DatasetDescriptor(
            name=doc["name"],
            granularity=Granularity(doc["granularity"]),
            chronology=ChronologyMode(doc["chronology"]),
            columns=doc["columns"],
            formula=formula,
            filters=tuple(doc.get("filters") or ()),
            derived_products=doc.get("derived_products") or {},
            overrides=tuple(doc["overrides"]) if doc.get("overrides") else None,
            expected_rows=doc.get("expected_rows"),
        )


_EM_COLUMNS = [
    "rely", "data", "cplx", "time", "stor", "virt", "turn", "acap",
    "aexp", "pcap", "vexp", "lexp", "modp", "tool", "sced",
]


def _nasa93() -> DatasetDescriptor:
    # Fitted form: the log-linear image of the COCOMO81 effort equation,
    # with the effort-adjustment factor entering as ln(eaf) and the
    # development mode dummy-coded against Organic.
    return DatasetDescriptor(
        name="nasa93",
        granularity=Granularity.YEARLY,
        chronology=ChronologyMode.YEAR_ACCUMULATE,
        columns={"id": "recordnumber", "completion": "year"},
        formula=ModelFormula(
            response="effort",
            terms=(
                Term("kloc", transform=LOG),
                Term("eaf", transform=LOG),
                Term(
                    "mode",
                    kind="categorical",
                    reference="organic",
                    levels=("organic", "semidetached", "embedded"),
                ),
            ),
        ),
        derived_products={"eaf": _EM_COLUMNS},
        expected_rows=93,
    )


def _desharnais() -> DatasetDescriptor:
    # Four records carry missing (-1) experience values and are dropped,
    # leaving the conventional 77-project subset.
    return DatasetDescriptor(
        name="desharnais",
        granularity=Granularity.YEARLY,
        chronology=ChronologyMode.YEAR_ACCUMULATE,
        columns={"id": "Project", "completion": "YearEnd"},
        formula=ModelFormula(
            response="Effort",
            terms=(
                Term("PointsAjust", transform=LOG),
                Term(
                    "Language",
                    kind="categorical",
                    reference="1",
                    levels=("1", "2", "3"),
                ),
            ),
        ),
        filters=(
            {"column": "TeamExp", "exclude": ["-1"]},
            {"column": "ManagerExp", "exclude": ["-1"]},
        ),
        expected_rows=77,
    )


def _kitchenham() -> DatasetDescriptor:
    return DatasetDescriptor(
        name="kitchenham",
        granularity=Granularity.YEARLY,
        chronology=ChronologyMode.DATE_FILTERED_TEST,
        columns={
            "id": "Project",
            "start": "Actual.start.date",
            "duration": "Actual.duration",
        },
        formula=ModelFormula(
            response="Actual.effort",
            terms=(
                Term("Adjusted.function.points", transform=LOG),
                Term("Project.type", kind="categorical", reference="D"),
            ),
        ),
        filters=({"column": "Client.code", "equals": "2"},),
        expected_rows=105,
    )


def _maxwell() -> DatasetDescriptor:
    return DatasetDescriptor(
        name="maxwell",
        granularity=Granularity.YEARLY,
        chronology=ChronologyMode.DATE_FILTERED_TEST,
        columns={"id": "id", "completion": "Year", "start": "Start_date"},
        formula=ModelFormula(
            response="Effort",
            terms=(
                Term("Size", transform=LOG),
                Term("T08"),
                Term("T09"),
            ),
        ),
        expected_rows=62,
    )


def _xbc() -> DatasetDescriptor:
    return DatasetDescriptor(
        name="xbc",
        granularity=Granularity.MONTHLY,
        chronology=ChronologyMode.REMAINDER_TEST,
        columns={"id": "id", "completion": "completion_date"},
        formula=ModelFormula(
            response="total_effort",
            terms=(Term("org_effort", transform=LOG),),
        ),
        overrides=(7, 10, 12, 13, 14),
        expected_rows=16,
    )


_BUILTINS = {
    "nasa93": _nasa93,
    "desharnais": _desharnais,
    "kitchenham": _kitchenham,
    "maxwell": _maxwell,
    "xbc": _xbc,
}

BUILTIN_NAMES = tuple(sorted(_BUILTINS))


def builtin_descriptor(name: str) -> DatasetDescriptor:
    try:
        return _BUILTINS[name.lower()]()
    except KeyError:
        raise DataError(
            f"unknown descriptor {name!r}; built-ins are {', '.join(BUILTIN_NAMES)}"
        ) from None


# --- CSV loading -----------------------------------------------------------

_DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y", "%d/%m/%y", "%d-%b-%y", "%d-%b-%Y")


def _parse_date(text: str, column: str) -> date:
    text = text.strip()
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise DataError(f"unparseable date {text!r} in column {column!r}")


def _row_passes(row: dict, filt: dict) -> bool:
    value = row.get(filt["column"], "").strip()
    if "equals" in filt:
        return value == str(filt["equals"])
    if "exclude" in filt:
        return value not in {str(v) for v in filt["exclude"]} and value not in MISSING_TOKENS
    if filt.get("not_missing"):
        return value not in MISSING_TOKENS
    raise DataError(f"unrecognized filter: {filt}")


def load_dataset(descriptor: DatasetDescriptor, source) -> Dataset:
    """Parse, filter and validate a CSV into a chronologically sorted
    Dataset.  ``source`` is a path, a file object or CSV text."""
    if hasattr(source, "read"):
        reader = csv.DictReader(source)
        rows = list(reader)
        fieldnames = reader.fieldnames
    elif isinstance(source, str) and "\n" in source:
        reader = csv.DictReader(io.StringIO(source))
        rows = list(reader)
        fieldnames = reader.fieldnames
    else:
        with open(source, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            fieldnames = reader.fieldnames
    if not fieldnames:
        raise DataError("CSV has no header row")

    cols = descriptor.columns
    needed = [cols["id"]]
    for key in ("completion", "start", "duration"):
        if cols.get(key):
            needed.append(cols[key])
    derived_sources = {s for srcs in descriptor.derived_products.values() for s in srcs}
    formula_cols = [
        c
        for c in descriptor.formula.columns
        if c not in descriptor.derived_products
    ]
    needed += formula_cols + sorted(derived_sources)
    for f in descriptor.filters:
        needed.append(f["column"])
    missing = [c for c in needed if c not in fieldnames]
    if missing:
        raise DataError(f"CSV is missing bound columns: {', '.join(missing)}")

    kept = [r for r in rows if all(_row_passes(r, f) for f in descriptor.filters)]
    if descriptor.expected_rows is not None and len(kept) != descriptor.expected_rows:
        raise DataError(
            f"{descriptor.name}: expected {descriptor.expected_rows} rows "
            f"after filtering, got {len(kept)}"
        )

    categorical = {
        t.column for t in descriptor.formula.terms if t.kind == "categorical"
    }
    records = []
    seen_ids = set()
    for raw in kept:
        rid = raw[cols["id"]].strip()
        if rid in seen_ids:
            raise DataError(f"duplicate project id {rid!r}")
        seen_ids.add(rid)

        start = None
        duration = None
        if cols.get("start") and raw.get(cols["start"], "").strip():
            start = _parse_date(raw[cols["start"]], cols["start"])
        if cols.get("duration") and raw.get(cols["duration"], "").strip():
            try:
                duration = int(round(float(raw[cols["duration"]])))
            except ValueError:
                raise DataError(
                    f"non-numeric duration {raw[cols['duration']]!r} for {rid!r}"
                ) from None

        if cols.get("completion") and raw.get(cols["completion"], "").strip():
            text = raw[cols["completion"]].strip()
            try:
                completion: object = int(text)
            except ValueError:
                completion = _parse_date(text, cols["completion"])
        elif start is not None and duration is not None:
            completion = completion_date(start, duration)
        else:
            raise DataError(
                f"record {rid!r} has no completion date and no start+duration"
            )
        if descriptor.granularity is Granularity.MONTHLY and not isinstance(
            completion, date
        ):
            raise DataError(
                f"record {rid!r}: monthly chronology needs full completion dates"
            )

        attributes: dict = {}
        for col in formula_cols:
            value = raw[col].strip()
            if value in MISSING_TOKENS:
                raise DataError(f"missing value in column {col!r} for {rid!r}")
            if col in categorical:
                attributes[col] = value
            else:
                try:
                    attributes[col] = float(value)
                except ValueError:
                    raise DataError(
                        f"non-numeric value {value!r} in column {col!r} for {rid!r}"
                    ) from None
        for name, sources in descriptor.derived_products.items():
            try:
                factors = [float(raw[s]) for s in sources]
            except ValueError:
                raise DataError(
                    f"non-numeric multiplier for derived column {name!r} in {rid!r}"
                ) from None
            attributes[name] = math.prod(factors)

        records.append(
            ProjectRecord(
                id=rid,
                completion=completion,
                attributes=attributes,
                start=start,
                duration_days=duration,
            )
        )
    if not records:
        raise DataError(f"{descriptor.name}: no records left after filtering")
    records.sort(key=lambda r: (_sort_key(r, descriptor.granularity), r.id))
    return Dataset(
        name=descriptor.name,
        granularity=descriptor.granularity,
        mode=descriptor.chronology,
        records=tuple(records),
        formula=descriptor.formula,
        overrides=descriptor.overrides,
    )


def _sort_key(record: ProjectRecord, granularity: Granularity):
    c = record.completion
    if isinstance(c, date):
        return (c.year, c.month, c.day)
    return (int(c), 0, 0)


def write_csv(dataset: Dataset, descriptor: DatasetDescriptor, path) -> None:
    """Serialize a dataset back to the descriptor's CSV schema."""
    cols = descriptor.columns
    formula_cols = [
        c for c in descriptor.formula.columns if c not in descriptor.derived_products
    ]
    fieldnames = [cols["id"]]
    if cols.get("completion"):
        fieldnames.append(cols["completion"])
    fieldnames += formula_cols
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for r in dataset.records:
            row = {cols["id"]: r.id}
            if cols.get("completion"):
                c = r.completion
                row[cols["completion"]] = (
                    c.isoformat() if isinstance(c, date) else str(c)
                )
            for col in formula_cols:
                v = r.attributes[col]
                row[col] = repr(v) if isinstance(v, float) else str(v)
            writer.writerow(row)


# --- COCOMO81 --------------------------------------------------------------


class CocomoMode(Enum):
    ORGANIC = "organic"
    SEMI_DETACHED = "semidetached"
    EMBEDDED = "embedded"


@dataclass(frozen=True)
class CocomoModeConstants:
    mode: CocomoMode
    a: float
    b: float


COCOMO_MODES = {
    CocomoMode.ORGANIC: CocomoModeConstants(CocomoMode.ORGANIC, 3.2, 1.05),
    CocomoMode.SEMI_DETACHED: CocomoModeConstants(CocomoMode.SEMI_DETACHED, 3.0, 1.12),
    CocomoMode.EMBEDDED: CocomoModeConstants(CocomoMode.EMBEDDED, 2.8, 1.20),
}


@dataclass(frozen=True)
class EffortMultipliers:
    """The 15 COCOMO81 cost drivers; 1.0 is the nominal (no-adjustment)
    rating for every driver."""

    acap: float = 1.0
    pcap: float = 1.0
    aexp: float = 1.0
    modp: float = 1.0
    tool: float = 1.0
    vexp: float = 1.0
    lexp: float = 1.0
    sced: float = 1.0
    data: float = 1.0
    turn: float = 1.0
    virt: float = 1.0
    stor: float = 1.0
    time: float = 1.0
    rely: float = 1.0
    cplx: float = 1.0

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.acap, self.pcap, self.aexp, self.modp, self.tool,
            self.vexp, self.lexp, self.sced, self.data, self.turn,
            self.virt, self.stor, self.time, self.rely, self.cplx,
        )


def effective_multiplier(em: EffortMultipliers) -> float:
    values = em.as_tuple()
    if any(v <= 0 for v in values):
        raise ValueError("effort multipliers must be strictly positive")
    return math.prod(values)


def cocomo_effort(
    mode: CocomoModeConstants, kloc: float, em: EffortMultipliers
) -> float:
    """Nominal person-month effort: a * KLOC^b scaled by the product of
    the effort multipliers."""
    if kloc <= 0:
        raise ValueError(f"kloc must be positive, got {kloc}")
    return mode.a * kloc**mode.b * effective_multiplier(em)


# --- synthetic datasets ----------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Seeded log-linear effort generator with optional per-period drift
    in the intercept and slope (all-zero drift is a stationary process)."""

    n_projects: int = 120
    n_periods: int = 8
    seed: int = 0
    intercept: float = 1.0
    slope: float = 1.0
    intercept_drift: float = 0.0
    slope_drift: float = 0.0
    noise_sd: float = 0.1
    size_lo: float = 10.0
    size_hi: float = 1000.0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError(f"negative noise sd: {self.noise_sd}")
        if self.n_periods < 2:
            raise ValueError("need at least 2 periods")
        if not (0 < self.size_lo < self.size_hi):
            raise ValueError("need 0 < size_lo < size_hi")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)

    @staticmethod
    def from_json(text: str) -> "SynthConfig":
        return SynthConfig(**json.loads(text))


def synth_descriptor(config: SynthConfig) -> DatasetDescriptor:
    """Descriptor matching the generator's CSV output."""
    return DatasetDescriptor(
        name="synthetic",
        granularity=Granularity.YEARLY,
        chronology=ChronologyMode.YEAR_ACCUMULATE,
        columns={"id": "id", "completion": "year"},
        formula=ModelFormula(
            response="effort",
            terms=(Term("size", transform=LOG),),
        ),
        expected_rows=config.n_projects,
    )


def synthesize(config: SynthConfig) -> Dataset:
    """Deterministically generate a drifting (or stationary) log-linear
    effort dataset: ln(effort) = b0(p) + b1(p) * ln(size) + noise."""
    descriptor = synth_descriptor(config)
    minimum = 2 * (2 + len(descriptor.formula.terms))
    if config.n_projects < minimum:
        raise ValueError(
            f"need at least {minimum} projects for a usable plan, "
            f"got {config.n_projects}"
        )
    rng = np.random.default_rng(config.seed)
    # Every period gets at least one project; the rest land at random.
    periods = list(range(config.n_periods))
    periods += list(
        rng.integers(0, config.n_periods, config.n_projects - config.n_periods)
    )
    periods.sort()
    sizes = np.exp(
        rng.uniform(
            math.log(config.size_lo), math.log(config.size_hi), config.n_projects
        )
    )
    noise = (
        rng.normal(0.0, config.noise_sd, config.n_projects)
        if config.noise_sd > 0
        else np.zeros(config.n_projects)
    )
    records = []
    for i, (p, size, eps) in enumerate(zip(periods, sizes, noise)):
        b0 = config.intercept + p * config.intercept_drift
        b1 = config.slope + p * config.slope_drift
        effort = math.exp(b0 + b1 * math.log(size) + eps)
        records.append(
            ProjectRecord(
                id=f"p{i:04d}",
                completion=2000 + int(p),
                attributes={"size": float(size), "effort": effort},
            )
        )
    return Dataset(
        name="synthetic",
        granularity=Granularity.YEARLY,
        mode=ChronologyMode.YEAR_ACCUMULATE,
        records=tuple(records),
        formula=descriptor.formula,
        overrides=None,
    )
