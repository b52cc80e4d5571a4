"""CSV schemas, validating parsers and seeded synthetic data generators.

Three dataset shapes are supported:

* ``MATERNAL_SCHEMA``: maternal vital signs with a three-level risk label
  (the UCI Maternal Health Risk column layout);
* ``DENGUE_SCHEMA``: demographic dengue triage records;
* ``PDNA_SCHEMA``: flood damage per upazila (sub-district).

Nothing is downloaded. Real CSVs the user already has are looked up in the
data directory (``$FAIRHEALTH_DATA_DIR``, default ``~/.fairhealth/data``);
otherwise the seeded generators below stand in for them.

CSV dialect, for reading and writing: comma separator, double-quote
escaping, UTF-8, ``\\n`` line endings, header row first. Floats are written
with ``repr`` (shortest round-trip form), so parse -> write is lossless.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .equity import HAOR, NON_HAOR, UpazilaRecord, composite_priority
from .errors import InvalidConfigError, RowError, SchemaViolationError
from .triage import AREA_TYPES, CLASSES, GENDERS, HOUSE_TYPES, TriageRecord

__all__ = [
    "Column",
    "Schema",
    "ParsedTable",
    "MATERNAL_SCHEMA",
    "DENGUE_SCHEMA",
    "PDNA_SCHEMA",
    "CLIENTS_COLUMNS",
    "data_dir",
    "parse_csv",
    "write_csv",
    "synth_dengue",
    "synth_pdna",
    "synth_maternal",
    "dengue_records",
    "pdna_records",
    "load_pdna_fixture",
    "DENGUE_DISTRICTS",
]


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # numeric | categorical | text
    required: bool = True
    minimum: float | None = None
    maximum: float | None = None
    allowed: tuple = ()
    integer: bool = False

    def parse(self, cell: str):
        if cell == "":
            if self.required:
                raise ValueError("value is required")
            return None
        if self.kind == "numeric":
            try:
                value = float(cell)
            except ValueError:
                raise ValueError(f"{cell!r} is not a number") from None
            if not math.isfinite(value):
                raise ValueError(f"{cell!r} is not finite")
            if self.minimum is not None and value < self.minimum:
                raise ValueError(f"{value} is below the minimum {self.minimum}")
            if self.maximum is not None and value > self.maximum:
                raise ValueError(f"{value} is above the maximum {self.maximum}")
            if self.integer:
                if value != int(value):
                    raise ValueError(f"{cell!r} is not a whole number")
                return int(value)
            return value
        if self.kind == "categorical" and cell not in self.allowed:
            raise ValueError(f"{cell!r} is not one of {list(self.allowed)}")
        return cell

    def format(self, value) -> str:
        if value is None:
            return ""
        if self.kind == "numeric" and not self.integer:
            return repr(float(value))
        return str(value)

    def describe(self) -> str:
        parts = [self.name, self.kind, "required" if self.required else "optional"]
        if self.kind == "numeric":
            lo = "-inf" if self.minimum is None else f"{self.minimum:g}"
            hi = "inf" if self.maximum is None else f"{self.maximum:g}"
            parts.append(f"{'integer ' if self.integer else ''}range [{lo}, {hi}]")
        if self.allowed:
            parts.append("values " + "|".join(self.allowed))
        return "  ".join(parts)


@dataclass(frozen=True)
class Schema:
    name: str
    columns: tuple

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"schema {self.name} has duplicate column names")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def describe(self) -> str:
        return "\n".join([f"schema {self.name}"] + ["  " + c.describe() for c in self.columns]) + "\n"


@dataclass
class ParsedTable:
    rows: list
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)


MATERNAL_SCHEMA = Schema(
    "maternal",
    (
        Column("Age", "numeric", minimum=10, maximum=70),
        Column("SystolicBP", "numeric", minimum=60, maximum=200),
        Column("DiastolicBP", "numeric", minimum=40, maximum=140),
        Column("BS", "numeric", minimum=1, maximum=30),
        Column("BodyTemp", "numeric", minimum=90, maximum=110),
        Column("HeartRate", "numeric", minimum=30, maximum=200),
        Column("RiskLevel", "categorical", required=False, allowed=("low risk", "mid risk", "high risk")),
    ),
)

DENGUE_SCHEMA = Schema(
    "dengue",
    (
        Column("age", "numeric", minimum=0, maximum=120),
        Column("gender", "categorical", allowed=GENDERS),
        Column("area_type", "categorical", allowed=AREA_TYPES),
        Column("house_type", "categorical", allowed=HOUSE_TYPES),
        Column("district", "text"),
        Column("outcome", "categorical", required=False, allowed=CLASSES),
    ),
)

PDNA_SCHEMA = Schema(
    "pdna",
    (
        Column("name", "text"),
        Column("district", "text"),
        Column("region_type", "categorical", allowed=(HAOR, NON_HAOR)),
        Column("poverty_rate", "numeric", minimum=0, maximum=1),
        Column("damage_usd_m", "numeric", minimum=0),
        Column("affected_population", "numeric", minimum=0, integer=True),
        Column("priority", "numeric", required=False, minimum=0, maximum=1),
    ),
)

CLIENTS_COLUMNS = ("client_id", "label")  # followed by x0..x{d-1}


def data_dir() -> Path:
    """Where user-supplied real datasets are looked up."""
    return Path(os.environ.get("FAIRHEALTH_DATA_DIR", Path.home() / ".fairhealth" / "data"))


def parse_csv(path, schema: Schema, fail_fast: bool = True) -> ParsedTable:
    """Read and validate a CSV file against ``schema``.

    Header order does not matter; unknown columns are ignored with a warning.
    A missing required column raises :class:`SchemaViolationError` before any
    row is read. Bad cells raise :class:`RowError` immediately when
    ``fail_fast`` is set, otherwise they are collected in ``errors`` and the
    offending rows are skipped.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaViolationError(f"{path}: empty file") from None
        missing = [c.name for c in schema.columns if c.required and c.name not in header]
        if missing:
            raise SchemaViolationError(f"{path}: missing required column(s) {missing}")
        table = ParsedTable([])
        extra = [h for h in header if h not in schema.names]
        if extra:
            msg = f"{path}: ignoring unknown column(s) {extra}"
            warnings.warn(msg, stacklevel=2)
            table.warnings.append(msg)
        position = {h: i for i, h in enumerate(header)}
        for cells in reader:
            line = reader.line_num
            if not cells:
                continue
            if len(cells) != len(header):
                err = RowError(line, "*", f"expected {len(header)} cells, got {len(cells)}")
                if fail_fast:
                    raise err
                table.errors.append(err)
                continue
            row, bad = {}, None
            for col in schema.columns:
                cell = cells[position[col.name]] if col.name in position else ""
                try:
                    row[col.name] = col.parse(cell)
                except ValueError as exc:
                    bad = RowError(line, col.name, str(exc))
                    break
            if bad is not None:
                if fail_fast:
                    raise bad
                table.errors.append(bad)
                continue
            table.rows.append(row)
    return table


def write_csv(path, rows: Sequence[dict], schema: Schema) -> None:
    """Write rows in schema column order using the documented dialect."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema.names)
    for row in rows:
        writer.writerow([col.format(row.get(col.name)) for col in schema.columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


# -- dengue ------------------------------------------------------------------

# (district, sampling weight, severity log-odds shift)
DENGUE_DISTRICTS = (
    ("Dhaka", 0.40, 0.5),
    ("Chattogram", 0.12, 0.3),
    ("Barishal", 0.08, 0.2),
    ("Coxsbazar", 0.06, 0.1),
    ("Gazipur", 0.06, 0.0),
    ("Narayanganj", 0.05, 0.0),
    ("Khulna", 0.05, -0.1),
    ("Rajshahi", 0.04, -0.3),
    ("Sylhet", 0.04, -0.2),
    ("Rangpur", 0.04, -0.4),
    ("Mymensingh", 0.03, -0.2),
    ("Cumilla", 0.03, 0.0),
)
_HOUSE_SHIFT = {"building": 0.0, "tinshed": 0.4, "other": 0.2}


def synth_dengue(seed: int, n: int = 4700) -> tuple[list[TriageRecord], list[str]]:
    """Seeded dengue records where age drives severity.

    Severity log-odds: ``-1.2 + 2.6 [age < 15] + 1.8 [age >= 60]`` plus
    smaller district and house-type shifts and ``+0.1`` for urban areas.
    Children and the elderly are therefore mostly Severe.
    """
    if n < 1:
        raise InvalidConfigError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    band = rng.choice(3, size=n, p=[0.30, 0.55, 0.15])
    lows, highs = np.array([1, 15, 60]), np.array([15, 60, 91])
    ages = rng.integers(lows[band], highs[band])
    genders = rng.choice(GENDERS, size=n)
    areas = rng.choice(AREA_TYPES, size=n, p=[0.6, 0.4])
    houses = rng.choice(HOUSE_TYPES, size=n, p=[0.45, 0.35, 0.20])
    names = [d[0] for d in DENGUE_DISTRICTS]
    weights = np.array([d[1] for d in DENGUE_DISTRICTS])
    district_idx = rng.choice(len(names), size=n, p=weights / weights.sum())
    shift = np.array([d[2] for d in DENGUE_DISTRICTS])[district_idx]

    logit = (
        -1.2
        + 2.6 * (ages < 15)
        + 1.8 * (ages >= 60)
        + shift
        + np.array([_HOUSE_SHIFT[h] for h in houses])
        + 0.1 * (areas == "urban")
    )
    severe = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))
    records = [
        TriageRecord(int(ages[i]), str(genders[i]), str(areas[i]), str(houses[i]), names[district_idx[i]])
        for i in range(n)
    ]
    return records, [CLASSES[int(s)] for s in severe]


def dengue_records(rows: Sequence[dict]) -> tuple[list[TriageRecord], list[str | None]]:
    records = [
        TriageRecord(r["age"], r["gender"], r["area_type"], r["house_type"], r["district"]) for r in rows
    ]
    return records, [r.get("outcome") for r in rows]


# -- PDNA --------------------------------------------------------------------

HAOR_DISTRICTS = ("Sunamganj", "Sylhet", "Habiganj", "Moulvibazar", "Netrokona", "Kishoreganj")
OTHER_DISTRICTS = ("Kurigram", "Gaibandha", "Jamalpur", "Sirajganj", "Bogura", "Lalmonirhat", "Nilphamari", "Sherpur")
N_UPAZILAS = 87
N_HAOR = 30


def synth_pdna(seed: int = 0) -> tuple[list[UpazilaRecord], np.ndarray]:
    """87 synthetic upazila records and their composite priority targets.

    Two rows are fixed anchors: Sunamganj (poverty 42.7%, $159.6M damage,
    the worst-hit unit) and Sylhet (second-worst, illustrative figures).
    The other 85 rows are drawn so that Haor units are poorer and more
    damaged on average, which is the regional correlation a debiased model
    has to work against. Targets come from
    :func:`fairhealth.equity.composite_priority`.
    """
    rng = np.random.default_rng(seed)
    pick = np.random.default_rng([seed, 1])
    records = [
        UpazilaRecord("Sunamganj", "Sunamganj", HAOR, 0.427, 159.6, 1_850_000),
        UpazilaRecord("Sylhet", "Sylhet", HAOR, 0.381, 82.4, 1_120_000),
    ]
    counters: dict = {}
    for i in range(N_UPAZILAS - 2):
        haor = i < N_HAOR - 2
        districts = HAOR_DISTRICTS if haor else OTHER_DISTRICTS
        district = districts[int(pick.integers(len(districts)))]
        counters[district] = counters.get(district, 0) + 1
        poverty = float(np.clip(rng.normal(0.33 if haor else 0.21, 0.06), 0.05, 0.36))
        damage = float(np.clip(rng.lognormal(math.log(22.0 if haor else 9.0), 0.6), 0.5, 60.0))
        people = int(np.clip(damage * rng.lognormal(math.log(11_000), 0.25), 1_000, 900_000))
        records.append(
            UpazilaRecord(
                f"{district} U{counters[district]:02d}",
                district,
                HAOR if haor else NON_HAOR,
                round(poverty, 3),
                round(damage, 1),
                people,
            )
        )
    return records, composite_priority(records)


def pdna_records(rows: Sequence[dict]) -> tuple[list[UpazilaRecord], list[float | None]]:
    records = [
        UpazilaRecord(
            r["name"], r["district"], r["region_type"], r["poverty_rate"], r["damage_usd_m"], r["affected_population"]
        )
        for r in rows
    ]
    return records, [r.get("priority") for r in rows]


def pdna_rows(records: Sequence[UpazilaRecord], targets=None) -> list[dict]:
    rows = []
    for i, r in enumerate(records):
        rows.append(
            {
                "name": r.name,
                "district": r.district,
                "region_type": r.region_type,
                "poverty_rate": r.poverty_rate,
                "damage_usd_m": r.damage_usd_m,
                "affected_population": r.affected_population,
                "priority": None if targets is None else float(targets[i]),
            }
        )
    return rows


def dengue_rows(records: Sequence[TriageRecord], labels=None) -> list[dict]:
    return [
        {
            "age": r.age,
            "gender": r.gender,
            "area_type": r.area_type,
            "house_type": r.house_type,
            "district": r.district,
            "outcome": None if labels is None else labels[i],
        }
        for i, r in enumerate(records)
    ]


def load_pdna_fixture() -> tuple[list[UpazilaRecord], np.ndarray]:
    """The bundled PDNA-schema fixture (``synth_pdna(seed=0)`` written to CSV)."""
    with resources.as_file(resources.files("fairhealth").joinpath("data/pdna_fixture.csv")) as path:
        table = parse_csv(path, PDNA_SCHEMA)
    records, targets = pdna_records(table.rows)
    return records, np.array(targets, dtype=np.float64)


# -- maternal ----------------------------------------------------------------


def synth_maternal(seed: int, n: int = 1014) -> list[dict]:
    """Seeded vital-sign rows labelled by the bundled fuzzy rule base."""
    from .fuzzy import risk_score, score_to_label

    if n < 1:
        raise InvalidConfigError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        age = int(rng.integers(13, 61))
        sbp = int(np.clip(rng.normal(115 + 0.4 * (age - 25), 18), 70, 180))
        dbp = int(np.clip(sbp * rng.uniform(0.6, 0.7), 45, 120))
        bs = round(float(np.clip(rng.lognormal(math.log(7.0), 0.35), 3.0, 19.0)), 1)
        temp = round(float(rng.choice([98.0, 98.0, 98.0, 99.0, 100.0, 101.0, 102.0])), 1)
        hr = int(np.clip(rng.normal(76, 8), 55, 100))
        label = score_to_label(risk_score(age, sbp, bs, hr))
        rows.append(
            {"Age": float(age), "SystolicBP": float(sbp), "DiastolicBP": float(dbp), "BS": bs,
             "BodyTemp": temp, "HeartRate": float(hr), "RiskLevel": label}
        )
    return rows
