"""Mamdani fuzzy rules for ante-hoc maternal-risk explanations.

The rule base lives in a tab-separated text file (``data/maternal_rules.tsv``)
that clinicians can read and edit; :func:`load_engine` reads any file in the
same format and the bundled table is used by default.

The bundled base has seven rules. The wording of rules 1 and 5 is fixed
because downstream consumers match it verbatim. Breakpoints are calibrated so
that the reference patient (age 42, SBP 145, BS 12.0, HR 88) fires both.

>>> for r in get_fired_rules(age=42, sbp=145, bs=12.0, hr=88)[:2]:
...     print(format_rule(r))
Rule 1: High BP AND High Blood Sugar -> HIGH RISK
Rule 3: High Blood Sugar -> MID RISK
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

__all__ = [
    "Trapezoid",
    "FuzzyRule",
    "FuzzyEngine",
    "load_engine",
    "default_engine",
    "fuzzify",
    "get_fired_rules",
    "risk_score",
    "score_to_label",
    "format_rule",
]

INPUTS = ("age", "sbp", "bs", "hr")
RISK_GRID = np.linspace(0.0, 1.0, 1001)


@dataclass(frozen=True)
class Trapezoid:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c <= self.d):
            raise InvalidConfigError(f"trapezoid breakpoints out of order: {self}")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        y = np.where((x >= self.b) & (x <= self.c), 1.0, 0.0)
        rising = (x > self.a) & (x < self.b)
        falling = (x > self.c) & (x < self.d)
        # unselected branches may divide by ~0; np.where discards them
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            y = np.where(rising, (x - self.a) / (self.b - self.a), y)
            y = np.where(falling, (self.d - x) / (self.d - self.c), y)
        y = np.clip(y, 0.0, 1.0)
        return y if y.ndim else float(y)


@dataclass(frozen=True)
class FuzzyRule:
    id: int
    antecedent: tuple  # ((variable, term), ...)
    consequent: str
    condition: str
    outcome: str


@dataclass(frozen=True)
class FuzzyEngine:
    variables: dict  # variable -> {term: Trapezoid}
    rules: tuple

    def __post_init__(self):
        if "risk" not in self.variables:
            raise InvalidConfigError("rule base has no 'risk' output variable")
        for rule in self.rules:
            if not rule.antecedent:
                raise InvalidConfigError(f"rule {rule.id} has an empty antecedent")
            for var, term in rule.antecedent:
                if term not in self.variables.get(var, {}):
                    raise InvalidConfigError(f"rule {rule.id} references unknown term {var}={term}")
            if rule.consequent not in self.variables["risk"]:
                raise InvalidConfigError(f"rule {rule.id} has unknown consequent {rule.consequent}")

    @classmethod
    def from_text(cls, text: str) -> "FuzzyEngine":
        variables: dict = {}
        rules = []
        section = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in ("[terms]", "[rules]"):
                section = line[1:-1]
                continue
            cells = raw.split("\t")
            try:
                if section == "terms":
                    var, term, *bps = cells
                    variables.setdefault(var, {})[term] = Trapezoid(*(float(v) for v in bps))
                elif section == "rules":
                    rid, ante, cons, cond, out = cells
                    pairs = tuple(tuple(p.strip().split("=")) for p in ante.split("&"))
                    rules.append(FuzzyRule(int(rid), pairs, cons.strip(), cond, out))
                else:
                    raise ValueError("row outside a [terms] or [rules] section")
            except (TypeError, ValueError) as exc:
                raise InvalidConfigError(f"rule base line {lineno}: {exc}") from None
        return cls(variables, tuple(rules))

    def to_text(self) -> str:
        lines = ["[terms]"]
        for var, terms in self.variables.items():
            for term, t in terms.items():
                lines.append("\t".join([var, term] + [_fmt(v) for v in (t.a, t.b, t.c, t.d)]))
        lines += ["", "[rules]"]
        for r in self.rules:
            ante = " & ".join(f"{v}={t}" for v, t in r.antecedent)
            lines.append("\t".join([str(r.id), ante, r.consequent, r.condition, r.outcome]))
        return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def load_engine(path) -> FuzzyEngine:
    return FuzzyEngine.from_text(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_engine() -> FuzzyEngine:
    text = resources.files("fairhealth").joinpath("data/maternal_rules.tsv").read_text(encoding="utf-8")
    return FuzzyEngine.from_text(text)


def fuzzify(variable: str, x: float, engine: FuzzyEngine | None = None) -> dict:
    """Membership of ``x`` in every term of ``variable``."""
    engine = engine or default_engine()
    if not math.isfinite(x):
        raise InvalidInputError(f"{variable} must be finite, got {x}")
    return {term: float(mf(x)) for term, mf in engine.variables[variable].items()}


def _activations(engine: FuzzyEngine, inputs: dict) -> list[tuple[FuzzyRule, float]]:
    memberships = {var: fuzzify(var, x, engine) for var, x in inputs.items()}
    return [
        (rule, min(memberships[var][term] for var, term in rule.antecedent))
        for rule in engine.rules
    ]


def _inputs(age, sbp, bs, hr) -> dict:
    return {"age": float(age), "sbp": float(sbp), "bs": float(bs), "hr": float(hr)}


def get_fired_rules(age, sbp, bs, hr, engine: FuzzyEngine | None = None) -> list[dict]:
    """Rules with non-zero activation, strongest first (ties by rule id).

    Each entry is a dict with keys ``id``, ``condition``, ``outcome`` and
    ``activation``.
    """
    engine = engine or default_engine()
    fired = [
        {"id": rule.id, "condition": rule.condition, "outcome": rule.outcome, "activation": act}
        for rule, act in _activations(engine, _inputs(age, sbp, bs, hr))
        if act > 0.0
    ]
    return sorted(fired, key=lambda r: (-r["activation"], r["id"]))


def risk_score(age, sbp, bs, hr, engine: FuzzyEngine | None = None) -> float:
    """Defuzzified risk in [0, 1].

    Each fired rule clips its consequent term at its activation, the clipped
    terms are combined by pointwise max, and the centroid is taken over a
    1001-point grid on [0, 1]. Returns 0.5 when nothing fires.
    """
    engine = engine or default_engine()
    risk_terms = engine.variables["risk"]
    aggregate = np.zeros_like(RISK_GRID)
    for rule, act in _activations(engine, _inputs(age, sbp, bs, hr)):
        if act > 0.0:
            aggregate = np.maximum(aggregate, np.minimum(act, risk_terms[rule.consequent](RISK_GRID)))
    area = aggregate.sum()
    if area == 0.0:
        return 0.5
    return float((RISK_GRID * aggregate).sum() / area)


def score_to_label(score: float) -> str:
    if not (0.0 <= score <= 1.0):
        raise InvalidInputError(f"risk score must lie in [0, 1], got {score}")
    if score < 0.33:
        return "low risk"
    if score < 0.66:
        return "mid risk"
    return "high risk"


def format_rule(rule: dict) -> str:
    return f"Rule {rule['id']}: {rule['condition']} -> {rule['outcome']}"
