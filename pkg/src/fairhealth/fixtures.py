"""Rebuild the data files bundled in ``fairhealth/data``.

Run ``python -m fairhealth.fixtures [OUTDIR]``; the default output directory
is the package's own data directory. Every file is a pure function of the
seeds below, and the test suite checks that the bundled copies match a fresh
rebuild.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .data_io import (
    DENGUE_SCHEMA,
    PDNA_SCHEMA,
    dengue_rows,
    parse_csv,
    pdna_records,
    pdna_rows,
    synth_dengue,
    synth_pdna,
    write_csv,
)
from .equity import DebiasConfig, train_fair_regressor
from .triage import dumps_tree, train_tree

PDNA_SEED = 0
DENGUE_SEED = 2023
DENGUE_N = 4700
TREE_DEPTH = 4
TREE_MIN_LEAF = 20
REFERENCE_DEBIAS = DebiasConfig(lam=1.0, seed=0)

PROVENANCE = f"""\
Bundled fixtures. All files are synthetic and regenerated by
`python -m fairhealth.fixtures`.

pdna_fixture.csv
    synth_pdna(seed={PDNA_SEED}): 87 upazilas in the PDNA schema. Rows
    "Sunamganj" (poverty 0.427, damage 159.6 M USD) and "Sylhet" are fixed
    anchors; all other rows and the Sylhet figures are synthetic. The
    `priority` column is the reference target
        0.5 * damage_n + 0.3 * poverty_n + 0.2 * affected_n
    where each *_n is the min-max normalized column of poverty_rate,
    log1p(damage_usd_m) and log1p(affected_population).

pdna_reference_model.json
    train_fair_regressor on pdna_fixture.csv with {REFERENCE_DEBIAS}.

dengue_reference_tree.txt
    train_tree(synth_dengue(seed={DENGUE_SEED}, n={DENGUE_N}), max_depth={TREE_DEPTH},
    min_leaf={TREE_MIN_LEAF}). Seed chosen so that an 8-year-old urban male in
    Dhaka is triaged as Severe with confidence of at least 0.70.

dengue_sample.csv
    First 20 rows of synth_dengue(seed={DENGUE_SEED}) in the dengue schema.
"""


def build_fixtures(outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    records, targets = synth_pdna(PDNA_SEED)
    write_csv(out / "pdna_fixture.csv", pdna_rows(records, targets), PDNA_SCHEMA)
    parsed, parsed_targets = pdna_records(parse_csv(out / "pdna_fixture.csv", PDNA_SCHEMA).rows)
    model = train_fair_regressor(parsed, parsed_targets, REFERENCE_DEBIAS)
    (out / "pdna_reference_model.json").write_text(model.to_json(), encoding="utf-8")

    dengue, labels = synth_dengue(DENGUE_SEED, DENGUE_N)
    tree = train_tree(dengue, labels, TREE_DEPTH, TREE_MIN_LEAF)
    (out / "dengue_reference_tree.txt").write_text(dumps_tree(tree), encoding="utf-8")
    write_csv(out / "dengue_sample.csv", dengue_rows(dengue[:20], labels[:20]), DENGUE_SCHEMA)

    (out / "PROVENANCE.txt").write_text(PROVENANCE, encoding="utf-8")


if __name__ == "__main__":
    build_fixtures(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data")
