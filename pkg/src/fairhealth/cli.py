"""Batch command-line front end: ``fairhealth <subcommand> [flags]``.

Structured output is JSON with sorted keys, UTF-8 text and floats rounded to
9 significant digits; ``fedsim`` writes one JSON object per line. Infinite
values are written as the string ``"inf"``. Diagnostics go to stderr only.

Exit codes: 0 success, 2 usage error, 3 input or schema error, 4 numerical
failure during training.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import data_io, equity, fairness, fedsim, fuzzy, triage
from .errors import FairHealthError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4


def _clean(obj):
    if isinstance(obj, dict):
        return {_key(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.9g}")
    return obj


def _key(k):
    return "|".join(map(str, k)) if isinstance(k, tuple) else str(k)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, ensure_ascii=False)


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute() and (data_io.data_dir() / p).exists():
        return data_io.data_dir() / p
    return p


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


# -- subcommands -------------------------------------------------------------


def cmd_audit(args, out):
    with open(_resolve(args.input), encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    group_cols = [c.strip() for c in args.group_cols.split(",") if c.strip()]
    needed = [args.pred_col, *group_cols] + ([args.truth_col] if args.truth_col else [])
    missing = [c for c in needed if c not in header]
    if missing:
        raise FairHealthError(f"{args.input}: missing column(s) {missing}")

    def labels(col):
        try:
            return [int(r[col]) for r in rows]
        except ValueError:
            raise FairHealthError(f"column {col!r} must hold 0/1 labels") from None

    preds = labels(args.pred_col)
    truths = labels(args.truth_col) if args.truth_col else None
    report = fairness.intersectional_fairness(
        preds, [[r[c] for r in rows] for c in group_cols], truths, args.min_group_size
    )
    out.write(dumps(report.as_dict()) + "\n")


def cmd_fedsim(args, out):
    config = fedsim.FederatedConfig(
        num_clients=args.clients,
        rounds=args.rounds,
        local_epochs=args.local_epochs,
        learning_rate=args.learning_rate,
        sparsity=args.sparsity,
        epsilon=args.epsilon,
        delta=args.delta,
        clip_norm=args.clip,
        seed=args.seed,
        samples_per_client=args.samples_per_client,
        num_features=args.features,
        heterogeneity=args.heterogeneity,
    )
    history, _ = fedsim.run_federated(config, args.mode)
    for m in history:
        out.write(dumps({"mode": args.mode, **m.as_dict()}) + "\n")


def cmd_explain(args, out):
    engine = fuzzy.load_engine(args.rules) if args.rules else None
    rules = fuzzy.get_fired_rules(args.age, args.sbp, args.bs, args.hr, engine)
    score = fuzzy.risk_score(args.age, args.sbp, args.bs, args.hr, engine)
    label = fuzzy.score_to_label(score)
    if args.format == "json":
        out.write(dumps({"fired_rules": rules, "risk_score": score, "risk_label": label}) + "\n")
        return
    for r in rules:
        out.write(fuzzy.format_rule(r) + "\n")
    out.write(f"Risk score: {score:.9g}\n")
    out.write(f"Risk label: {label}\n")


def cmd_triage(args, out):
    model = triage.load_tree(args.model) if args.model else None
    result = triage.assess_dengue_risk(
        args.age, args.gender, args.area_type, args.district, args.language, model, args.house_type
    )
    out.write(dumps(result.as_dict()) + "\n")


def cmd_rank_aid(args, out):
    if args.input:
        table = data_io.parse_csv(_resolve(args.input), data_io.PDNA_SCHEMA)
        records, given = data_io.pdna_records(table.rows)
        if all(t is not None for t in given):
            targets = np.array(given, dtype=np.float64)
        else:
            targets = equity.composite_priority(records)
    else:
        records, targets = data_io.load_pdna_fixture()
    common = dict(seed=args.seed, epochs=args.epochs, learning_rate=args.learning_rate)
    base_cfg = equity.DebiasConfig(lam=0.0, **common)
    fair_cfg = equity.DebiasConfig(lam=args.lam, **common)
    baseline = equity.train_fair_regressor(records, targets, base_cfg)
    fair = equity.train_fair_regressor(records, targets, fair_cfg)
    base_rank = equity.generate_priority_ranking(records, baseline, args.verbose)
    fair_rank = equity.generate_priority_ranking(records, fair, args.verbose)
    changed, deltas = equity.ranking_shift(base_rank, fair_rank)
    regions = [r.region_type for r in records]
    base_scores, fair_scores = baseline.predict(records), fair.predict(records)
    spd = {
        "baseline": equity.statistical_parity_difference(base_scores, regions),
        "fair": equity.statistical_parity_difference(fair_scores, regions),
    }
    gap = {
        "baseline": equity.regional_fairness_gap(base_scores, targets, regions),
        "fair": equity.regional_fairness_gap(fair_scores, targets, regions),
    }
    if args.format == "json":
        doc = {
            "lambda": args.lam,
            "seed": args.seed,
            "ranking": fair_rank.as_records(),
            "baseline_ranking": base_rank.as_records(),
            "shift": {"changed_fraction": changed, "deltas": deltas},
            "statistical_parity_difference": spd,
            "regional_fairness_gap": gap,
        }
        out.write(dumps(doc) + "\n")
        return
    out.write(str(fair_rank) + "\n\n")
    n = len(records)
    out.write(f"Ranking shift: {round(changed * n)} of {n} upazilas changed rank ({changed:.1%})\n")
    out.write(f"Statistical parity difference: {spd['baseline']:.4f} -> {spd['fair']:.4f}\n")
    out.write(f"Regional fairness gap: {gap['baseline']:.4f} -> {gap['fair']:.4f}\n")


def _n(args, default):
    return default if args.n is None else args.n


def cmd_gen_data(args, out_stream):
    out = Path(args.out)
    if args.kind == "dengue":
        records, labels = data_io.synth_dengue(args.seed, _n(args, 4700))
        data_io.write_csv(out, data_io.dengue_rows(records, labels), data_io.DENGUE_SCHEMA)
    elif args.kind == "pdna":
        records, targets = data_io.synth_pdna(args.seed)
        data_io.write_csv(out, data_io.pdna_rows(records, targets), data_io.PDNA_SCHEMA)
    elif args.kind == "maternal":
        data_io.write_csv(out, data_io.synth_maternal(args.seed, _n(args, 1014)), data_io.MATERNAL_SCHEMA)
    else:
        config = fedsim.FederatedConfig(seed=args.seed, samples_per_client=_n(args, 500))
        clients = fedsim.partition_synthetic(config)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([*data_io.CLIENTS_COLUMNS, *(f"x{j}" for j in range(config.num_features))])
            for c in clients:
                for x, y in zip(c.features, c.labels):
                    writer.writerow([c.client_id, int(y), *(repr(float(v)) for v in x)])
    print(f"wrote {out}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairhealth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="fairness audit of a predictions CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--pred-col", required=True)
    p.add_argument("--group-cols", required=True, help="comma-separated sensitive attribute columns")
    p.add_argument("--truth-col")
    p.add_argument("--min-group-size", type=int, default=1)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("fedsim", help="federated learning simulation")
    p.add_argument("--mode", choices=fedsim.MODES, default="dense")
    p.add_argument("--sparsity", type=float, default=0.9)
    p.add_argument("--epsilon", type=_positive_float, default=math.inf)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--clip", type=_positive_float, default=1.0)
    p.add_argument("--rounds", type=int, default=30)
    p.add_argument("--clients", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples-per-client", type=int, default=500)
    p.add_argument("--features", type=int, default=10)
    p.add_argument("--local-epochs", type=int, default=5)
    p.add_argument("--learning-rate", type=_positive_float, default=0.5)
    p.add_argument("--heterogeneity", type=float, default=0.0)
    p.set_defaults(func=cmd_fedsim)

    p = sub.add_parser("explain", help="fuzzy-rule maternal risk explanation")
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--sbp", type=float, required=True)
    p.add_argument("--bs", type=float, required=True)
    p.add_argument("--hr", type=float, required=True)
    p.add_argument("--rules", help="rule-base file (default: bundled table)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("triage", help="dengue triage for one patient")
    p.add_argument("--age", type=float, required=True)
    p.add_argument("--gender", required=True)
    p.add_argument("--area-type", required=True)
    p.add_argument("--district", required=True)
    p.add_argument("--house-type")
    p.add_argument("--language", choices=triage.LANGUAGES, default="english")
    p.add_argument("--model", help="serialized tree (default: bundled reference tree)")
    p.set_defaults(func=cmd_triage)

    p = sub.add_parser("rank-aid", help="debiased flood-aid priority ranking")
    p.add_argument("--input", help="PDNA-schema CSV (default: bundled fixture)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=equity.DebiasConfig().epochs)
    p.add_argument("--learning-rate", type=_positive_float, default=equity.DebiasConfig().learning_rate)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_rank_aid)

    p = sub.add_parser("gen-data", help="write a seeded synthetic dataset")
    p.add_argument("--kind", choices=("dengue", "pdna", "clients", "maternal"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        args.func(args, out)
    except (FairHealthError, OSError, csv.Error) as exc:
        print(f"fairhealth {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"fairhealth {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
