"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test prints one ``[AC-n] PASS|FAIL`` line (visible without ``-s``).
Run just this suite with ``pytest tests/test_acceptance.py -v``.
"""

import io
import json
import math
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import oracles
from fairhealth import cli
from fairhealth.data_io import synth_dengue, synth_pdna
from fairhealth.equity import (
    PARAM_NAMES,
    DebiasConfig,
    backprop,
    generate_priority_ranking,
    grl_backward,
    init_params,
    loss_terms,
    ranking_shift,
    statistical_parity_difference,
    train_fair_regressor,
)
from fairhealth.errors import DegenerateGroupError, InsufficientGroupsError
from fairhealth.fairness import demographic_parity_diff, disparate_impact, equalized_odds_diff
from fairhealth.fedsim import FederatedConfig, membership_attack_scenario, run_federated
from fairhealth.fuzzy import format_rule, get_fired_rules, risk_score, score_to_label
from fairhealth.privacy import add_gaussian_noise, comm_cost, gaussian_sigma, sparsify
from fairhealth.triage import (
    DecisionTree,
    Node,
    assess_dengue_risk,
    gini_feature_importance,
    gini_impurity,
    train_tree,
)

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number, title, budget_s):
        notes = []
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield notes
            elapsed = time.perf_counter() - start
            assert elapsed < budget_s, f"took {elapsed:.2f}s, budget {budget_s}s"
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - start
            detail = "; ".join(notes)
            with capsys.disabled():
                print(f"\n[AC-{number}] {status} {title} ({elapsed:.2f}s / {budget_s}s) {detail}")

    return run


def test_ac01_fairness_oracle(criterion):
    with criterion(1, "fairness metrics vs brute force", 5) as notes:
        rng = np.random.default_rng(2024)
        worst, eod_checked = 0.0, 0
        for _ in range(1000):
            n = int(rng.integers(2, 31))
            groups = rng.integers(0, int(rng.integers(2, 5)), n).tolist()
            preds = rng.integers(0, 2, n).tolist()
            truths = rng.integers(0, 2, n).tolist()
            try:
                d = demographic_parity_diff(preds, groups)
            except InsufficientGroupsError:
                assert len(set(groups)) < 2
                continue
            worst = max(worst, abs(d - float(oracles.dpd(preds, groups))))
            worst = max(worst, abs(disparate_impact(preds, groups) - float(oracles.di(preds, groups))))
            try:
                e = equalized_odds_diff(truths, preds, groups)
            except DegenerateGroupError:
                continue
            eod_checked += 1
            worst = max(worst, abs(e - float(oracles.eod(truths, preds, groups))))
        assert worst <= 1e-12
        di = disparate_impact([1] * 23 + [0] * 77 + [1] * 100, ["a"] * 100 + ["b"] * 100)
        assert di == 0.23 and Fraction(di).limit_denominator(1000) == Fraction(23, 100)
        notes += [f"max err {worst:.1e}", f"eod instances {eod_checked}", f"di={di!r}"]


def test_ac02_dp_calibration(criterion):
    with criterion(2, "Gaussian mechanism calibration", 10) as notes:
        sigma = gaussian_sigma(1.0, 1.0, 1e-5)
        assert sigma == pytest.approx(4.8448, abs=5e-5)
        draws = add_gaussian_noise(np.zeros(100_000), 1.0, 1e-5, 1.0, seed=0)
        ratio = draws.std() / sigma
        assert abs(ratio - 1.0) < 0.05
        w = np.random.default_rng(1).standard_normal(257)
        assert add_gaussian_noise(w, epsilon=math.inf).tobytes() == w.tobytes()
        notes += [f"sigma={sigma:.6f}", f"empirical/analytic={ratio:.4f}"]


def test_ac03_sparsification(criterion):
    with criterion(3, "top-k sparsification and byte accounting", 1) as notes:
        w = np.random.default_rng(3).standard_normal(1000)
        update, rate = sparsify(w, 0.975)
        assert update.indices.size == 25
        assert set(update.indices.tolist()) == set(np.argsort(-np.abs(w))[:25].tolist())
        cost = comm_cost(1000, 0.975, mode="value_only")
        assert cost.reduction == 0.975
        notes += [f"kept={update.indices.size}", f"rate={rate!r}", f"reduction={cost.reduction!r}"]


def test_ac04_federated_equivalence(criterion):
    with criterion(4, "dense vs sparse FedAvg macro-F1", 60) as notes:
        gaps = []
        for seed in range(3):
            cfg = FederatedConfig(num_clients=4, samples_per_client=500, num_features=10, rounds=30, sparsity=0.9, seed=seed)
            dense, _ = run_federated(cfg, "dense")
            sparse, _ = run_federated(cfg, "sparse")
            gaps.append(abs(dense[-1].macro_f1 - sparse[-1].macro_f1))
            notes.append(f"seed {seed}: dense {dense[-1].macro_f1:.4f} sparse {sparse[-1].macro_f1:.4f}")
        assert max(gaps) <= 0.03
        notes.append(f"max gap {max(gaps):.4f}")


def test_ac05_mia_direction(criterion):
    with criterion(5, "membership attack: DP no easier than non-DP", 60) as notes:
        for seed in range(5):
            plain = membership_attack_scenario(seed)
            private = membership_attack_scenario(seed, epsilon=1.0)
            notes.append(f"seed {seed}: {plain:.3f} vs {private:.3f}")
            assert plain > 0.55
            assert private <= plain


def test_ac06_fuzzy_golden(criterion):
    with criterion(6, "fuzzy explanation of the reference patient", 1) as notes:
        fired = {r["id"]: r for r in get_fired_rules(42, 145, 12.0, 88)}
        assert format_rule(fired[1]) == "Rule 1: High BP AND High Blood Sugar -> HIGH RISK"
        assert format_rule(fired[5]) == "Rule 5: High Heart Rate AND High BP -> HIGH RISK"
        assert fired[1]["activation"] == 1.0
        assert fired[5]["activation"] == pytest.approx(0.4, abs=1e-12)
        score = risk_score(42, 145, 12.0, 88)
        assert score_to_label(score) == "high risk"
        notes += [f"score={score:.6f}", f"fired={sorted(fired)}"]


def _stump(mild, severe):
    vocab = {"gender": ["female", "male"], "area_type": ["rural", "urban"],
             "house_type": ["building"], "district": ["Dhaka"]}
    left = Node((mild, severe), gini_impurity((mild, severe)))
    root = Node((mild, severe + 100), 0.4, "age", 10.0, None, left, Node((0, 100), 0.0), "right")
    return DecisionTree(root, 1, 1, vocab, "building")


def test_ac07_triage(criterion):
    with criterion(7, "dengue triage reference case, reroute boundary, importance", 30) as notes:
        res = assess_dengue_risk(8, "male", "urban", "Dhaka", "bangla")
        assert (res.prediction, res.recommendation, res.rerouted) == ("Severe", "অবিলম্বে চিকিৎসা সহায়তা নিন", False)
        for mild, severe, rerouted in [(31, 69, True), (30, 70, False), (29, 71, False)]:
            r = assess_dengue_risk(5, "male", "urban", "Dhaka", model=_stump(mild, severe))
            assert (r.confidence, r.rerouted) == (severe / 100, rerouted)
        top = []
        for seed in (0, 1, 2023):
            records, labels = synth_dengue(seed, 5000)
            imp = gini_feature_importance(train_tree(records, labels, 4, 20))
            top.append(max(imp, key=imp.get))
            notes.append(f"seed {seed}: age importance {imp['age']:.3f}")
        assert top == ["age"] * 3
        notes.insert(0, f"reference case confidence {res.confidence:.4f}")


def test_ac08_grl(criterion):
    with criterion(8, "gradient reversal and backprop vs finite differences", 10) as notes:
        g = np.random.default_rng(0).standard_normal(17)
        assert np.array_equal(grl_backward(g, 0.0), np.zeros(17))
        assert np.array_equal(grl_backward(g, 1.0), -g)
        assert np.array_equal(grl_backward(g, 0.25), -0.25 * g)
        worst = 0.0
        for lam in (0.0, 1.0):
            for seed in range(3):
                rng = np.random.default_rng(seed)
                X, y = rng.standard_normal((6, 3)), rng.uniform(0, 1, 6)
                region = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
                params = init_params(3, 8, seed)
                analytic = backprop(params, X, y, region, lam, 8.0)
                for name in PARAM_NAMES:
                    task = _fd(lambda p: 8.0 * loss_terms(p, X, y, region)[0], params, name)
                    adv = _fd(lambda p: loss_terms(p, X, y, region)[1], params, name)
                    expected = {"W1": task - lam * adv, "b1": task - lam * adv, "wp": task, "bp": task}.get(name, adv)
                    err = np.max(np.abs(analytic[name] - expected)) / max(np.max(np.abs(expected)), 1e-8)
                    worst = max(worst, err)
        assert worst <= 1e-4
        notes.append(f"max relative error {worst:.1e}")


def _fd(f, params, name, h=1e-6):
    out = np.zeros_like(np.asarray(params[name], dtype=np.float64))
    for idx in np.ndindex(out.shape):
        plus = {k: np.array(v, copy=True) for k, v in params.items()}
        minus = {k: np.array(v, copy=True) for k, v in params.items()}
        plus[name][idx] += h
        minus[name][idx] -= h
        out[idx] = (f(plus) - f(minus)) / (2 * h)
    return out


def test_ac09_equity_debiasing(criterion):
    with criterion(9, "adversarial debiasing cuts regional parity gap", 60) as notes:
        for seed in range(3):
            records, targets = synth_pdna(seed)
            regions = [r.region_type for r in records]
            base = train_fair_regressor(records, targets, DebiasConfig(lam=0.0, seed=seed))
            fair = train_fair_regressor(records, targets, DebiasConfig(lam=1.0, seed=seed))
            spd0 = statistical_parity_difference(base.predict(records), regions)
            spd1 = statistical_parity_difference(fair.predict(records), regions)
            changed, _ = ranking_shift(
                generate_priority_ranking(records, base), generate_priority_ranking(records, fair)
            )
            notes.append(f"seed {seed}: SPD {spd0:.4f}->{spd1:.4f} ({1 - spd1 / spd0:.1%} cut), shift {changed:.2f}")
            assert spd1 <= 0.7 * spd0
            assert changed > 0
        top = [e.name for e in generate_priority_ranking().entries[:2]]
        assert top == ["Sunamganj", "Sylhet"]
        notes.append(f"fixture top 2 {top}")


def _cli(argv):
    out = io.StringIO()
    code = cli.main(argv, out)
    assert code == 0, argv
    return out.getvalue()


def test_ac10_cli_golden(criterion, tmp_path):
    with criterion(10, "CLI goldens, audit parity, seeded determinism", 30) as notes:
        explain = _cli(["explain", "--age", "42", "--sbp", "145", "--bs", "12.0", "--hr", "88"])
        assert explain.encode() == (GOLDEN / "explain_42_145_12_88.txt").read_bytes()
        assert "Rule 1: High BP AND High Blood Sugar -> HIGH RISK" in explain
        triage = _cli(["triage", "--age", "8", "--gender", "male", "--area-type", "urban",
                       "--district", "Dhaka", "--language", "bangla"])
        assert triage.encode() == (GOLDEN / "triage_8_male_urban_dhaka_bangla.json").read_bytes()
        assert "অবিলম্বে চিকিৎসা সহায়তা নিন" in triage

        preds = [1] * 23 + [0] * 77 + [1] * 100
        groups = ["a"] * 100 + ["b"] * 100
        csv_path = tmp_path / "preds.csv"
        csv_path.write_text("pred,group\n" + "".join(f"{p},{g}\n" for p, g in zip(preds, groups)))
        audit = json.loads(_cli(["audit", "--input", str(csv_path), "--pred-col", "pred", "--group-cols", "group"]))
        assert audit["di"] == disparate_impact(preds, groups)
        assert audit["dpd"] == pytest.approx(demographic_parity_diff(preds, groups), rel=1e-9)

        seeded = [
            ["fedsim", "--mode", "sparse_dp", "--epsilon", "1", "--rounds", "10", "--seed", "7"],
            ["rank-aid", "--seed", "3", "--format", "json"],
        ]
        for argv in seeded:
            assert _cli(argv) == _cli(argv)
        for kind in ("dengue", "pdna", "clients", "maternal"):
            a, b = tmp_path / f"{kind}1.csv", tmp_path / f"{kind}2.csv"
            _cli(["gen-data", "--kind", kind, "--seed", "5", "--out", str(a)])
            _cli(["gen-data", "--kind", kind, "--seed", "5", "--out", str(b)])
            assert a.read_bytes() == b.read_bytes()
        notes.append("goldens byte-equal; audit di 0.23; 6 seeded commands repeatable")
