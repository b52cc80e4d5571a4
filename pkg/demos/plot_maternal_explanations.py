"""
Explaining maternal risk with fuzzy rules
=========================================

The risk model is a small Mamdani rule base, so every prediction comes with
the rules that produced it.
"""

from fairhealth.fuzzy import default_engine, fuzzify, get_fired_rules, risk_score, score_to_label

patient = dict(age=42, sbp=145, bs=12.0, hr=88)
for rule in get_fired_rules(**patient):
    print(f"Rule {rule['id']}: {rule['condition']} -> {rule['outcome']}  (strength {rule['activation']:.2f})")
score = risk_score(**patient)
print(f"score {score:.3f}: {score_to_label(score)}")

###############################################################################
# Memberships are graded. A heart rate of 88 is partly "High", which is why
# the heart-rate rule fires at 0.4 rather than 1.

print("heart rate 88:", fuzzify("hr", 88))

###############################################################################
# A healthy profile fires only low-risk rules.

calm = dict(age=25, sbp=110, bs=5.0, hr=70)
print([r["id"] for r in get_fired_rules(**calm)], score_to_label(risk_score(**calm)))
print(f"{len(default_engine().rules)} rules in the bundled base")
