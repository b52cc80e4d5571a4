"""
Auditing a classifier for group fairness
========================================

Screening models can look accurate overall while treating groups very
differently. Here a toy model flags 23 of 100 women and all 100 men.
"""

import numpy as np

from fairhealth.fairness import fairness_summary, intersectional_fairness

preds = np.array([1] * 23 + [0] * 77 + [1] * 100)
sex = ["female"] * 100 + ["male"] * 100

report = fairness_summary(preds, sex)
print("positive rates:", report.per_group_positive_rates)
print(f"parity difference {report.dpd:.2f}, disparate impact {report.di:.2f}")

###############################################################################
# A disparate impact of 0.23 is far below the usual four-fifths rule.
# Adding ground truth lets us check error rates too.

rng = np.random.default_rng(0)
truth = rng.integers(0, 2, preds.size)
print(f"equalized odds difference {fairness_summary(preds, sex, truth).eod:.2f}")

###############################################################################
# Crossing sex with an age band exposes smaller subgroups. Groups under the
# size floor are set aside and reported, not silently averaged in.

band = rng.choice(["<30", "30-50", ">50"], preds.size, p=[0.45, 0.5, 0.05]).tolist()
inter = intersectional_fairness(preds, [sex, band], min_group_size=10)
for group, rate in sorted(inter.per_group_positive_rates.items()):
    print(group, f"{rate:.2f}")
print("excluded:", inter.excluded_groups)
