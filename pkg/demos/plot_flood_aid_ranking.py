"""
Debiased flood-aid priorities
=============================

Haor (wetland) upazilas are poorer and harder hit on average, so a priority
model can end up keyed to region rather than need. A gradient reversal
adversary pushes region information out of the model's hidden layer.
"""

from fairhealth.data_io import synth_pdna
from fairhealth.equity import (
    DebiasConfig,
    generate_priority_ranking,
    ranking_shift,
    statistical_parity_difference,
    train_fair_regressor,
)

records, targets = synth_pdna(seed=0)
regions = [r.region_type for r in records]
models = {lam: train_fair_regressor(records, targets, DebiasConfig(lam=lam)) for lam in (0.0, 0.5, 1.0)}
for lam, model in models.items():
    spd = statistical_parity_difference(model.predict(records), regions)
    print(f"lambda={lam}: parity gap {spd:.4f}, adversary accuracy {model.adversary_accuracy(records):.2f}")

###############################################################################
# The worst-hit units stay on top, while the middle of the list reshuffles.

baseline = generate_priority_ranking(records, models[0.0])
fair = generate_priority_ranking(records, models[1.0], verbose=True)
print("\n".join(str(fair).splitlines()[:5]))
changed, deltas = ranking_shift(baseline, fair)
print(f"{changed:.0%} of upazilas changed rank; biggest move {max(deltas.values(), key=abs)} places")
