"""When do alternative histories get probabilities?

A qubit starts in |0>. We ask about its x-value at t=1 and its z-value at
t=2. The two routes to z=0 interfere, so the decoherence functional has
off-diagonal entries and the set gets no consistent probabilities. Asking
only about z (a single time) always decoheres.
"""

import numpy as np

from qhistories import Partition, check_sum_rules, classify, decoherence_matrix, probabilities, qubit_model
from qhistories.errors import NotDecoherent

np.set_printoptions(precision=4, suppress=True)

hs = qubit_model("xz", state="0").history_set
dm = decoherence_matrix(hs)
print("histories:", [hs.label_string(h) for h in hs.histories])
print("D =\n", dm.entries.real)
report = classify(dm)
print(f"level: {report.level}, largest |D| off the diagonal: {report.max_medium_violation:.3f}")
try:
    probabilities(dm)
except NotDecoherent as exc:
    print("no probabilities:", exc)

# merging the x-alternatives removes the interference term from the question
merged = Partition.from_family_groupings(hs, [[[0, 1]], None])
rules = check_sum_rules(hs, merged)
print(f"superposition law holds: {rules.superposition_holds}; "
      f"probability sum rules apply: {rules.sum_rules_apply}")

single = qubit_model("z", state="+").history_set
dm = decoherence_matrix(single)
print("\nz at one time on |+>:", classify(dm).level, probabilities(dm))
