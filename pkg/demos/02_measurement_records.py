"""Two incompatible quantities, each recorded by its own pointer.

The system's z-value is copied onto apparatus 1, then its x-value onto
apparatus 2. The Heisenberg projectors P1(t1), P2(t2) do not commute, yet
the histories decohere because the pointer projectors Q1, Q2 do commute and
reproduce the chains on the initial state.
"""

import numpy as np

from qhistories import (classify, decoherence_matrix, extract_records_pure, implication_chain_report, is_full,
                        measurement_model, probabilities, refine_to_full)
from qhistories import operators as ops

m = measurement_model(0.6, 0.8)
hs, o = m.history_set, m.operators
rho = hs.rho

comm = max(np.linalg.norm(p @ q - q @ p, 2) for p in o["P1"] for q in o["P2"])
pointer = max(ops.max_abs(o["P2"][x] @ o["P1"][s] @ rho - o["Q2"][x] @ o["Q1"][s] @ rho)
              for s in range(2) for x in range(2))
print(f"||[P2(t2), P1(t1)]|| = {comm:.3f}")
print(f"max |P2 P1 rho - Q2 Q1 rho| = {pointer:.2e}")

dm = decoherence_matrix(hs)
print("decoherence level:", classify(dm).level)
for idx, p in probabilities(dm).items():
    print(f"  p({hs.label_string(idx)}) = {p:.4f}")

records = extract_records_pure(hs)
print("record ranks:", records.ranks, "complement policy:", records.complement_policy)
chain = implication_chain_report(hs)
print(f"strong={chain.strong} medium={chain.medium} weak={chain.weak}")

print("\nfull set?", is_full(hs).full, f"({len(hs.histories)} histories in dimension {hs.dim})")
fine = refine_to_full(hs)
print("after refinement:", is_full(fine).full, f"({is_full(fine).nonvanishing} nonvanishing branches)")
