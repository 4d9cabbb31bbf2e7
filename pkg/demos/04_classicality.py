"""Two classicality measures on small qubit sets.

S_hat is the entropy of formal probabilities built from Schrodinger chains
and the maximally mixed state. It is low when successive families are
time-translates and grows when non-commuting families are interpolated.
S_maxent is the largest von Neumann entropy compatible with every value of
the decoherence functional.
"""

import numpy as np

from qhistories import classicality_report, qubit_model, reassign_times, s_hat

LN2 = np.log(2)
for bases, state in [("z", "+"), ("zz", "+"), ("zxz", "+"), ("zxz", "0"), ("xz", "0")]:
    rep = classicality_report(qubit_model(bases, state=state).history_set)
    print(f"{bases:>4} on |{state}>: S_hat = {rep.s_hat / LN2:.4f} ln2, S_maxent = {rep.s_maxent / LN2:.4f} ln2, "
          f"S(rho) = {rep.s_rho:.1e}, constraints {rep.constraints_after}/{rep.constraints_before}, "
          f"{rep.solver.iterations} iterations")

print("\nmoving the last z-family of z-x-z while keeping its Heisenberg projectors:")
for h in ("zero", "z", "y"):
    hs = qubit_model("zxz", h).history_set
    moved = reassign_times(hs, [1.0, 2.0, 3.4], keep="heisenberg")
    print(f"  H = {h:>4}: S_hat {s_hat(hs):.4f} -> {s_hat(moved):.4f}")
