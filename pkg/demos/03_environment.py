"""Decoherence by an environment of qubits.

Each environment qubit is rotated by theta when the system reads 1. The
interference between the system's z-alternatives shrinks as
|cos(theta/2)|^n with the number n of environment qubits.
"""

import time

import numpy as np

from qhistories import classify, decoherence_matrix, environment_model

print(f"{'n_env':>5}  {'theta':>6}  {'overlap':>10}  {'|cos(theta/2)|^n':>16}  {'time (s)':>8}")
for theta in (np.pi / 8, np.pi / 4, np.pi):
    for n in (0, 1, 2, 4, 6, 8, 10):
        start = time.perf_counter()
        m = environment_model(n, theta)
        ov = classify(decoherence_matrix(m.history_set)).max_normalized_overlap
        print(f"{n:>5}  {theta:>6.3f}  {ov:>10.6f}  {m.expected['max_normalized_overlap'].value:>16.6f}"
              f"  {time.perf_counter() - start:>8.2f}")
