"""Complete ignorance of the initial state.

With rho = 1/d every two-time set is medium decoherent, because
Tr(C' C^dag) vanishes between distinct chains. Strong decoherence needs
record projectors with C rho = R rho. With rho = 1/d that forces each chain
to be a projector, which fails as soon as the families do not commute.
"""

from qhistories import check_strong, classify, decoherence_matrix, extract_records_impure, qubit_model
from qhistories.errors import SubspacesNotOrthogonal, VerificationFailed

for bases in ("zz", "zx"):
    hs = qubit_model(bases, state="ind").history_set
    level = classify(decoherence_matrix(hs)).level
    try:
        records = extract_records_impure(hs)
        verdict = f"strong, residual {check_strong(hs, records).residual:.1e}"
    except (SubspacesNotOrthogonal, VerificationFailed) as exc:
        verdict = f"no records ({type(exc).__name__})"
    print(f"{bases}: {level} decoherence; {verdict}")
