"""Branches, generalized records, strong decoherence and full sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import operators as ops
from .decoherence import DEFAULT_TOL, classify, decoherence_matrix
from .errors import (NotMediumDecoherent, NotStronglyDecoherent, SubspacesNotOrthogonal,
                     ValidationError, VerificationFailed)
from .histories import HistorySet, ZERO_TOL, family_from_heisenberg, insert_family

RANK_CUTOFF = 1e-10
STRONG_TOL = 1e-9
POLICIES = ("to-vanishing", "to-first")


@dataclass(frozen=True, eq=False)
class BranchSet:
    """Unnormalized branch vectors ``C_a |psi>`` keyed by history index."""

    indices: tuple
    vectors: np.ndarray
    norms: np.ndarray
    max_overlap: float  # max |<b_a|b_a'>| over distinct histories
    tolerance: float

    @property
    def orthogonal(self) -> bool:
        return self.max_overlap <= self.tolerance

    def nonvanishing(self, zero_tol: float = ZERO_TOL) -> list:
        return [i for i, n in enumerate(self.norms) if n > zero_tol]


@dataclass(frozen=True, eq=False)
class RecordSet:
    """Exclusive, exhaustive projectors ``R_a`` keyed by history index."""

    indices: tuple
    projectors: tuple
    complement_policy: str

    def __getitem__(self, idx):
        return self.projectors[self.indices.index(tuple(idx))]

    @property
    def ranks(self) -> tuple:
        return tuple(ops.rank(p) for p in self.projectors)

    def exhaustiveness(self) -> float:
        dim = self.projectors[0].shape[0]
        return ops.max_abs(np.sum(self.projectors, axis=0) - np.eye(dim))

    def exclusivity(self) -> float:
        worst = 0.0
        for i, p in enumerate(self.projectors):
            for j, q in enumerate(self.projectors):
                target = p if i == j else 0.0
                worst = max(worst, ops.max_abs(p @ q - target))
        return worst


@dataclass(frozen=True)
class StrongReport:
    residual: float
    residuals: tuple
    strong: bool
    tolerance: float


@dataclass(frozen=True)
class ImplicationReport:
    strong: Optional[bool]  # None: undetermined (heuristic found no records)
    medium: bool
    weak: bool
    consistent: bool
    note: str = ""


@dataclass(frozen=True, eq=False)
class EquivalenceClassKey:
    """Complete set of rank-one projectors characterizing a full set."""

    basis: tuple

    @property
    def dim(self) -> int:
        return self.basis[0].shape[0]


@dataclass(frozen=True, eq=False)
class Fullness:
    full: bool
    key: Optional[EquivalenceClassKey]
    nonvanishing: int
    dim: int


# branches --------------------------------------------------------------------

def _require_psi(hs: HistorySet, psi):
    if psi is not None:
        psi = ops.check_state_vector(psi)
        if ops.max_abs(ops.pure_density(psi) - hs.rho) > hs.tol:
            raise ValidationError("psi does not match the set's initial state")
        return psi
    if not hs.is_pure:
        raise ValidationError("branch constructions need a pure initial state")
    return np.asarray(hs.psi)


def branch_vectors(hs: HistorySet, psi=None, tol: float = DEFAULT_TOL) -> BranchSet:
    """Branch vectors and their pairwise orthogonality (medium decoherence)."""
    psi = _require_psi(hs, psi)
    vecs = hs.branches(psi)
    gram = np.conj(vecs) @ vecs.T
    n = len(vecs)
    off = np.abs(gram[~np.eye(n, dtype=bool)]) if n > 1 else np.zeros(0)
    return BranchSet(tuple(hs.histories), vecs, np.linalg.norm(vecs, axis=1),
                     float(off.max()) if off.size else 0.0, tol)


# records ---------------------------------------------------------------------

def _complement(subspace_projector: np.ndarray) -> np.ndarray:
    return np.eye(subspace_projector.shape[0]) - subspace_projector


def _assign_complement(projectors: list, vanishing: list, comp: np.ndarray, policy: str) -> list:
    if policy not in POLICIES:
        raise ValueError(f"unknown complement policy {policy!r}; expected one of {POLICIES}")
    if ops.max_abs(comp) < 1e-9:
        return projectors
    target = vanishing[0] if (policy == "to-vanishing" and vanishing) else 0
    projectors[target] = projectors[target] + comp
    return projectors


def extract_records_pure(hs: HistorySet, psi=None, tol: float = DEFAULT_TOL,
                         policy: str = "to-vanishing") -> RecordSet:
    """Rank-one records onto normalized branches plus a complement block.

    Raises:
        NotMediumDecoherent: the nonvanishing branches are not orthogonal.
    """
    psi = _require_psi(hs, psi)
    bs = branch_vectors(hs, psi, tol)
    if not bs.orthogonal:
        raise NotMediumDecoherent(f"branches overlap (max |<b|b'>| = {bs.max_overlap:.3e})")
    dim = hs.dim
    live = bs.nonvanishing()
    projectors = [np.zeros((dim, dim), dtype=complex) for _ in bs.indices]
    span = np.zeros((dim, dim), dtype=complex)
    for i in live:
        p = ops.projector_onto(bs.vectors[i] / bs.norms[i])
        projectors[i] = p
        span = span + p
    vanishing = [i for i in range(len(bs.indices)) if i not in set(live)]
    projectors = _assign_complement(projectors, vanishing, _complement(span), policy)
    records = RecordSet(bs.indices, tuple(projectors), policy)
    dev = ops.max_abs(np.stack(records.projectors) @ psi - bs.vectors)
    if dev > max(tol, 1e-9):
        raise VerificationFailed(f"records do not reproduce branches (deviation {dev:.3e})")
    return records


def check_strong(hs: HistorySet, records: RecordSet, tol: float = STRONG_TOL) -> StrongReport:
    """Residual ``max_a ||C_a rho - R_a rho||_max`` for pure or mixed rho."""
    rho = np.asarray(hs.rho)
    chains = hs.chains()
    residuals = []
    for idx, c in zip(hs.histories, chains):
        r = records[idx]
        residuals.append(ops.max_abs(c @ rho - r @ rho))
    worst = max(residuals) if residuals else 0.0
    return StrongReport(worst, tuple(residuals), worst <= tol, tol)


def _column_span(m: np.ndarray, cutoff: float) -> np.ndarray:
    u, s, _ = np.linalg.svd(m)
    return u[:, s > cutoff]


def extract_records_impure(hs: HistorySet, tol: float = STRONG_TOL,
                           policy: str = "to-vanishing") -> RecordSet:
    """Candidate records from the column spaces of ``C_a rho``, verified exactly.

    This is a heuristic: failure does not prove that no records exist.

    Raises:
        SubspacesNotOrthogonal: the candidate subspaces overlap.
        VerificationFailed: the candidate records fail ``C_a rho = R_a rho``.
    """
    rho = np.asarray(hs.rho)
    crhos = [c @ rho for c in hs.chains()]
    top = max(float(np.linalg.norm(m, 2)) for m in crhos)
    cutoff = RANK_CUTOFF * top
    spans = [_column_span(m, cutoff) for m in crhos]
    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            if spans[i].shape[1] and spans[j].shape[1]:
                ov = ops.max_abs(ops.dagger(spans[i]) @ spans[j])
                if ov > max(tol, 1e-8):
                    raise SubspacesNotOrthogonal(
                        f"candidate record spaces of {hs.label_string(hs.histories[i])} and "
                        f"{hs.label_string(hs.histories[j])} overlap ({ov:.3e})")
    dim = hs.dim
    projectors = [ops.projector_onto(v) if v.shape[1] else np.zeros((dim, dim), dtype=complex)
                  for v in spans]
    vanishing = [i for i, v in enumerate(spans) if v.shape[1] == 0]
    projectors = _assign_complement(projectors, vanishing, _complement(np.sum(projectors, axis=0)), policy)
    records = RecordSet(tuple(hs.histories), tuple(projectors), policy)
    report = check_strong(hs, records, tol)
    if not report.strong:
        raise VerificationFailed(f"candidate records fail strong decoherence (residual {report.residual:.3e})")
    return records


def find_records(hs: HistorySet, tol: float = DEFAULT_TOL, policy: str = "to-vanishing"):
    """Records by the pure construction when possible, else the impure heuristic; ``None`` if neither."""
    try:
        if hs.is_pure:
            return extract_records_pure(hs, tol=tol, policy=policy)
        return extract_records_impure(hs, policy=policy)
    except (NotMediumDecoherent, SubspacesNotOrthogonal, VerificationFailed):
        return None


def implication_chain_report(hs: HistorySet, records: RecordSet | None = None,
                             tol: float = DEFAULT_TOL) -> ImplicationReport:
    """Evaluate strong, medium and weak decoherence and check strong => medium => weak."""
    report = classify(decoherence_matrix(hs, tol=tol), tol)
    note = ""
    if records is None:
        records = find_records(hs, tol)
    if records is not None:
        strong = check_strong(hs, records).strong
    elif not report.medium:
        strong = False  # contrapositive of strong => medium
    else:
        strong = None
        note = "no records found by the heuristic; strong decoherence undetermined"
    consistent = (strong is not True or report.medium) and (not report.medium or report.weak)
    return ImplicationReport(strong, report.medium, report.weak, consistent, note)


# fullness and equivalence classes -------------------------------------------

def is_full(hs: HistorySet, tol: float = DEFAULT_TOL) -> Fullness:
    """Whether the nonvanishing records form a complete rank-one basis.

    Raises:
        NotStronglyDecoherent: no verified records exist.
    """
    dim = hs.dim
    if hs.is_pure:
        bs = branch_vectors(hs, tol=tol)
        if not bs.orthogonal:
            raise NotStronglyDecoherent("branches are not orthogonal")
        live = bs.nonvanishing()
        if len(live) != dim:
            return Fullness(False, None, len(live), dim)
        basis = tuple(ops.projector_onto(bs.vectors[i] / bs.norms[i]) for i in live)
        return Fullness(True, EquivalenceClassKey(basis), len(live), dim)
    try:
        records = extract_records_impure(hs)
    except (SubspacesNotOrthogonal, VerificationFailed) as exc:
        raise NotStronglyDecoherent(str(exc)) from exc
    nonzero = [p for p in records.projectors if ops.rank(p) > 0]
    if len(nonzero) == dim and all(ops.rank(p) == 1 for p in nonzero):
        return Fullness(True, EquivalenceClassKey(tuple(nonzero)), len(nonzero), dim)
    return Fullness(False, None, len(nonzero), dim)


def same_equivalence_class(a: EquivalenceClassKey, b: EquivalenceClassKey, tol: float = 1e-8) -> bool:
    """Order- and phase-insensitive comparison of two record bases."""
    if a.dim != b.dim or len(a.basis) != len(b.basis):
        return False
    unmatched = list(b.basis)
    for p in a.basis:
        for j, q in enumerate(unmatched):
            if np.linalg.norm(p - q) < tol:
                del unmatched[j]
                break
        else:
            return False
    return True


def _gram_schmidt_complete(vectors: list, dim: int, tol: float = RANK_CUTOFF) -> list:
    """Extend orthonormal ``vectors`` with standard basis vectors, in index order."""
    basis = [np.asarray(v, dtype=complex) for v in vectors]
    for i in range(dim):
        if len(basis) == dim:
            break
        e = ops.ket(i, dim)
        for _ in range(2):  # re-orthogonalize once for stability
            for b in basis:
                e = e - b * np.vdot(b, e)
        n = np.linalg.norm(e)
        if n > tol:
            basis.append(e / n)
    return basis


def _spread(anchor: np.ndarray, extra: list) -> list:
    """Orthonormal basis of span(anchor, extra) whose members all overlap ``anchor``.

    Uses a discrete Fourier combination, so every vector has overlap
    ``1/sqrt(k+1)`` with the anchor.
    """
    vecs = [anchor] + list(extra)
    k = len(vecs)
    omega = np.exp(2j * np.pi / k)
    return [sum(omega ** (j * m) * vecs[m] for m in range(k)) / np.sqrt(k) for j in range(k)]


def refine_to_full(hs: HistorySet, psi=None, time: float | None = None,
                   tol: float = DEFAULT_TOL) -> HistorySet:
    """Append a rank-one family after ``t_n`` that turns the set into a full set.

    The orthogonal complement of the branch span (completed by Gram-Schmidt over
    standard basis vectors) is merged with the first nonvanishing branch and
    rotated so that every new basis vector overlaps exactly one branch. The
    appended family therefore splits the state into ``dim`` orthogonal nonzero
    branches while the original probabilities are recovered by summing over it.

    Args:
        time: time of the appended family; defaults to ``t_n + 1``.

    Raises:
        NotMediumDecoherent: the branches are not orthogonal.
    """
    psi = _require_psi(hs, psi)
    bs = branch_vectors(hs, psi, tol)
    if not bs.orthogonal:
        raise NotMediumDecoherent(f"branches overlap (max |<b|b'>| = {bs.max_overlap:.3e})")
    live = bs.nonvanishing()
    units = [bs.vectors[i] / bs.norms[i] for i in live]
    completed = _gram_schmidt_complete(units, hs.dim)
    complement = completed[len(units):]
    basis = _spread(units[0], complement) + units[1:]
    if time is None:
        time = (hs.times[-1] if hs.families else hs.t0) + 1.0
    labels = [f"r{j}" for j in range(len(basis))]
    fam = family_from_heisenberg(hs, time, [ops.projector_onto(v) for v in basis], labels)
    return insert_family(hs, len(hs.families), fam)


def _insertion_point(hs: HistorySet, t_new: float) -> int:
    """Number of families scheduled at or before ``t_new``."""
    return sum(1 for t in hs.times if t <= t_new)


def interpolate_repeat(hs: HistorySet, t_new: float) -> HistorySet:
    """Insert at ``t_new`` a copy (in the Heisenberg picture) of the latest earlier family.

    Chains are unchanged because projectors are idempotent.
    """
    k = _insertion_point(hs, t_new)
    if k == 0:
        raise ValidationError(f"time {t_new} precedes the first family")
    src = hs.families[k - 1]
    fam = family_from_heisenberg(hs, t_new, hs.heisenberg_families[k - 1], src.labels)
    return insert_family(hs, k, fam)


def interpolate_resolution(hs: HistorySet, t_new: float, k: int, psi=None,
                           tol: float = DEFAULT_TOL) -> HistorySet:
    """Insert after family ``k`` a rank-one family containing the resolved vectors.

    The resolved vectors are the branches of the first ``k`` families,
    ``P^k ... P^1 |psi>``; they are completed to a basis by Gram-Schmidt.
    """
    psi = _require_psi(hs, psi)
    times = (hs.t0,) + hs.times
    if not 0 <= k <= len(hs.families):
        raise ValidationError(f"k must lie in 0..{len(hs.families)}")
    upper = times[k + 1] if k + 1 < len(times) else np.inf
    if not times[k] <= t_new <= upper:
        raise ValidationError(f"t_new={t_new} outside [{times[k]}, {upper}]")
    if classify(decoherence_matrix(hs, tol=tol), tol).level != "medium":
        raise NotMediumDecoherent("interpolation of resolved vectors needs medium decoherence")
    prefix = hs.replace(families=hs.families[:k])
    bs = branch_vectors(prefix, psi, tol)
    units = [bs.vectors[i] / bs.norms[i] for i in bs.nonvanishing()]
    basis = _gram_schmidt_complete(units, hs.dim)
    labels = [f"v{j}" for j in range(len(basis))]
    fam = family_from_heisenberg(hs, t_new, [ops.projector_onto(v) for v in basis], labels)
    return insert_family(hs, k, fam)
