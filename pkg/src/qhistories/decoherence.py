"""Decoherence functional, decoherence classification and probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .errors import AxiomViolation, NotDecoherent
from .histories import HistorySet, Partition

DEFAULT_TOL = 1e-8
OVERLAP_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class DecoherenceMatrix:
    """``entries[i, j] = D(indices[i], indices[j]) = Tr(C_i rho C_j^dag)``."""

    indices: tuple
    entries: np.ndarray
    tolerance: float = DEFAULT_TOL

    @property
    def size(self) -> int:
        return len(self.indices)

    def axiom_residuals(self) -> dict:
        d = self.entries
        return {
            "hermiticity": ops.max_abs(d - ops.dagger(d)),
            "min_diagonal": float(np.min(np.real(np.diag(d)))) if d.size else 0.0,
            "normalization": float(abs(np.sum(d) - 1.0)),
        }

    def check_axioms(self, tol: float | None = None) -> None:
        tol = self.tolerance if tol is None else tol
        r = self.axiom_residuals()
        if r["hermiticity"] > tol or r["min_diagonal"] < -tol or r["normalization"] > tol:
            raise AxiomViolation(f"decoherence functional violates its axioms: {r}")


@dataclass(frozen=True, eq=False)
class DecoherenceReport:
    level: str  # "none" | "weak" | "medium"
    max_weak_violation: float
    max_medium_violation: float
    normalized_overlaps: np.ndarray
    tolerance: float

    @property
    def weak(self) -> bool:
        return self.level in ("weak", "medium")

    @property
    def medium(self) -> bool:
        return self.level == "medium"

    @property
    def max_normalized_overlap(self) -> float:
        n = self.normalized_overlaps
        if n.shape[0] < 2:
            return 0.0
        return float(np.max(n[~np.eye(n.shape[0], dtype=bool)]))


def _pure_path(hs: HistorySet, class_vectors) -> np.ndarray:
    # D(a', a) = <psi| C_a^dag C_a' |psi> = <b_a | b_a'>
    b = np.asarray(class_vectors)
    return (np.conj(b) @ b.T).T


def _trace_path(rho: np.ndarray, class_ops) -> np.ndarray:
    c = np.asarray(class_ops)
    crho = np.einsum("aij,jk->aik", c, rho)
    # Tr(C_a' rho C_a^dag) = sum_ij (C_a' rho)_ij conj(C_a)_ij
    return np.einsum("pij,qij->pq", crho, np.conj(c))


def decoherence_matrix(hs: HistorySet, partition: Partition | None = None, *,
                       method: str = "auto", tol: float = DEFAULT_TOL,
                       check: bool = True) -> DecoherenceMatrix:
    """Decoherence functional of a history set, optionally coarse-grained.

    Args:
        partition: history-level coarse graining; class operators are the
            summed chains of each block.
        method: ``"trace"`` evaluates ``Tr(C' rho C^dag)`` with dense chains,
            ``"pure"`` uses branch vectors, ``"auto"`` picks ``"pure"`` for pure
            initial states.
        check: raise :class:`AxiomViolation` if the result breaks its axioms.
    """
    if method == "auto":
        method = "pure" if hs.is_pure else "trace"
    if method == "pure":
        vecs = hs.branches()
        if partition is not None:
            pos = {h: i for i, h in enumerate(hs.histories)}
            vecs = [sum(vecs[pos[h]] for h in sorted(b)) for b in partition.blocks]
        entries = _pure_path(hs, vecs)
    elif method == "trace":
        chains = hs.chains()
        if partition is not None:
            pos = {h: i for i, h in enumerate(hs.histories)}
            chains = [sum(chains[pos[h]] for h in sorted(b)) for b in partition.blocks]
        entries = _trace_path(np.asarray(hs.rho), chains)
    else:
        raise ValueError(f"unknown method {method!r}")
    if partition is None:
        indices = tuple(hs.histories)
    else:
        partition.validate(hs)
        indices = tuple(partition.block_label(i) for i in range(len(partition.blocks)))
    dm = DecoherenceMatrix(indices, entries, tol)
    if check:
        dm.check_axioms(max(tol, 1e-8))
    return dm


def classify(dm: DecoherenceMatrix, tol: float | None = None) -> DecoherenceReport:
    """Weak / medium classification from off-diagonal magnitudes.

    Normalized overlaps are ``|D(a',a)| / sqrt(D(a',a') D(a,a))``, defined as
    zero whenever either diagonal entry is below ``1e-12``.
    """
    tol = dm.tolerance if tol is None else tol
    d = dm.entries
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    medium_v = float(np.max(np.abs(d[off]))) if n > 1 else 0.0
    weak_v = float(np.max(np.abs(np.real(d[off])))) if n > 1 else 0.0
    if medium_v <= tol:
        level = "medium"
    elif weak_v <= tol:
        level = "weak"
    else:
        level = "none"
    diag = np.real(np.diag(d))
    live = diag >= OVERLAP_FLOOR
    denom = np.sqrt(np.outer(np.where(live, diag, 1.0), np.where(live, diag, 1.0)))
    overlaps = np.where(np.outer(live, live), np.abs(d) / denom, 0.0)
    return DecoherenceReport(level, weak_v, medium_v, overlaps, tol)


def probabilities(dm: DecoherenceMatrix, tol: float | None = None) -> dict:
    """Probabilities ``p(h) = D(h, h)`` of a (weakly) decoherent set.

    Raises:
        NotDecoherent: the real parts of the off-diagonal entries exceed ``tol``.
    """
    report = classify(dm, tol)
    if not report.weak:
        raise NotDecoherent(
            f"set does not decohere: max |Re D| off-diagonal = {report.max_weak_violation:.3e}")
    return {idx: float(np.real(dm.entries[i, i])) for i, idx in enumerate(dm.indices)}


@dataclass(frozen=True)
class SumRuleReport:
    superposition_deviation: float
    sum_rule_deviation: float
    fine_level: str
    coarse_level: str
    tolerance: float

    @property
    def superposition_holds(self) -> bool:
        return self.superposition_deviation <= self.tolerance

    @property
    def sum_rules_apply(self) -> bool:
        return self.fine_level != "none" and self.coarse_level != "none"

    @property
    def sum_rules_hold(self) -> bool:
        return self.sum_rules_apply and self.sum_rule_deviation <= self.tolerance


def block_sums(dm: DecoherenceMatrix, partition: Partition) -> np.ndarray:
    """Coarse-grained functional obtained by summing fine entries over blocks."""
    pos = {h: i for i, h in enumerate(dm.indices)}
    membership = np.zeros((len(partition.blocks), dm.size))
    for b, block in enumerate(partition.blocks):
        for h in block:
            membership[b, pos[h]] = 1.0
    return membership @ dm.entries @ membership.T


def check_sum_rules(hs: HistorySet, partition: Partition, tol: float = DEFAULT_TOL,
                    method: str = "auto") -> SumRuleReport:
    """Compare the coarse-grained functional with block sums of the fine one.

    The superposition law is checked for every set; probability sum rules are
    meaningful only when both sets decohere (see ``sum_rules_apply``).
    """
    fine = decoherence_matrix(hs, method=method, tol=tol)
    coarse = decoherence_matrix(hs, partition, method=method, tol=tol)
    summed = block_sums(fine, partition)
    sup_dev = ops.max_abs(coarse.entries - summed)
    p_fine = np.real(np.diag(fine.entries))
    pos = {h: i for i, h in enumerate(fine.indices)}
    p_blocks = np.array([sum(p_fine[pos[h]] for h in b) for b in partition.blocks])
    rule_dev = ops.max_abs(np.real(np.diag(coarse.entries)) - p_blocks)
    return SumRuleReport(sup_dev, rule_dev, classify(fine, tol).level, classify(coarse, tol).level, tol)


def cross_set_decoherence(hs_a: HistorySet, hs_b: HistorySet) -> np.ndarray:
    """Rectangular ``D(a', a) = Tr(C_a' rho C_a^dag)`` with a' from A and a from B."""
    if hs_a.dim != hs_b.dim or hs_a.t0 != hs_b.t0:
        raise ValueError("sets must share dimension and t0")
    if ops.max_abs(hs_a.hamiltonian - hs_b.hamiltonian) > hs_a.tol:
        raise ValueError("sets must share the Hamiltonian")
    if ops.max_abs(hs_a.rho - hs_b.rho) > hs_a.tol:
        raise ValueError("sets must share the initial state")
    ca, cb = hs_a.chains(), hs_b.chains()
    crho = np.einsum("aij,jk->aik", ca, np.asarray(hs_a.rho))
    return np.einsum("pij,qij->pq", crho, np.conj(cb))
