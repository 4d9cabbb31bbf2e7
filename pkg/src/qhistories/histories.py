"""Projector families scheduled in time, chain operators and coarse graining."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import operators as ops
from .errors import CompletenessViolation, ExclusivityViolation, ValidationError

ZERO_TOL = 1e-12

HistoryIndex = tuple  # (alpha_1, ..., alpha_n), alpha_1 earliest, positions within each family


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScheduledFamily:
    """An exhaustive set of exclusive Schrodinger-picture projectors at one time."""

    time: float
    projectors: tuple
    labels: tuple

    def __len__(self):
        return len(self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


def make_family(time: float, projectors: Sequence, labels: Sequence[str] | None = None,
                tol: float = ops.HERM_TOL) -> ScheduledFamily:
    """Validate and build a :class:`ScheduledFamily`.

    Raises:
        CompletenessViolation: the projectors do not sum to the identity.
        ExclusivityViolation: two projectors have overlapping ranges.
    """
    if len(projectors) == 0:
        raise ValidationError("a family needs at least one projector")
    ps = [ops.check_projector(p, tol) for p in projectors]
    dim = ps[0].shape[0]
    if any(p.shape[0] != dim for p in ps):
        raise ValidationError("projectors of a family must share one dimension")
    if labels is None:
        labels = [str(i) for i in range(len(ps))]
    labels = tuple(str(x) for x in labels)
    if len(labels) != len(ps) or len(set(labels)) != len(labels):
        raise ValidationError("family labels must be unique, one per projector")

    all_diag = all(ops.is_diagonal(p) for p in ps)
    for (i, a), (j, b) in itertools.combinations(enumerate(ps), 2):
        overlap = ops.max_abs(np.diag(a) * np.diag(b)) if all_diag else ops.max_abs(ops.product(a, b))
        if overlap > tol:
            raise ExclusivityViolation(
                f"family at t={time}: projectors {labels[i]!r} and {labels[j]!r} overlap "
                f"(max |P_a P_b| = {overlap:.3e})")
    total = np.sum(ps, axis=0)
    completeness = ops.max_abs(total - np.eye(dim))
    if completeness > tol:
        raise CompletenessViolation(
            f"family at t={time}: projectors sum to identity only within {completeness:.3e}")
    return ScheduledFamily(float(time), tuple(_frozen(p) for p in ps), labels)


def family_from_basis(time: float, basis: np.ndarray, grouping=None, labels=None) -> ScheduledFamily:
    """Family of projectors onto groups of orthonormal basis columns."""
    basis = np.asarray(basis, dtype=complex)
    if grouping is None:
        grouping = [[i] for i in range(basis.shape[1])]
    projectors = [ops.projector_onto(basis[:, list(g)]) for g in grouping]
    return make_family(time, projectors, labels)


def trivial_family(time: float, dim: int) -> ScheduledFamily:
    return make_family(time, [np.eye(dim)], ["1"])


class HistorySet:
    """Families of projectors over a Hamiltonian, reference time and initial state.

    The initial state may be given as a density matrix ``rho`` or, for pure
    states, as a vector ``psi`` (the density matrix is then built lazily). A
    precomputed eigendecomposition ``spectrum=(values, vectors)`` of the
    Hamiltonian can be supplied for large structured models.

    Instances are treated as immutable; derived quantities are cached.
    """

    def __init__(self, hamiltonian, families: Iterable[ScheduledFamily], rho=None, *,
                 psi=None, t0: float = 0.0, spectrum=None, tol: float = ops.HERM_TOL):
        h = ops.check_hermitian(hamiltonian, tol)
        self.hamiltonian = _frozen(h)
        self.families = tuple(families)
        self.t0 = float(t0)
        self.tol = tol
        dim = h.shape[0]

        if rho is None and psi is None:
            raise ValidationError("an initial state (rho or psi) is required")
        self._psi = None
        if psi is not None:
            v = ops.check_state_vector(psi, tol)
            if v.size != dim:
                raise ValidationError(f"state vector has dimension {v.size}, expected {dim}")
            self._psi = _frozen(v)
        if rho is not None:
            r = ops.check_density_matrix(rho, tol)
            if r.shape[0] != dim:
                raise ValidationError(f"rho has dimension {r.shape[0]}, expected {dim}")
            self.__dict__["rho"] = _frozen(r)

        prev = self.t0
        for k, fam in enumerate(self.families):
            if fam.dim != dim:
                raise ValidationError(f"family {k} has dimension {fam.dim}, expected {dim}")
            if fam.time < prev:
                raise ValidationError(
                    f"family times must be nondecreasing from t0={self.t0}; family {k} at {fam.time}")
            prev = fam.time
        self._check_simultaneous_families(tol)

        if spectrum is not None:
            values, vectors = (np.asarray(spectrum[0], dtype=float), np.asarray(spectrum[1], dtype=complex))
            ops.check_spectrum(h, values, vectors)
            self.__dict__["spectrum"] = (values, vectors)

    def _check_simultaneous_families(self, tol):
        for (i, a), (j, b) in itertools.combinations(enumerate(self.families), 2):
            if a.time != b.time:
                continue
            for p in a.projectors:
                for q in b.projectors:
                    if ops.max_abs(p @ q - q @ p) > tol:
                        raise ValidationError(
                            f"families {i} and {j} share time {a.time} but do not commute")

    # basic shape ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def times(self) -> tuple:
        return tuple(f.time for f in self.families)

    @cached_property
    def histories(self) -> list:
        """All fine-grained history indices in lexicographic order."""
        return list(itertools.product(*[range(len(f)) for f in self.families]))

    def labels_of(self, idx: HistoryIndex) -> tuple:
        return tuple(f.labels[a] for f, a in zip(self.families, idx))

    def label_string(self, idx: HistoryIndex) -> str:
        return ",".join(self.labels_of(idx)) if idx else "()"

    # state ----------------------------------------------------------------

    @cached_property
    def rho(self) -> np.ndarray:
        return _frozen(ops.pure_density(self._psi))

    @cached_property
    def is_pure(self) -> bool:
        if self._psi is not None:
            return True
        return ops.is_pure(self.rho, self.tol)

    @cached_property
    def psi(self):
        """State vector for pure initial states, else ``None``."""
        if self._psi is not None:
            return self._psi
        if self.is_pure:
            return _frozen(ops.dominant_vector(self.rho))
        return None

    # dynamics -------------------------------------------------------------

    @cached_property
    def spectrum(self):
        return ops.eig_hermitian(self.hamiltonian, self.tol)

    def propagator(self, dt: float) -> np.ndarray:
        return ops.propagator(self.hamiltonian, dt, self.spectrum)

    def evolve(self, v: np.ndarray, dt: float) -> np.ndarray:
        return ops.evolve_vector(*self.spectrum, v, dt)

    @cached_property
    def heisenberg_families(self) -> tuple:
        """Heisenberg-picture projectors ``P^k_a(t_k)`` for every family."""
        out = []
        for fam in self.families:
            if fam.time == self.t0:
                out.append(fam.projectors)
                continue
            u = self.propagator(fam.time - self.t0)
            ud = ops.dagger(u)
            out.append(tuple(_frozen(ud @ p @ u) for p in fam.projectors))
        return tuple(out)

    def heisenberg_projector(self, k: int, alpha: int) -> np.ndarray:
        return self.heisenberg_families[k][alpha]

    # chains ---------------------------------------------------------------

    def chain(self, idx: HistoryIndex) -> np.ndarray:
        """Heisenberg chain ``P^n_{a_n}(t_n) ... P^1_{a_1}(t_1)``."""
        c = np.eye(self.dim, dtype=complex)
        for k, a in enumerate(idx):
            c = self.heisenberg_families[k][a] @ c
        return c

    def schrodinger_chain(self, idx: HistoryIndex) -> np.ndarray:
        """Product of the stored Schrodinger projectors, latest leftmost."""
        c = np.eye(self.dim, dtype=complex)
        for fam, a in zip(self.families, idx):
            c = fam.projectors[a] @ c
        return c

    def chains(self, picture: str = "heisenberg") -> np.ndarray:
        """All chains stacked as ``(n_histories, d, d)`` in lexicographic order."""
        if picture == "heisenberg":
            fams = self.heisenberg_families
        elif picture == "schrodinger":
            fams = tuple(f.projectors for f in self.families)
        else:
            raise ValueError(f"unknown picture {picture!r}")
        out = np.eye(self.dim, dtype=complex)[None]
        for projs in fams:
            p = np.stack(projs)
            out = np.einsum("bij,mjk->mbik", p, out).reshape(-1, self.dim, self.dim)
        return out

    def branches(self, psi=None) -> np.ndarray:
        """Branch vectors ``C_a |psi>`` stacked as ``(n_histories, d)``.

        Propagates vectors through the Schrodinger picture, so the cost is
        quadratic in the dimension per step.
        """
        psi = self.psi if psi is None else np.asarray(psi, dtype=complex)
        if psi is None:
            raise ValidationError("branch vectors need a pure initial state")
        vecs = np.asarray(psi)[None]
        t_prev = self.t0
        for fam in self.families:
            dt = fam.time - t_prev
            if dt:
                vecs = ops.evolve_vector(*self.spectrum, vecs.T, dt).T
            p = np.stack(fam.projectors)
            vecs = np.einsum("bij,mj->mbi", p, vecs).reshape(-1, self.dim)
            t_prev = fam.time
        if t_prev != self.t0:
            vecs = ops.evolve_vector(*self.spectrum, vecs.T, -(t_prev - self.t0)).T
        return vecs

    def replace(self, **changes) -> "HistorySet":
        kwargs = dict(hamiltonian=self.hamiltonian, families=self.families, t0=self.t0, tol=self.tol)
        if self._psi is not None:
            kwargs["psi"] = self._psi
        else:
            kwargs["rho"] = self.rho
        if "spectrum" in self.__dict__ and "hamiltonian" not in changes:
            kwargs["spectrum"] = self.spectrum
        if "rho" in changes and "psi" not in changes:
            kwargs.pop("psi", None)
        if "psi" in changes and "rho" not in changes:
            kwargs.pop("rho", None)
        kwargs.update(changes)
        return HistorySet(**kwargs)

    def __repr__(self):
        return (f"HistorySet(dim={self.dim}, times={self.times}, "
                f"sizes={[len(f) for f in self.families]}, t0={self.t0})")


@dataclass(frozen=True, eq=False)
class ClassOperator:
    """Sum of chain operators over a block of histories."""

    matrix: np.ndarray
    members: frozenset


def chain_operator(hs: HistorySet, idx: HistoryIndex) -> ClassOperator:
    idx = tuple(idx)
    if len(idx) != len(hs.families) or any(not 0 <= a < len(f) for a, f in zip(idx, hs.families)):
        raise ValidationError(f"invalid history index {idx}")
    return ClassOperator(hs.chain(idx), frozenset([idx]))


@dataclass(frozen=True)
class IdentityCheck:
    deviation: float
    ok: bool


def sum_identity_check(hs: HistorySet, tol: float = 1e-9) -> IdentityCheck:
    """Check that the chains of a set sum to the unit operator."""
    total = hs.chains().sum(axis=0)
    dev = ops.max_abs(total - np.eye(hs.dim))
    return IdentityCheck(dev, dev <= tol)


# partitions -----------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Exhaustive, exclusive blocks of history indices."""

    blocks: tuple

    @classmethod
    def of(cls, hs: HistorySet, blocks) -> "Partition":
        part = cls(tuple(frozenset(tuple(i) for i in b) for b in blocks))
        part.validate(hs)
        return part

    @classmethod
    def singletons(cls, hs: HistorySet) -> "Partition":
        return cls(tuple(frozenset([h]) for h in hs.histories))

    @classmethod
    def trivial(cls, hs: HistorySet) -> "Partition":
        return cls((frozenset(hs.histories),))

    @classmethod
    def from_family_groupings(cls, hs: HistorySet, groupings) -> "Partition":
        """Partition induced by grouping projectors family by family.

        ``groupings[k]`` is ``None`` (keep family ``k`` fine) or a list of lists
        of projector positions.
        """
        maps = []
        for k, fam in enumerate(hs.families):
            g = groupings[k] if k < len(groupings) else None
            if g is None:
                g = [[a] for a in range(len(fam))]
            _check_grouping(g, len(fam), k)
            maps.append({a: gi for gi, grp in enumerate(g) for a in grp})
        blocks = {}
        for h in hs.histories:
            key = tuple(m[a] for m, a in zip(maps, h))
            blocks.setdefault(key, []).append(h)
        return cls(tuple(frozenset(blocks[k]) for k in sorted(blocks)))

    def validate(self, hs: HistorySet) -> None:
        seen = set()
        for b in self.blocks:
            if not b:
                raise ValidationError("partition blocks must be non-empty")
            if seen & b:
                raise ValidationError("partition blocks overlap")
            seen |= b
        if seen != set(hs.histories):
            raise ValidationError("partition does not cover the history index set")

    def block_label(self, i: int) -> tuple:
        return tuple(sorted(self.blocks[i]))


def _check_grouping(groups, size, k):
    flat = [a for g in groups for a in g]
    if sorted(flat) != list(range(size)) or any(len(g) == 0 for g in groups):
        raise ValidationError(f"grouping for family {k} must partition positions 0..{size - 1}")


def class_operators(hs: HistorySet, partition: Partition) -> list:
    """History-level coarse graining: one summed chain per block."""
    partition.validate(hs)
    return [ClassOperator(sum(hs.chain(h) for h in sorted(b)), b) for b in partition.blocks]


def coarse_grain_families(hs: HistorySet, groupings) -> HistorySet:
    """Family-level coarse graining; the result is again a projector-chain set."""
    new = []
    for k, fam in enumerate(hs.families):
        g = groupings[k] if k < len(groupings) else None
        if g is None:
            new.append(fam)
            continue
        _check_grouping(g, len(fam), k)
        projs = [np.sum([fam.projectors[a] for a in grp], axis=0) for grp in g]
        labels = ["+".join(fam.labels[a] for a in grp) for grp in g]
        new.append(make_family(fam.time, projs, labels, hs.tol))
    return hs.replace(families=tuple(new))


def is_coarse_graining_of(a: HistorySet, b: HistorySet, tol: float = ops.HERM_TOL) -> bool:
    """True iff every projector of ``a`` is a sum of projectors of a ``b`` family at the same time."""
    if a.dim != b.dim or a.t0 != b.t0:
        return False
    if ops.max_abs(a.hamiltonian - b.hamiltonian) > tol or ops.max_abs(a.rho - b.rho) > tol:
        return False
    for fam in a.families:
        if len(fam) == 1:
            continue  # {1} coarse-grains anything
        if not any(g.time == fam.time and _is_sum_family(fam, g, tol) for g in b.families):
            return False
    return True


def _is_sum_family(coarse: ScheduledFamily, fine: ScheduledFamily, tol: float) -> bool:
    for p in coarse.projectors:
        inside = [q for q in fine.projectors
                  if abs(np.trace(p @ q) - np.trace(q)) <= tol * max(1, p.shape[0])]
        total = np.sum(inside, axis=0) if inside else np.zeros_like(p)
        if ops.max_abs(total - p) > tol:
            return False
    return True


def reassign_times(hs: HistorySet, new_times: Sequence[float], keep: str = "schrodinger") -> HistorySet:
    """Move families to new times without changing their order.

    Args:
        keep: ``"schrodinger"`` keeps the stored projectors (chains change when
            H does not commute with them). ``"heisenberg"`` keeps the Heisenberg
            projectors, so chains and the decoherence functional are unchanged
            while the Schrodinger projectors move.
    """
    new_times = [float(t) for t in new_times]
    if len(new_times) != len(hs.families):
        raise ValidationError("need one new time per family")
    if any(t1 > t2 for t1, t2 in zip([hs.t0] + new_times, new_times)):
        raise ValidationError("new times must be nondecreasing and not precede t0")
    if keep not in ("schrodinger", "heisenberg"):
        raise ValueError(f"keep must be 'schrodinger' or 'heisenberg', got {keep!r}")
    fams = []
    for fam, t in zip(hs.families, new_times):
        projs = fam.projectors
        if keep == "heisenberg" and t != fam.time:
            u = hs.propagator(t - fam.time)
            projs = [u @ p @ ops.dagger(u) for p in projs]
        fams.append(make_family(t, projs, fam.labels, hs.tol))
    return hs.replace(families=tuple(fams))


def insert_family(hs: HistorySet, position: int, family: ScheduledFamily) -> HistorySet:
    fams = list(hs.families)
    fams.insert(position, family)
    return hs.replace(families=tuple(fams))


def family_from_heisenberg(hs: HistorySet, time: float, heisenberg_projectors, labels=None) -> ScheduledFamily:
    """Family at ``time`` whose Heisenberg-picture projectors are the given ones."""
    u = hs.propagator(time - hs.t0)
    ud = ops.dagger(u)
    projs = [u @ p @ ud for p in heisenberg_projectors]
    return make_family(time, projs, labels, hs.tol)
