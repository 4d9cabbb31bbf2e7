import numpy as np
import pytest

from qhistories import operators as ops
from qhistories.decoherence import decoherence_matrix
from qhistories.errors import (NotMediumDecoherent, NotStronglyDecoherent, SubspacesNotOrthogonal,
                               VerificationFailed)
from qhistories.histories import HistorySet, Partition, family_from_basis, trivial_family
from qhistories.models import measurement_model, qubit_model, random_model, single_measurement_model
from qhistories.records import (EquivalenceClassKey, branch_vectors, check_strong, extract_records_impure,
                                extract_records_pure, implication_chain_report, interpolate_repeat,
                                interpolate_resolution, is_full, refine_to_full, same_equivalence_class)


def trivial_pure(psi):
    psi = np.asarray(psi, dtype=complex)
    return HistorySet(np.zeros((len(psi), len(psi))), [trivial_family(1.0, len(psi))], psi=psi)


def test_branch_vectors_examples():
    psi = ops.random_unitary(3, np.random.default_rng(1))[:, 0]
    bs = branch_vectors(trivial_pure(psi))
    assert np.allclose(bs.vectors[0], psi)

    a, b = 0.6, 0.8
    m = single_measurement_model(a, b)
    bs = branch_vectors(m.history_set)
    for idx, v in m.expected["branches"].value.items():
        assert ops.max_abs(bs.vectors[bs.indices.index(idx)] - v) < 1e-12
    assert bs.orthogonal and np.allclose(bs.norms ** 2, [a * a, b * b])
    assert np.allclose(bs.vectors.sum(axis=0), m.history_set.psi)

    assert not branch_vectors(qubit_model("xz", state="0").history_set).orthogonal


def test_branch_vectors_rejects_impure():
    with pytest.raises(Exception):
        branch_vectors(qubit_model("z", state="ind").history_set)


def test_extract_records_pure_examples():
    rec = extract_records_pure(trivial_pure([0.6, 0.8j]))
    assert np.allclose(rec.projectors[0], np.eye(2))

    hs = measurement_model().history_set
    rec = extract_records_pure(hs)
    assert rec.exhaustiveness() <= 1e-9 and rec.exclusivity() <= 1e-9
    for idx, v in zip(branch_vectors(hs).indices, branch_vectors(hs).vectors):
        assert np.linalg.norm(rec[idx] @ hs.psi - v) <= 1e-10
    assert rec.complement_policy == "to-vanishing"

    with pytest.raises(NotMediumDecoherent):
        extract_records_pure(qubit_model("xz", state="0").history_set)


def test_vanishing_history_gets_the_complement():
    hs = single_measurement_model(1.0, 0.0).history_set
    rec = extract_records_pure(hs)
    assert rec.ranks == (1, 3)
    p_before = np.real(np.diag(decoherence_matrix(hs).entries))
    p_rec = [np.vdot(hs.psi, r @ hs.psi).real for r in rec.projectors]
    assert np.allclose(p_before, p_rec)


def test_to_first_policy():
    rec = extract_records_pure(single_measurement_model().history_set, policy="to-first")
    assert rec.ranks == (3, 1)


def test_check_strong_examples():
    hs = measurement_model().history_set
    assert check_strong(hs, extract_records_pure(hs)).residual <= 1e-10

    commuting = qubit_model("zz", state="ind").history_set
    rec = extract_records_impure(commuting)
    rep = check_strong(commuting, rec)
    assert rep.strong and rep.residual <= 1e-10

    noncommuting = qubit_model("zx", state="ind").history_set
    with pytest.raises((SubspacesNotOrthogonal, VerificationFailed)):
        extract_records_impure(noncommuting)


def test_impure_reduces_to_pure_for_rank_one_rho():
    hs = measurement_model().history_set
    mixed = HistorySet(hs.hamiltonian, hs.families, rho=hs.rho, t0=hs.t0)
    rec = extract_records_impure(mixed)
    assert check_strong(mixed, rec).strong
    pure = extract_records_pure(hs)
    for a, b in zip(rec.projectors, pure.projectors):
        assert np.linalg.norm((a - b) @ hs.psi) < 1e-9


def test_implication_chain_examples():
    r = implication_chain_report(measurement_model().history_set)
    assert (r.strong, r.medium, r.weak) == (True, True, True)
    r = implication_chain_report(random_model(4, dim=5, n_times=1, pure=False).history_set)
    assert r.medium and r.weak and r.consistent
    r = implication_chain_report(qubit_model("xz", state="0").history_set)
    assert (r.strong, r.medium, r.weak) == (False, False, False)


def test_is_full_examples():
    assert not is_full(single_measurement_model().history_set).full
    assert not is_full(measurement_model().history_set).full
    psi = np.array([0.5, 0.5, 0.5, 0.5j])
    hs = HistorySet(np.zeros((4, 4)), [family_from_basis(1.0, np.eye(4))], psi=psi)
    f = is_full(hs)
    assert f.full and f.nonvanishing == 4
    with pytest.raises(NotStronglyDecoherent):
        is_full(qubit_model("xz", state="0").history_set)


def test_refine_to_full_examples():
    hs = single_measurement_model().history_set
    fine = refine_to_full(hs)
    assert len(fine.families[-1]) == 4
    assert is_full(fine).full
    part = Partition.from_family_groupings(fine, [None, [list(range(4))]])
    coarse = decoherence_matrix(fine, part).entries
    assert ops.max_abs(coarse - decoherence_matrix(hs).entries) <= 1e-10

    psi = np.array([0.5, 0.5, 0.5, 0.5j])
    full_set = HistorySet(np.zeros((4, 4)), [family_from_basis(1.0, np.eye(4))], psi=psi)
    again = refine_to_full(full_set)
    key_a, key_b = is_full(full_set).key, is_full(again).key
    assert same_equivalence_class(key_a, key_b)
    p0 = np.real(np.diag(decoherence_matrix(full_set).entries))
    p1 = np.real(np.diag(decoherence_matrix(again).entries))
    assert np.allclose(sorted(p0), sorted(p1[p1 > 1e-12]))

    triv = refine_to_full(trivial_pure(psi))
    assert is_full(triv).full and len(triv.histories) == 4

    with pytest.raises(NotMediumDecoherent):
        refine_to_full(qubit_model("xz", state="0").history_set)


def test_same_equivalence_class_examples():
    z = EquivalenceClassKey(tuple(ops.projector_onto(v) for v in np.eye(2)))
    zr = EquivalenceClassKey(tuple(reversed(z.basis)))
    xb = ops.qubit_basis("x")
    x = EquivalenceClassKey(tuple(ops.projector_onto(xb[:, i] * 1j) for i in range(2)))
    assert same_equivalence_class(z, z) and same_equivalence_class(z, zr)
    assert not same_equivalence_class(z, x)


def _collapse(new_idx, repeats):
    """Original history for an index of the repeated set, or None if the repeats disagree."""
    src = new_idx[0]
    if any(new_idx[k] != src for k in range(1, 1 + repeats)):
        return None
    return (src,) + tuple(new_idx[1 + repeats:])


@pytest.mark.parametrize("seed", range(5))
def test_interpolate_repeat_leaves_d_invariant(seed):
    hs = random_model(seed, dim=4, n_times=3).history_set
    t_mid = 0.5 * (hs.times[0] + hs.times[1])
    d0 = decoherence_matrix(hs).entries
    pos = {h: i for i, h in enumerate(hs.histories)}
    current = hs
    for repeats in (1, 2):
        current = interpolate_repeat(current, t_mid)
        dm = decoherence_matrix(current).entries
        for i, a in enumerate(current.histories):
            for j, b in enumerate(current.histories):
                ka, kb = _collapse(a, repeats), _collapse(b, repeats)
                if ka is None or kb is None:
                    assert abs(dm[i, j]) <= 1e-12
                else:
                    assert abs(dm[i, j] - d0[pos[ka], pos[kb]]) <= 1e-12


def test_interpolate_repeat_moves_schrodinger_projectors():
    hs = qubit_model("xz", "z", state="0").history_set
    new = interpolate_repeat(hs, 1.5)
    # x-projectors precess under sigma_z, so the stored copy at t=1.5 differs
    assert ops.max_abs(new.families[1].projectors[0] - hs.families[0].projectors[0]) > 0.1
    for h in hs.histories:
        assert ops.max_abs(new.chain((h[0], h[0], h[1])) - hs.chain(h)) <= 1e-12
    with pytest.raises(Exception):
        interpolate_repeat(hs, 0.5)


def test_interpolate_resolution_examples():
    psi = np.array([0.6, 0.8j])
    triv = interpolate_resolution(trivial_pure(psi), 1.5, 1)
    fam = triv.families[-1]
    assert len(fam) == 2 and ops.max_abs(fam.projectors[0] - ops.projector_onto(psi)) < 1e-12

    hs = measurement_model().history_set
    new = interpolate_resolution(hs, 1.5, 1)
    assert classify_level(new) == "medium"
    groupings = [None] * len(new.families)
    inserted = [k for k, f in enumerate(new.families) if f.time == 1.5][0]
    groupings[inserted] = [list(range(len(new.families[inserted])))]
    part = Partition.from_family_groupings(new, groupings)
    coarse = decoherence_matrix(new, part).entries
    assert ops.max_abs(coarse - decoherence_matrix(hs).entries) <= 1e-10
    old_b = branch_vectors(hs)
    new_b = branch_vectors(new)
    live_new = sorted(np.round(np.linalg.norm(new_b.vectors[new_b.nonvanishing()], axis=1), 10))
    assert live_new == sorted(np.round(old_b.norms[old_b.nonvanishing()], 10))


def classify_level(hs):
    from qhistories.decoherence import classify
    return classify(decoherence_matrix(hs)).level
