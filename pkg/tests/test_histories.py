import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhistories import operators as ops
from qhistories.errors import CompletenessViolation, ExclusivityViolation, ValidationError
from qhistories.histories import (HistorySet, Partition, ScheduledFamily, chain_operator, class_operators,
                                  coarse_grain_families, family_from_basis, is_coarse_graining_of,
                                  make_family, reassign_times, sum_identity_check, trivial_family)
from qhistories.models import qubit_model, random_model

Z0, Z1 = np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)
XP = ops.projector_onto(ops.qubit_basis("x")[:, 0])


def zfam(t):
    return family_from_basis(t, ops.qubit_basis("z"), labels=["0", "1"])


def xfam(t):
    return family_from_basis(t, ops.qubit_basis("x"), labels=["+", "-"])


def test_make_family_examples():
    fam = make_family(1.0, [Z0, Z1])
    assert len(fam) == 2 and fam.time == 1.0
    assert len(make_family(0.0, [np.eye(2)])) == 1
    with pytest.raises(ExclusivityViolation):
        make_family(1.0, [Z0, XP])
    with pytest.raises(CompletenessViolation):
        make_family(1.0, [Z0])
    with pytest.raises(ValidationError):
        make_family(1.0, [Z0, Z1], labels=["a", "a"])


def test_family_arrays_are_read_only():
    fam = make_family(1.0, [Z0, Z1])
    with pytest.raises(ValueError):
        fam.projectors[0][0, 0] = 2


def test_chain_operator_examples():
    h0 = np.zeros((2, 2))
    hs = HistorySet(h0, [zfam(1.0)], rho=ops.maximally_mixed(2))
    assert np.allclose(chain_operator(hs, (0,)).matrix, Z0)
    hs = HistorySet(h0, [zfam(1.0), zfam(2.0)], rho=ops.maximally_mixed(2))
    assert np.allclose(chain_operator(hs, (0, 1)).matrix, 0)
    hs = HistorySet(h0, [xfam(1.0), zfam(2.0)], rho=ops.maximally_mixed(2))
    c = chain_operator(hs, (0, 0)).matrix  # |0><0| |+><+|, latest leftmost
    assert np.allclose(c, [[0.5, 0.5], [0, 0]])
    assert chain_operator(hs, (0, 0)).members == frozenset([(0, 0)])
    with pytest.raises(ValidationError):
        chain_operator(hs, (2, 0))


def test_chain_uses_heisenberg_projectors(rng):
    h = ops.random_hermitian(2, rng)
    hs = HistorySet(h, [zfam(0.7)], rho=ops.maximally_mixed(2), t0=0.2)
    expected = ops.to_heisenberg(Z1, h, 0.7, 0.2)
    assert ops.max_abs(hs.chain((1,)) - expected) < 1e-12


def test_long_chains_need_not_be_projectors():
    hs = HistorySet(np.zeros((2, 2)), [xfam(1.0), zfam(2.0)], rho=ops.maximally_mixed(2))
    c = hs.chain((0, 0))
    assert ops.max_abs(c @ c - c) > 0.1 or ops.max_abs(c - c.conj().T) > 0.1


def test_sum_identity_examples():
    hs = qubit_model("zxz", "x").history_set
    check = sum_identity_check(hs)
    assert check.ok and check.deviation <= 1e-10
    assert sum_identity_check(HistorySet(np.zeros((2, 2)), [trivial_family(1, 2)], rho=ops.maximally_mixed(2))).ok
    corrupt = ScheduledFamily(1.0, (Z0,), ("0",))  # bypasses validation on purpose
    bad = HistorySet(np.zeros((2, 2)), [corrupt], rho=ops.maximally_mixed(2))
    check = sum_identity_check(bad)
    assert not check.ok and abs(check.deviation - ops.max_abs(Z1)) < 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_sum_identity_random(seed):
    assert sum_identity_check(random_model(seed, dim=5, n_times=3).history_set).deviation <= 1e-9


def test_equal_times_must_commute():
    h0 = np.zeros((2, 2))
    HistorySet(h0, [zfam(1.0), zfam(1.0)], rho=ops.maximally_mixed(2))
    with pytest.raises(ValidationError):
        HistorySet(h0, [zfam(1.0), xfam(1.0)], rho=ops.maximally_mixed(2))
    with pytest.raises(ValidationError):
        HistorySet(h0, [zfam(2.0), zfam(1.0)], rho=ops.maximally_mixed(2))
    with pytest.raises(ValidationError):
        HistorySet(h0, [zfam(1.0)], rho=ops.maximally_mixed(2), t0=1.5)


def test_coarse_grain_examples():
    hs = random_model(3, dim=4, n_times=2).history_set
    same = coarse_grain_families(hs, [None, None])
    assert np.allclose(same.chains(), hs.chains())
    one = class_operators(hs, Partition.trivial(hs))
    assert len(one) == 1 and ops.max_abs(one[0].matrix - np.eye(4)) < 1e-10

    zz = family_from_basis(1.0, np.eye(4))
    hs2 = HistorySet(np.zeros((4, 4)), [zz], rho=ops.maximally_mixed(4))
    coarse = coarse_grain_families(hs2, [[[0, 1], [2, 3]]])
    assert np.allclose(coarse.families[0].projectors[0], ops.tensor(Z0, np.eye(2)))
    assert np.allclose(coarse.families[0].projectors[1], ops.tensor(Z1, np.eye(2)))
    with pytest.raises(ValidationError):
        coarse_grain_families(hs2, [[[0, 1], [1, 2, 3]]])


@pytest.mark.parametrize("seed", range(10))
def test_class_operators_match_recomputed_sums(seed):
    hs = random_model(seed, dim=4, n_times=2).history_set
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=len(hs.histories))
    blocks = [[h for h, l in zip(hs.histories, labels) if l == b] for b in range(3)]
    part = Partition.of(hs, [b for b in blocks if b])
    for cls in class_operators(hs, part):
        direct = np.zeros((4, 4), dtype=complex)
        for h in cls.members:
            c = np.eye(4, dtype=complex)
            for k, a in enumerate(h):
                c = ops.to_heisenberg(hs.families[k].projectors[a], hs.hamiltonian,
                                      hs.families[k].time, hs.t0) @ c
            direct += c
        assert ops.max_abs(cls.matrix - direct) < 1e-12


def test_partition_validation():
    hs = qubit_model("zz").history_set
    with pytest.raises(ValidationError):
        Partition.of(hs, [[(0, 0)], [(0, 0), (0, 1)], [(1, 0), (1, 1)]])
    with pytest.raises(ValidationError):
        Partition.of(hs, [[(0, 0)]])


def test_is_coarse_graining_of_examples():
    h0 = np.zeros((2, 2))
    rho = ops.maximally_mixed(2)
    a = HistorySet(h0, [zfam(1.0)], rho=rho)
    assert is_coarse_graining_of(a, a)
    assert is_coarse_graining_of(HistorySet(h0, [trivial_family(1.0, 2)], rho=rho), a)
    assert not is_coarse_graining_of(HistorySet(h0, [xfam(1.0)], rho=rho), a)


def test_is_coarse_graining_transitive():
    fine = HistorySet(np.zeros((4, 4)), [family_from_basis(1.0, np.eye(4))], rho=ops.maximally_mixed(4))
    mid = coarse_grain_families(fine, [[[0], [1], [2, 3]]])
    top = coarse_grain_families(fine, [[[0, 1], [2, 3]]])
    assert is_coarse_graining_of(mid, fine) and is_coarse_graining_of(top, mid)
    assert is_coarse_graining_of(top, fine)
    assert not is_coarse_graining_of(fine, top)


def test_reassign_times_examples():
    hs = qubit_model("zxz", "zero").history_set
    assert np.allclose(reassign_times(hs, hs.times).chains(), hs.chains())
    shifted = reassign_times(hs, [t + 1 for t in hs.times])
    assert np.allclose(shifted.chains(), hs.chains())
    hz = qubit_model("zxz", "z").history_set
    moved = reassign_times(hz, [1.0, 2.5, 3.0])
    assert ops.max_abs(moved.chains() - hz.chains()) > 1e-3
    assert all(np.array_equal(p, q) for f, g in zip(moved.families, hz.families)
               for p, q in zip(f.projectors, g.projectors))
    with pytest.raises(ValidationError):
        reassign_times(hs, [3.0, 2.0, 1.0])


def test_reassign_times_keep_heisenberg_preserves_chains():
    hs = qubit_model("zxz", "x").history_set
    moved = reassign_times(hs, [0.5, 2.2, 4.0], keep="heisenberg")
    assert ops.max_abs(moved.chains() - hs.chains()) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), dim=st.integers(1, 6), n=st.integers(0, 3))
def test_random_sets_complete(seed, dim, n):
    hs = random_model(seed, dim=dim, n_times=n).history_set
    assert len(hs.histories) == int(np.prod([len(f) for f in hs.families]))
    assert sum_identity_check(hs).deviation <= 1e-9
