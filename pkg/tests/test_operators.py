import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhistories import operators as ops
from qhistories.errors import ValidationError


def naive_product(a, b):
    n = a.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_multiply_examples(rng):
    eye = np.eye(3, dtype=complex)
    assert np.array_equal(ops.multiply(eye, eye), eye)
    assert np.allclose(ops.multiply(ops.SIGMA_X, ops.SIGMA_X), np.eye(2))
    a, b = ops.random_hermitian(4, rng), ops.random_unitary(4, rng)
    assert ops.max_abs(ops.multiply(a, b) - naive_product(a, b)) < 1e-12


def test_multiply_dimension_mismatch():
    with pytest.raises(ValidationError):
        ops.multiply(np.eye(2), np.eye(3))


def test_eig_hermitian_examples(rng):
    vals, vecs = ops.eig_hermitian(np.diag([3.0, 1.0]))
    assert np.allclose(vals, [1, 3])
    assert np.allclose(np.abs(vecs), [[0, 1], [1, 0]])
    vals, _ = ops.eig_hermitian(ops.SIGMA_X)
    assert np.allclose(vals, [-1, 1])  # roots of lambda^2 - 1
    h = ops.random_hermitian(8, rng)
    vals, vecs = ops.eig_hermitian(h)
    assert ops.max_abs(vecs @ np.diag(vals) @ vecs.conj().T - h) <= 1e-10
    assert ops.is_unitary(vecs)
    assert np.all(np.diff(vals) >= 0)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        ops.eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_propagator_examples(rng):
    assert np.array_equal(ops.propagator(ops.random_hermitian(3, rng), 0.0), np.eye(3))
    assert np.allclose(ops.propagator(ops.SIGMA_Z, np.pi), -np.eye(2), atol=1e-12)
    h = ops.random_hermitian(5, rng)
    u1, u2 = ops.propagator(h, 0.3), ops.propagator(h, 1.1)
    assert ops.max_abs(u1 @ u2 - ops.propagator(h, 1.4)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dt=st.floats(-10, 10), dim=st.integers(1, 8))
def test_propagator_unitary(seed, dt, dim):
    h = ops.random_hermitian(dim, np.random.default_rng(seed))
    u = ops.propagator(h, dt)
    assert ops.max_abs(u.conj().T @ u - np.eye(dim)) <= 1e-10


def test_to_heisenberg_examples():
    p = np.diag([1.0, 0.0]).astype(complex)
    assert np.array_equal(ops.to_heisenberg(p, ops.SIGMA_X, 2.0, 2.0), p)
    for t in (0.3, 1.7, 5.0):
        assert np.allclose(ops.to_heisenberg(p, ops.SIGMA_Z, t), p)
    # e^{i sx pi/4} |0><0| e^{-i sx pi/4}: cos^2(pi/4) = 1/2 on the diagonal
    ph = ops.to_heisenberg(p, ops.SIGMA_X, np.pi / 4)
    assert abs(ph[0, 0] - 0.5) < 1e-12
    ops.check_projector(ph)


def test_to_heisenberg_preserves_rank_and_spectrum(rng):
    _, vecs = np.linalg.eigh(ops.random_hermitian(6, rng))
    p = ops.projector_onto(vecs[:, :2])
    ph = ops.to_heisenberg(p, ops.random_hermitian(6, rng), 0.8, 0.1)
    assert ops.rank(ph) == 2
    assert np.allclose(np.linalg.eigvalsh(ph), [0, 0, 0, 0, 1, 1], atol=1e-10)
    assert np.allclose(ops.to_schrodinger(ph, ops.random_hermitian(6, np.random.default_rng(0)), 0, 0), ph)


def test_tensor_examples(rng):
    assert np.array_equal(ops.tensor(np.eye(2), np.eye(3)), np.eye(6))
    p = np.diag([1.0, 0.0])
    assert ops.rank(ops.tensor(p, np.eye(3))) == 3
    a, b, c, d = (ops.random_unitary(2, rng) for _ in range(4))
    assert ops.max_abs(ops.tensor(a, b) @ ops.tensor(c, d) - ops.tensor(a @ c, b @ d)) <= 1e-12


def test_entropy_examples(rng):
    assert ops.entropy(ops.pure_density(ops.random_unitary(3, rng)[:, 0])) < 1e-10
    assert abs(ops.entropy(ops.maximally_mixed(5)) - np.log(5)) < 1e-12
    expected = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
    assert abs(ops.entropy(np.diag([0.75, 0.25])) - expected) < 1e-14


def test_entropy_clamps_and_rejects():
    assert ops.entropy(np.diag([1.0 + 5e-10, -5e-10])) < 1e-8
    with pytest.raises(ValidationError):
        ops.entropy(np.diag([1.1, -0.1]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_entropy_bounds_and_unitary_invariance(seed, dim):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    s = ops.entropy(rho)
    assert -1e-12 <= s <= np.log(dim) + 1e-10
    u = ops.random_unitary(dim, rng)
    assert abs(ops.entropy(u @ rho @ u.conj().T) - s) <= 1e-10


def test_role_validators():
    with pytest.raises(ValidationError):
        ops.check_projector(np.diag([1.0, 0.5]))
    with pytest.raises(ValidationError):
        ops.check_density_matrix(np.diag([0.6, 0.6]))
    with pytest.raises(ValidationError):
        ops.check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        ops.check_state_vector([1.0, 1.0])
    with pytest.raises(ValidationError):
        ops.as_operator([[np.nan]])
    assert ops.is_pure(ops.pure_density([0.6, 0.8]))
    assert not ops.is_pure(ops.maximally_mixed(2))


def test_check_spectrum(rng):
    h = ops.random_hermitian(5, rng)
    vals, vecs = ops.eig_hermitian(h)
    ops.check_spectrum(h, vals, vecs)
    with pytest.raises(ValidationError):
        ops.check_spectrum(h, vals + 0.1, vecs)
