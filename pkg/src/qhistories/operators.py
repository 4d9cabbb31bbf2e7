"""Dense operator substrate.

Operators are plain complex ``numpy`` arrays. The role types used elsewhere
(Hermitian operator, projector, density matrix, state vector) are enforced by
the ``check_*`` validators below rather than by wrapper classes.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import ValidationError

HERM_TOL = 1e-9
EIG_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_QUBIT_BASES = {
    "z": np.eye(2, dtype=complex),
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
}


def as_operator(a) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"operator must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("operator has non-finite entries")
    return m


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def is_diagonal(a: np.ndarray) -> bool:
    return not np.any(a[~np.eye(a.shape[0], dtype=bool)])


def check_hermitian(h, tol: float = HERM_TOL) -> np.ndarray:
    h = as_operator(h)
    dev = max_abs(h - dagger(h))
    if dev > tol:
        raise ValidationError(f"operator is not Hermitian (max |H - H^dag| = {dev:.3e})")
    return h


def product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product that drops to real arithmetic when both factors are real."""
    if not np.any(a.imag) and not np.any(b.imag):
        # .real is a strided view; BLAS needs contiguous input
        return (np.ascontiguousarray(a.real) @ np.ascontiguousarray(b.real)).astype(complex)
    return a @ b


def check_projector(p, tol: float = HERM_TOL) -> np.ndarray:
    """Validate hermiticity and idempotence of ``p``.

    Diagonal projectors are checked entrywise, which keeps validation of large
    computational-basis families cheap.
    """
    p = check_hermitian(p, tol)
    if is_diagonal(p):
        diag = np.diag(p)
        dev = max_abs(diag * diag - diag)
    else:
        dev = max_abs(product(p, p) - p)
    if dev > tol:
        raise ValidationError(f"operator is not idempotent (max |P^2 - P| = {dev:.3e})")
    return p


def rank(p: np.ndarray) -> int:
    """Rank of a projector, read off its trace."""
    return int(round(float(np.real(np.trace(p)))))


def check_state_vector(psi, tol: float = HERM_TOL) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise ValidationError("state vector must be non-empty and finite")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"state vector is not normalized (norm = {norm:.12g})")
    return v


def check_density_matrix(rho, tol: float = HERM_TOL) -> np.ndarray:
    rho = check_hermitian(rho, tol)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"density matrix trace is {tr.real:.12g}, expected 1")
    lowest = float(np.linalg.eigvalsh(rho)[0])
    if lowest < -tol:
        raise ValidationError(f"density matrix has negative eigenvalue {lowest:.3e}")
    return rho


def is_pure(rho: np.ndarray, tol: float = HERM_TOL) -> bool:
    """True iff Tr(rho^2) = 1 within ``tol``."""
    purity = float(np.real(np.vdot(rho, rho)))
    return abs(purity - 1.0) <= tol


def pure_density(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))


def maximally_mixed(dim: int) -> np.ndarray:
    """The density matrix 1/Tr(1) of complete ignorance."""
    return np.eye(dim, dtype=complex) / dim


def dominant_vector(rho: np.ndarray) -> np.ndarray:
    """State vector of a pure density matrix (phase fixed by the largest entry)."""
    _, vecs = np.linalg.eigh(rho)
    v = vecs[:, -1]
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector_onto(vectors) -> np.ndarray:
    """Orthogonal projector onto the span of the given (orthonormal) columns."""
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    return v @ dagger(v)


def qubit_basis(name: str) -> np.ndarray:
    """Columns are the two basis vectors of the named single-qubit basis."""
    try:
        return _QUBIT_BASES[name].copy()
    except KeyError:
        raise ValueError(f"unknown qubit basis {name!r}; expected one of {sorted(_QUBIT_BASES)}")


def multiply(a, b) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more operators (or vectors)."""
    if not ops:
        raise ValueError("tensor() needs at least one factor")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def embed(op, site: int, dims) -> np.ndarray:
    """Place ``op`` on tensor factor ``site`` with identities elsewhere."""
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[site] = np.asarray(op, dtype=complex)
    return tensor(*factors)


def eig_hermitian(h, tol: float = HERM_TOL):
    """Eigendecomposition of a Hermitian operator.

    Returns:
        ``(values, vectors)`` with ascending real eigenvalues and unitary
        eigenvector columns, so that ``h = V diag(values) V^dag``.
    """
    h = check_hermitian(h, tol)
    # symmetrize so LAPACK sees an exactly Hermitian input
    return np.linalg.eigh((h + dagger(h)) / 2)


def check_spectrum(h, values, vectors, tol: float = EIG_TOL, probes: int = 3) -> None:
    """Cheap consistency check of a supplied eigendecomposition of ``h``.

    Uses a few fixed random probe vectors instead of a full reconstruction, so
    the cost stays quadratic in the dimension.
    """
    rng = np.random.default_rng(12345)
    dim = h.shape[0]
    scale = max(1.0, max_abs(values))
    for _ in range(probes):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        w = dagger(vectors) @ v
        if abs(np.linalg.norm(w) - 1.0) > tol * 10:
            raise ValidationError("supplied eigenvectors are not unitary")
        dev = np.linalg.norm(h @ v - vectors @ (values * w))
        if dev > tol * 10 * scale * np.sqrt(dim):
            raise ValidationError(f"supplied spectrum does not reproduce H (residual {dev:.3e})")


def propagator_from_spectrum(values, vectors, dt: float) -> np.ndarray:
    phases = np.exp(-1j * np.asarray(values) * dt)
    return (vectors * phases) @ dagger(vectors)


def propagator(h, dt: float, spectrum=None) -> np.ndarray:
    """Unitary ``exp(-i H dt)`` built from the eigendecomposition of ``H``."""
    values, vectors = spectrum if spectrum is not None else eig_hermitian(h)
    if dt == 0:
        return np.eye(len(values), dtype=complex)
    return propagator_from_spectrum(values, vectors, dt)


def evolve_vector(values, vectors, v: np.ndarray, dt: float) -> np.ndarray:
    """Apply ``exp(-i H dt)`` to a vector (or matrix of column vectors) in O(d^2)."""
    if dt == 0:
        return v
    phases = np.exp(-1j * np.asarray(values) * dt)
    if np.ndim(v) == 2:
        phases = phases[:, None]
    return vectors @ (phases * (dagger(vectors) @ v))


def to_heisenberg(p, h, t: float, t0: float = 0.0, spectrum=None) -> np.ndarray:
    """Heisenberg-picture operator ``e^{iH(t-t0)} P e^{-iH(t-t0)}``."""
    p = as_operator(p)
    if t == t0:
        return p.copy()
    u = propagator(h, t - t0, spectrum)
    return dagger(u) @ p @ u


def to_schrodinger(p, h, t: float, t0: float = 0.0, spectrum=None) -> np.ndarray:
    """Inverse of :func:`to_heisenberg`: ``e^{-iH(t-t0)} P e^{iH(t-t0)}``."""
    p = as_operator(p)
    if t == t0:
        return p.copy()
    u = propagator(h, t - t0, spectrum)
    return u @ p @ dagger(u)


def entropy_of_probabilities(p) -> float:
    """Shannon entropy in nats with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return max(0.0, float(-np.sum(nz * np.log(nz))))


def entropy(rho, tol: float = HERM_TOL) -> float:
    """Von Neumann entropy ``-Tr(rho ln rho)`` in nats.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more negative is
    treated as invalid input.
    """
    rho = check_hermitian(rho, tol)
    evals = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
    if evals[0] < -tol:
        raise ValidationError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
    return entropy_of_probabilities(np.clip(evals, 0.0, None))


def is_unitary(u, tol: float = EIG_TOL) -> bool:
    u = as_operator(u)
    return max_abs(dagger(u) @ u - np.eye(u.shape[0])) <= tol


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (a + dagger(a)) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
