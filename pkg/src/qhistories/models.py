"""Reproducible model constructions.

Every builder returns a :class:`ModelBundle` holding the history set and the
analytically known quantities it should reproduce, each tagged with how the
expected value was obtained.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import operators as ops
from .errors import ValidationError
from .histories import HistorySet, family_from_basis, make_family

NORMALIZATION_TOL = 1e-3


@dataclass(frozen=True)
class Expected:
    value: object
    tag: str  # "TRIVIAL" or "DERIVED"
    oracle: str = ""


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ModelBundle:
    name: str
    params: dict
    history_set: HistorySet
    expected: dict
    operators: dict = field(default_factory=dict)


def _normalized(a, b):
    a, b = complex(a), complex(b)
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"|a|^2 + |b|^2 = {norm:.6g}, expected 1")
    return a / np.sqrt(norm), b / np.sqrt(norm)


# measurement model -----------------------------------------------------------

def controlled_copy_z() -> np.ndarray:
    """CNOT: system z-value copied onto apparatus 1 (factors: system, app1, app2)."""
    p0, p1 = np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)
    return ops.tensor(p0, ops.I2, ops.I2) + ops.tensor(p1, ops.SIGMA_X, ops.I2)


def controlled_copy_x() -> np.ndarray:
    """System x-value copied onto apparatus 2 (|-> flips the pointer)."""
    xb = ops.qubit_basis("x")
    pp, pm = ops.projector_onto(xb[:, 0]), ops.projector_onto(xb[:, 1])
    return ops.tensor(pp, ops.I2, ops.I2) + ops.tensor(pm, ops.I2, ops.SIGMA_X)


def _hamiltonian_of_step(w: np.ndarray):
    """Hermitian H with exp(-iH) = w, from the complex Schur form of the unitary w."""
    t, z = scipy.linalg.schur(w, output="complex")
    angles = np.angle(np.diag(t))
    h = (z * -angles) @ ops.dagger(z)
    return (h + ops.dagger(h)) / 2


def measurement_model(a: complex = 1 / np.sqrt(2), b: complex = 1 / np.sqrt(2)) -> ModelBundle:
    """Two non-commuting system observables recorded by two commuting pointers.

    The system qubit starts in ``a|0> + b|1>`` with both apparatus qubits and a
    clock qubit in ``|0>``. One unit of evolution applies the z-copy while the
    clock reads 0 and the x-copy while it reads 1, flipping the clock each
    time. The clock lets a single time-independent Hamiltonian perform the two
    different interactions between ``t0=0 -> t1=1`` and ``t1 -> t2=2``.

    Histories: system z at ``t1`` then system x at ``t2``.
    """
    a, b = _normalized(a, b)

    dims = (2, 2, 2, 2)  # system, apparatus 1, apparatus 2, clock
    up = np.array([[0, 0], [1, 0]], dtype=complex)   # |1><0| on the clock
    down = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
    step = np.kron(controlled_copy_z(), up) + np.kron(controlled_copy_x(), down)
    h = _hamiltonian_of_step(step)

    zb, xb = ops.qubit_basis("z"), ops.qubit_basis("x")
    psi = ops.tensor(a * zb[:, 0] + b * zb[:, 1], zb[:, 0], zb[:, 0], zb[:, 0])
    sys_z = [ops.embed(ops.projector_onto(zb[:, s]), 0, dims) for s in range(2)]
    sys_x = [ops.embed(ops.projector_onto(xb[:, s]), 0, dims) for s in range(2)]
    hs = HistorySet(h, [make_family(1.0, sys_z, ["z0", "z1"]), make_family(2.0, sys_x, ["x+", "x-"])],
                    psi=psi, t0=0.0)

    u2 = hs.propagator(2.0)
    pointer = lambda site, s: ops.dagger(u2) @ ops.embed(ops.projector_onto(zb[:, s]), site, dims) @ u2
    q1 = [pointer(1, s) for s in range(2)]
    q2 = [pointer(2, s) for s in range(2)]  # app2 = 0 for x=+, 1 for x=-
    p1 = list(hs.heisenberg_families[0])
    p2 = list(hs.heisenberg_families[1])

    amps = (a, b)
    probs = {(s, x): abs(amps[s]) ** 2 / 2 for s in range(2) for x in range(2)}
    expected = {
        "probabilities": Expected(probs, "DERIVED",
                                  "p(z=s, x) = |amp_s|^2 |<x|s>|^2 = |amp_s|^2 / 2"),
        "decoherence_level": Expected("medium", "DERIVED", "pointer states of distinct histories are orthogonal"),
        "implication_chain": Expected((True, True, True), "DERIVED", "records exist for a pure state"),
        "pointer_records": Expected(True, "DERIVED", "P2(t2) P1(t1) rho = Q2 Q1 rho by construction"),
    }
    return ModelBundle("measurement", {"a": a, "b": b}, hs, expected,
                       {"P1": p1, "P2": p2, "Q1": q1, "Q2": q2, "step": step})


def measurement_step_oracle(a: complex, b: complex) -> dict:
    """Probabilities from explicit step-by-step evolution with the two copy gates.

    Independent of the Hamiltonian and of the chain machinery.
    """
    zb, xb = ops.qubit_basis("z"), ops.qubit_basis("x")
    state = ops.tensor(a * zb[:, 0] + b * zb[:, 1], zb[:, 0], zb[:, 0])
    state = controlled_copy_z() @ state
    out = {}
    for s in range(2):
        v = ops.embed(ops.projector_onto(zb[:, s]), 0, (2, 2, 2)) @ state
        v = controlled_copy_x() @ v
        for x in range(2):
            w = ops.embed(ops.projector_onto(xb[:, x]), 0, (2, 2, 2)) @ v
            out[(s, x)] = float(np.vdot(w, w).real)
    return out


def single_measurement_model(a: complex = 1 / np.sqrt(2), b: complex = 1 / np.sqrt(2)) -> ModelBundle:
    """System qubit whose z-value is copied onto one apparatus qubit (d=4).

    One unit of evolution applies a CNOT; the single history family is the
    system-z family at ``t1 = 1``. Branches are ``a|0>|A0>`` and ``b|1>|A1>``.
    """
    a, b = _normalized(a, b)
    zb = ops.qubit_basis("z")
    cnot = ops.tensor(np.diag([1, 0]), ops.I2) + ops.tensor(np.diag([0, 1]), ops.SIGMA_X)
    h = _hamiltonian_of_step(cnot.astype(complex))
    psi = ops.tensor(a * zb[:, 0] + b * zb[:, 1], zb[:, 0])
    sys_z = [ops.embed(ops.projector_onto(zb[:, s]), 0, (2, 2)) for s in range(2)]
    hs = HistorySet(h, [make_family(1.0, sys_z, ["z0", "z1"])], psi=psi, t0=0.0)
    expected = {
        "branches": Expected({(0,): a * ops.ket(0, 4), (1,): b * ops.ket(2, 4)}, "DERIVED",
                             "U|s>|0> = |s>|s>; the Heisenberg branch U^dag P_s U psi is amp_s |s>|0>"),
        "full": Expected(False, "DERIVED", "two branches in dimension four"),
    }
    return ModelBundle("single-measurement", {"a": a, "b": b}, hs, expected, {"step": cnot})


# environment model -------------------------------------------------------------

def environment_model(n_env: int, theta: float) -> ModelBundle:
    """A system qubit whose z-value is scattered into ``n_env`` environment qubits.

    ``H = (theta/4) |1><1|_sys (x) sum_j sigma_y^(j)``, so each environment
    qubit is rotated by ``theta/2`` per unit time when the system reads 1; by
    ``t2 = 2`` the two conditional environment states differ by a rotation of
    ``theta`` per qubit. Histories: system z at ``t1 = 1``, system x at
    ``t2 = 2`` on the initial state ``|+>|0...0>``.

    Expected: the largest normalized off-diagonal overlap is ``|cos(theta/2)|^n_env``.
    """
    n_env = int(n_env)
    if n_env < 0:
        raise ValidationError("n_env must be non-negative")
    if not 0 < theta <= np.pi:
        raise ValidationError("theta must lie in (0, pi]")
    env_dim = 2 ** n_env
    rate = theta / 4

    # eigenvectors of sum_j sigma_y^(j): tensor products of sigma_y eigenvectors
    yb = ops.qubit_basis("y")
    env_vecs = ops.tensor(*([yb] * n_env)) if n_env else np.ones((1, 1), dtype=complex)
    bits = (np.arange(env_dim)[:, None] >> np.arange(n_env)[::-1]) & 1
    env_vals = np.sum(1 - 2 * bits, axis=1).astype(float)
    values = np.concatenate([np.zeros(env_dim), rate * env_vals])
    vectors = scipy.linalg.block_diag(np.eye(env_dim, dtype=complex), env_vecs)
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order]

    h = np.zeros((2 * env_dim, 2 * env_dim), dtype=complex)
    h[env_dim:, env_dim:] = (env_vecs * (rate * env_vals)) @ ops.dagger(env_vecs)
    h = (h + ops.dagger(h)) / 2

    zb, xb = ops.qubit_basis("z"), ops.qubit_basis("x")
    env0 = np.zeros(env_dim, dtype=complex)
    env0[0] = 1.0
    psi = np.kron(xb[:, 0], env0)
    dims = (2, env_dim)
    sys_z = [ops.embed(ops.projector_onto(zb[:, s]), 0, dims) for s in range(2)]
    sys_x = [ops.embed(ops.projector_onto(xb[:, s]), 0, dims) for s in range(2)]
    hs = HistorySet(h, [make_family(1.0, sys_z, ["z0", "z1"]), make_family(2.0, sys_x, ["x+", "x-"])],
                    psi=psi, t0=0.0, spectrum=(values, vectors))
    overlap = abs(np.cos(theta / 2)) ** n_env
    expected = {
        "max_normalized_overlap": Expected(
            overlap, "DERIVED", "product of single-qubit overlaps |<0|R_y(theta)|0>| = |cos(theta/2)|"),
    }
    return ModelBundle("environment", {"n_env": n_env, "theta": theta}, hs, expected)


# qubit sequences -----------------------------------------------------------------

_HAMILTONIANS = {"zero": np.zeros((2, 2), dtype=complex), "x": ops.SIGMA_X, "y": ops.SIGMA_Y, "z": ops.SIGMA_Z}


def qubit_model(bases: str = "zxz", hamiltonian="zero", state="ind", times=None,
                t0: float = 0.0) -> ModelBundle:
    """Single-qubit history set with one rank-one family per letter of ``bases``.

    Args:
        hamiltonian: ``"zero"``, ``"x"``, ``"y"``, ``"z"`` (Pauli matrices) or a 2x2 matrix.
        state: ``"ind"`` (maximally mixed), ``"0"``, ``"1"``, ``"+"``, ``"-"`` or a vector.
        times: defaults to ``1, 2, ..., n``.
    """
    h = _HAMILTONIANS[hamiltonian] if isinstance(hamiltonian, str) else np.asarray(hamiltonian, complex)
    if times is None:
        times = [float(k + 1) for k in range(len(bases))]
    fams = []
    for letter, t in zip(bases, times):
        basis = ops.qubit_basis(letter)
        labels = {"z": ["0", "1"], "x": ["+", "-"], "y": ["+i", "-i"]}[letter]
        fams.append(family_from_basis(t, basis, labels=labels))
    kwargs = {}
    if isinstance(state, str):
        named = {"0": ops.qubit_basis("z")[:, 0], "1": ops.qubit_basis("z")[:, 1],
                 "+": ops.qubit_basis("x")[:, 0], "-": ops.qubit_basis("x")[:, 1]}
        if state == "ind":
            kwargs["rho"] = ops.maximally_mixed(2)
        elif state in named:
            kwargs["psi"] = named[state]
        else:
            raise ValidationError(f"unknown qubit state {state!r}")
    else:
        kwargs["psi"] = np.asarray(state, dtype=complex)
    hs = HistorySet(h, fams, t0=t0, **kwargs)
    return ModelBundle("qubit", {"bases": bases, "hamiltonian": hamiltonian, "state": state}, hs, {})


# random models -----------------------------------------------------------------

def _random_family(rng: np.random.Generator, dim: int, time: float, max_blocks: int):
    _, vecs = np.linalg.eigh(ops.random_hermitian(dim, rng))
    n_blocks = int(rng.integers(1, min(dim, max_blocks) + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=n_blocks - 1, replace=False)) if n_blocks > 1 else []
    groups = np.split(np.arange(dim), cuts)
    return family_from_basis(time, vecs, [list(g) for g in groups])


def random_model(seed: int, dim: int = 4, n_times: int = 2, pure: bool | None = None,
                 max_blocks: int = 4) -> ModelBundle:
    """Random Hamiltonian, initial state and family schedule, deterministic per seed.

    Families partition the eigenvectors of random Hermitian matrices, so they
    are exactly exhaustive and exclusive.
    """
    if not 1 <= dim <= 16 or not 0 <= n_times <= 3:
        raise ValidationError("random models need 1 <= dim <= 16 and 0 <= n_times <= 3")
    rng = np.random.default_rng(seed)
    h = ops.random_hermitian(dim, rng)
    if pure is None:
        pure = bool(rng.integers(0, 2))
    times = np.sort(rng.uniform(0.0, 3.0, size=n_times))
    fams = [_random_family(rng, dim, float(t), max_blocks) for t in times]
    if pure:
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        hs = HistorySet(h, fams, psi=v / np.linalg.norm(v))
    else:
        k = int(rng.integers(1, dim + 1))
        g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
        rho = g @ ops.dagger(g)
        hs = HistorySet(h, fams, rho=rho / np.trace(rho).real)
    expected = {"axioms": Expected(True, "TRIVIAL", "Tr(C' rho C^dag) is a decoherence functional")}
    return ModelBundle("random", {"seed": seed, "dim": dim, "n_times": n_times, "pure": pure}, hs, expected)


# transformations -----------------------------------------------------------------

def unitary_transport(hs: HistorySet, u, conjugate_hamiltonian: bool = True,
                      tol: float = 1e-10) -> HistorySet:
    """Carry a history set through the unitary ``u`` of Hilbert space.

    The Heisenberg projectors and the initial state are conjugated by ``u``, so
    the decoherence functional is unchanged. With ``conjugate_hamiltonian``
    the Hamiltonian is conjugated too (a change of basis, under which every
    quantity is invariant). Otherwise the dynamics stay fixed, and the stored
    Schrodinger projectors follow from the transformed Heisenberg ones; the
    formal-probability entropy then changes unless ``u`` is a symmetry of H.
    """
    u = ops.as_operator(u)
    if not ops.is_unitary(u, tol):
        raise ValidationError("transport operator is not unitary")
    ud = ops.dagger(u)
    state = {"psi": u @ hs.psi} if hs.is_pure else {"rho": u @ hs.rho @ ud}
    if conjugate_hamiltonian:
        fams = [make_family(f.time, [u @ p @ ud for p in f.projectors], f.labels, hs.tol)
                for f in hs.families]
        return HistorySet(u @ hs.hamiltonian @ ud, fams, t0=hs.t0, tol=hs.tol, **state)
    fams = []
    for k, f in enumerate(hs.families):
        v = hs.propagator(f.time - hs.t0)
        projs = [v @ u @ p @ ud @ ops.dagger(v) for p in hs.heisenberg_families[k]]
        fams.append(make_family(f.time, projs, f.labels, hs.tol))
    return HistorySet(hs.hamiltonian, fams, t0=hs.t0, tol=hs.tol, **state)


# registry --------------------------------------------------------------------------

_BUILDERS = {
    "measurement": (measurement_model, {"a": complex, "b": complex}),
    "single-measurement": (single_measurement_model, {"a": complex, "b": complex}),
    "environment": (environment_model, {"n_env": int, "theta": float}),
    "random": (random_model, {"seed": int, "dim": int, "n_times": int, "max_blocks": int}),
    "qubit": (qubit_model, {"bases": str, "hamiltonian": str, "state": str}),
}


def model_names() -> list:
    return sorted(_BUILDERS)


def build_model(spec: ModelSpec) -> ModelBundle:
    """Build a model from its name and (string or typed) parameters."""
    try:
        builder, types = _BUILDERS[spec.name]
    except KeyError:
        raise ValidationError(f"unknown model {spec.name!r}; available: {model_names()}")
    kwargs = {}
    for key, value in spec.params.items():
        if key not in types:
            raise ValidationError(f"model {spec.name!r} has no parameter {key!r}")
        try:
            kwargs[key] = types[key](value)
        except (TypeError, ValueError):
            raise ValidationError(f"model parameter {key}={value!r} is not a valid {types[key].__name__}")
    return builder(**kwargs)
