"""Classicality measures: the formal-probability entropy and the max-entropy measure.

The formal probabilities use Schrodinger-picture chains with the maximally
mixed state. The max-entropy measure maximizes the von Neumann entropy over
density matrices that reproduce every value of the decoherence functional,
solved through the convex dual

    g(lam) = ln Tr exp(-sum_k lam_k B_k) + sum_k lam_k c_k,

whose minimizer gives ``rho~ = exp(-sum lam B) / Z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .errors import NotConverged
from .histories import ZERO_TOL, HistorySet

SOLVER_TOL = 1e-8
MAX_ITER = 10000
GRAM_CUTOFF = 1e-10
METHODS = ("newton", "bfgs", "gradient")


@dataclass(frozen=True, eq=False)
class SchrodingerChain:
    matrix: np.ndarray
    index: tuple


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Hermitian constraint operators ``A_k`` with targets ``Tr(A_k rho~) = c_k``.

    ``provenance[k]`` is ``("norm",)`` or ``(alpha', alpha, "re" | "im")``.
    """

    operators: np.ndarray
    targets: np.ndarray
    provenance: tuple
    n_candidates: int

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self):
        return len(self.provenance)

    def residual(self, rho: np.ndarray) -> float:
        values = np.real(np.einsum("kij,ji->k", self.operators, rho))
        return float(np.max(np.abs(values - self.targets))) if len(self) else 0.0


@dataclass(frozen=True)
class ConvergenceInfo:
    iterations: int
    final_residual: float
    converged: bool
    method: str = "newton"
    objective_history: tuple = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class MaxEntResult:
    rho: np.ndarray
    entropy: float
    info: ConvergenceInfo
    multipliers: np.ndarray


@dataclass(frozen=True, eq=False)
class ClassicalityReport:
    s_hat: float
    q_hat: dict
    s_maxent: float
    s_rho: float
    solver: ConvergenceInfo
    constraints_before: int
    constraints_after: int
    rho_tilde: np.ndarray = field(repr=False)
    unit: str = "nats"


# formal probabilities ------------------------------------------------------

def schrodinger_projector(hs: HistorySet, k: int, alpha: int) -> np.ndarray:
    """``e^{-iH(t_k - t0)} P^k_a(t_k) e^{iH(t_k - t0)}`` from the Heisenberg projector."""
    fam = hs.families[k]
    return ops.to_schrodinger(hs.heisenberg_projector(k, alpha), hs.hamiltonian,
                              fam.time, hs.t0, hs.spectrum)


def schrodinger_chain(hs: HistorySet, idx) -> SchrodingerChain:
    idx = tuple(idx)
    c = np.eye(hs.dim, dtype=complex)
    for k, a in enumerate(idx):
        c = schrodinger_projector(hs, k, a) @ c
    return SchrodingerChain(c, idx)


def formal_probabilities(hs: HistorySet) -> dict:
    """``q_a = Tr(C^_a rho_ind C^_a^dag) = Tr(C^_a C^_a^dag) / dim``."""
    chains = hs.chains("schrodinger")
    q = np.real(np.einsum("aij,aij->a", chains, np.conj(chains))) / hs.dim
    return dict(zip(hs.histories, q.tolist()))


def s_hat(hs: HistorySet) -> float:
    """Entropy (nats) of the formal probabilities."""
    return ops.entropy_of_probabilities(list(formal_probabilities(hs).values()))


# constraints -----------------------------------------------------------------

def _hvec(a: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix; dot products equal Tr(AB)."""
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def _hmat(v: np.ndarray, dim: int) -> np.ndarray:
    n = dim * dim
    return (v[:n] + 1j * v[n:]).reshape(dim, dim)


class _GreedySpan:
    """Incremental orthonormal basis used to drop linearly dependent constraints."""

    def __init__(self, length: int, cutoff: float):
        self.basis = np.zeros((0, length))
        self.cutoff = cutoff

    def add(self, v: np.ndarray) -> bool:
        r = v.copy()
        for _ in range(2):
            if len(self.basis):
                r -= self.basis.T @ (self.basis @ r)
        n = np.linalg.norm(r)
        if n <= self.cutoff:
            return False
        self.basis = np.vstack([self.basis, r / n])
        return True


def build_constraints(hs: HistorySet, picture: str = "heisenberg",
                      cutoff: float = GRAM_CUTOFF) -> ConstraintSystem:
    """Hermitian split of every chain-pair condition, reduced to an independent set.

    For each pair, ``A_re = (C_a^dag C_a' + h.c.) / 2`` and
    ``A_im = (C_a^dag C_a' - h.c.) / 2i`` with targets taken from ``hs.rho``.
    The normalization ``Tr rho~ = 1`` is placed first. Pairs involving a
    vanishing chain are skipped (they read ``0 = 0``).

    Args:
        picture: ``"heisenberg"`` constrains the decoherence functional itself;
            ``"schrodinger"`` uses products of the stored Schrodinger projectors.
    """
    dim = hs.dim
    rho = np.asarray(hs.rho)
    chains = hs.chains(picture)
    live = [i for i, c in enumerate(chains) if ops.max_abs(c) > ZERO_TOL]
    scale = max(np.sqrt(dim), max((np.linalg.norm(chains[i]) ** 2 for i in live), default=0.0))
    span = _GreedySpan(2 * dim * dim, cutoff * scale)

    eye = np.eye(dim, dtype=complex)
    span.add(_hvec(eye))
    kept_ops, kept_targets, prov = [eye], [1.0], [("norm",)]
    n_candidates = 1
    full = dim * dim
    for pos, a in enumerate(live):
        ca_dag = ops.dagger(chains[a])
        for b in live[pos:]:
            g = ca_dag @ chains[b]
            parts = [("re", (g + ops.dagger(g)) / 2)]
            if b != a:
                parts.append(("im", (g - ops.dagger(g)) / 2j))
            for tag, op in parts:
                n_candidates += 1
                if len(kept_ops) < full and span.add(_hvec(op)):
                    kept_ops.append(op)
                    kept_targets.append(float(np.real(np.trace(op @ rho))))
                    prov.append((hs.histories[a], hs.histories[b], tag))
    return ConstraintSystem(np.array(kept_ops), np.array(kept_targets), tuple(prov), n_candidates)


# dual solver -----------------------------------------------------------------

class _Dual:
    """Dual objective over traceless orthonormal constraint directions."""

    def __init__(self, basis: np.ndarray, targets: np.ndarray):
        self.basis = basis        # (r, d, d), Tr(B_i B_j) = delta_ij, Tr B = 0
        self.targets = targets
        self.dim = basis.shape[1] if len(basis) else 0

    def evaluate(self, lam: np.ndarray, dim: int, need_hessian: bool):
        m = -np.einsum("k,kij->ij", lam, self.basis) if len(lam) else np.zeros((dim, dim), complex)
        mu, v = np.linalg.eigh((m + ops.dagger(m)) / 2)
        top = mu[-1]
        w = np.exp(mu - top)
        z = w.sum()
        p = w / z
        rho = (v * p) @ ops.dagger(v)
        g = float(np.log(z) + top + lam @ self.targets)
        bt = np.einsum("ij,kjl,lm->kim", ops.dagger(v), self.basis, v) if len(lam) else None
        expect = np.real(np.einsum("kii,i->k", bt, p)) if len(lam) else np.zeros(0)
        grad = self.targets - expect
        hess = None
        if need_hessian and len(lam):
            x = mu - top
            # divided differences of exp, (e^xi - e^xj) / (xi - xj), without overflow
            gap = np.abs(x[:, None] - x[None, :])
            high = np.maximum(x[:, None], x[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                k = np.where(gap > 1e-12, np.exp(high) * -np.expm1(-gap) / gap,
                             np.exp((x[:, None] + x[None, :]) / 2))
            flat = bt.reshape(len(lam), -1)
            hess = np.real(np.conj(flat) @ (k.ravel() * flat).T) / z - np.outer(expect, expect)
            hess = (hess + hess.T) / 2
        return g, grad, hess, rho, p


def _reduced_dual(cs: ConstraintSystem, dim: int):
    """Project constraints onto traceless, orthonormal directions."""
    rows = np.array([_hvec(a) for a in cs.operators]) if len(cs) else np.zeros((0, 2 * dim * dim))
    traces = np.real(np.einsum("kii->k", cs.operators)) if len(cs) else np.zeros(0)
    eye = _hvec(np.eye(dim, dtype=complex))
    tl_rows = rows - np.outer(traces / dim, eye)
    tl_targets = cs.targets - traces / dim
    if not len(tl_rows):
        return _Dual(np.zeros((0, dim, dim), complex), np.zeros(0))
    u, s, wt = np.linalg.svd(tl_rows, full_matrices=False)
    keep = s > GRAM_CUTOFF * max(1.0, s[0] if s.size else 0.0)
    basis_rows = wt[keep]
    targets = (u[:, keep].T @ tl_targets) / s[keep]
    basis = np.array([_hmat(r, dim) for r in basis_rows]) if keep.any() else np.zeros((0, dim, dim), complex)
    return _Dual(basis, targets)


def maxent(cs: ConstraintSystem, dim: int | None = None, *, tol: float = SOLVER_TOL,
           max_iter: int = MAX_ITER, method: str = "newton", strict: bool = False) -> MaxEntResult:
    """Maximum von Neumann entropy subject to ``Tr(A_k rho~) = c_k``.

    Minimizes the dual with a backtracking (Armijo) line search starting from
    ``lam = 0``, i.e. from the maximally mixed state. Convergence is declared
    when the largest constraint residual is at most ``tol``.

    Args:
        method: ``"newton"`` (exact Hessian), ``"bfgs"`` (quasi-Newton) or
            ``"gradient"`` (steepest descent).
        strict: raise :class:`NotConverged` instead of returning a flagged result.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    dim = cs.dim if dim is None else dim
    dual = _reduced_dual(cs, dim)
    r = len(dual.targets)
    lam = np.zeros(r)
    g, grad, hess, rho, p = dual.evaluate(lam, dim, method == "newton")
    history = [g]
    inv_h = np.eye(r)
    step = 1.0
    residual = cs.residual(rho)
    it = 0
    while residual > tol and it < max_iter:
        it += 1
        if method == "newton":
            w, q = np.linalg.eigh(hess)
            floor = 1e-14 * max(1.0, w[-1])
            direction = -(q @ ((q.T @ grad) / np.maximum(w, floor)))
            t = 1.0
        elif method == "bfgs":
            direction = -(inv_h @ grad)
            t = 1.0
        else:
            direction = -grad
            t = min(step * 2.0, 1e6)
        slope = float(grad @ direction)
        if slope >= 0:  # numerical loss of descent; restart from steepest descent
            direction, slope, inv_h = -grad, -float(grad @ grad), np.eye(r)
        accepted = False
        for _ in range(80):
            new_lam = lam + t * direction
            g_new, grad_new, hess_new, rho_new, p_new = dual.evaluate(new_lam, dim, method == "newton")
            armijo = g_new <= g + 1e-4 * t * slope
            # near the optimum the Armijo decrease drops below rounding of g
            flat = (g_new <= g + 1e-12 * max(1.0, abs(g))
                    and np.linalg.norm(grad_new) < np.linalg.norm(grad))
            if armijo or flat:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        if method == "bfgs":
            s_vec, y_vec = new_lam - lam, grad_new - grad
            sy = float(s_vec @ y_vec)
            if sy > 1e-300:
                rho_k = 1.0 / sy
                left = np.eye(r) - rho_k * np.outer(s_vec, y_vec)
                inv_h = left @ inv_h @ left.T + rho_k * np.outer(s_vec, s_vec)
        step = t
        lam, g, grad, hess, rho, p = new_lam, g_new, grad_new, hess_new, rho_new, p_new
        history.append(g)
        residual = cs.residual(rho)
    info = ConvergenceInfo(it, residual, residual <= tol, method, tuple(history))
    result = MaxEntResult(rho, ops.entropy_of_probabilities(p), info, lam)
    if strict and not info.converged:
        raise NotConverged(f"max-entropy solver stopped after {it} iterations "
                           f"with residual {residual:.3e}", result)
    return result


def classicality_report(hs: HistorySet, *, tol: float = SOLVER_TOL, max_iter: int = MAX_ITER,
                        method: str = "newton", picture: str = "heisenberg") -> ClassicalityReport:
    """Both classicality measures plus the entropy of ``rho`` itself.

    Non-convergence of the solver is reported through ``solver.converged``.
    """
    q = formal_probabilities(hs)
    cs = build_constraints(hs, picture)
    result = maxent(cs, hs.dim, tol=tol, max_iter=max_iter, method=method)
    return ClassicalityReport(
        s_hat=ops.entropy_of_probabilities(list(q.values())),
        q_hat=q,
        s_maxent=result.entropy,
        s_rho=ops.entropy(hs.rho),
        solver=result.info,
        constraints_before=cs.n_candidates,
        constraints_after=len(cs),
        rho_tilde=result.rho,
    )
