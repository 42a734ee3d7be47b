"""Inner fluctuations of finite Dirac operators and code-preserving
perturbations ``D + lambda V`` that widen the gap above a code."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decode import NoiseFamily, code_state, gap_commutator_bounds, leakage_probability
from .errors import DomainError, NumericalError
from .operator_core import (
    CodeProjection,
    SpectrumReport,
    check_hermitian,
    commutator,
    eigh,
    kernel_projection,
    operator_norm,
)


@dataclass(frozen=True)
class OneForm:
    """``A = sum_j a_j [D, b_j]`` kept together with its terms."""

    D: np.ndarray = field(repr=False)
    pairs: tuple = field(repr=False)

    @property
    def matrix(self) -> np.ndarray:
        A = np.zeros(self.D.shape, dtype=complex)
        for a, b in self.pairs:
            A += a @ commutator(self.D, b)
        return A

    def adjoint(self) -> "OneForm":
        """Uses ``(a[D,b])^* = b^*[D,a^*] - [D, b^* a^*]``."""
        I = np.eye(self.D.shape[0])
        pairs = []
        for a, b in self.pairs:
            bs, as_ = b.conj().T, a.conj().T
            pairs += [(bs, as_), (-I, bs @ as_)]
        return OneForm(self.D, tuple(pairs))

    def selfadjoint_part(self) -> "OneForm":
        """``(A + A^*)/2`` as a one-form."""
        half = [(0.5 * a, b) for a, b in self.pairs + self.adjoint().pairs]
        return OneForm(self.D, tuple(half))

    def is_selfadjoint(self, tol: float = 1e-10) -> bool:
        A = self.matrix
        return float(np.max(np.abs(A - A.conj().T), initial=0.0)) <= tol * max(1.0, operator_norm(A))


def one_form(D, pairs: Sequence) -> OneForm:
    D = np.asarray(D)
    ps = []
    for a, b in pairs:
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        if a.shape != D.shape or b.shape != D.shape:
            raise DomainError("one-form terms must match the dimension of D")
        ps.append((a, b))
    return OneForm(D, tuple(ps))


@dataclass(frozen=True)
class RealStructure:
    """Antiunitary ``J = W K`` (``K`` = complex conjugation), so
    ``J X J^-1 = W conj(X) W^dag`` and ``J^2 = W conj(W)``."""

    W: np.ndarray = field(repr=False)
    eps: int = 1
    eps_prime: int = 1

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if np.max(np.abs(W @ W.conj().T - np.eye(W.shape[0]))) > 1e-10:
            raise DomainError("J must be antiunitary (W unitary)")
        if np.max(np.abs(W @ W.conj() - self.eps_prime * np.eye(W.shape[0]))) > 1e-10:
            raise DomainError(f"J^2 != {self.eps_prime} I")
        object.__setattr__(self, "W", W)

    @classmethod
    def conjugation(cls, dim: int) -> "RealStructure":
        return cls(np.eye(dim))

    def conj_op(self, X) -> np.ndarray:
        return self.W @ np.conj(X) @ self.W.conj().T

    def commutes_with(self, D, tol: float = 1e-10) -> bool:
        return float(np.max(np.abs(self.conj_op(D) - self.eps * D))) <= tol * max(1.0, operator_norm(D))


def inner_fluctuation(D, A: OneForm | np.ndarray, J: RealStructure | None = None) -> np.ndarray:
    """``D_A = D + A + J A J^-1`` (just ``D + A`` without ``J``)."""
    D = check_hermitian(np.asarray(D))
    Am = A.matrix if isinstance(A, OneForm) else np.asarray(A)
    if float(np.max(np.abs(Am - Am.conj().T), initial=0.0)) > 1e-10 * max(1.0, operator_norm(Am)):
        raise DomainError("one-form is not self-adjoint")
    out = D + Am
    if J is not None:
        out = out + J.conj_op(Am)
    return out


def _check_unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > 1e-10:
        raise DomainError("gauge element must be unitary")
    return u


def gauge_transform(A: OneForm, u, D=None) -> OneForm:
    """``A^u = u[D, u^-1] + u A u^-1``, rewritten as a one-form in ``D``."""
    D = A.D if D is None else np.asarray(D)
    u = _check_unitary(u)
    ui = u.conj().T
    pairs = [(u, ui)]
    for a, b in A.pairs:
        # u a [D,b] u^-1 = (u a)[D, b u^-1] - (u a b)[D, u^-1]
        pairs.append((u @ a, b @ ui))
        pairs.append((-(u @ a @ b), ui))
    return OneForm(D, tuple(pairs))


def gauge_unitary(u, J: RealStructure | None) -> np.ndarray:
    """``U = u J u J^-1`` (``U = u`` without ``J``)."""
    u = _check_unitary(u)
    return u if J is None else u @ J.conj_op(u)


@dataclass(frozen=True)
class MatrixAlgebraTriple:
    """``M_n`` acting on itself (Hilbert-Schmidt, row-major vec) by left
    multiplication, ``D(xi) = M xi + xi M`` and ``J(xi) = xi^dag``.

    The order-zero and first-order conditions hold exactly, so inner
    fluctuations are gauge covariant.
    """

    n: int
    M: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n * self.n

    @property
    def dirac(self) -> np.ndarray:
        I = np.eye(self.n)
        return np.kron(self.M, I) + np.kron(I, self.M.T)

    @property
    def J(self) -> RealStructure:
        n = self.n
        S = np.zeros((n * n, n * n))
        for i in range(n):
            for j in range(n):
                S[j * n + i, i * n + j] = 1.0
        return RealStructure(S)

    def rep(self, a) -> np.ndarray:
        return np.kron(np.asarray(a), np.eye(self.n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "MatrixAlgebraTriple":
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return cls(n, 0.5 * (X + X.conj().T))


# --- code-preserving perturbations ------------------------------------------------


@dataclass(frozen=True)
class PerturbationSpec:
    V: np.ndarray = field(repr=False)
    P: CodeProjection = field(repr=False)
    c: float = 1.0

    def __post_init__(self):
        V = check_hermitian(np.asarray(self.V))
        if V.shape != (self.P.dim, self.P.dim):
            raise DomainError("V and P act on different dimensions")
        if self.c <= 0:
            raise DomainError("lower bound c must be positive")
        Pm = self.P.matrix
        if operator_norm(Pm @ V - V @ Pm) > 1e-10:
            raise DomainError("V does not commute with P")
        Q = self.P.complement().basis
        if Q.shape[1]:
            low = np.linalg.eigvalsh(Q.conj().T @ V @ Q).min()
            if low < self.c - 1e-10:
                raise DomainError(f"V is only >= {low:.6g} off the code, below c = {self.c}")

    @classmethod
    def complement(cls, P: CodeProjection) -> "PerturbationSpec":
        return cls(np.eye(P.dim) - P.matrix, P, 1.0)


def perturb_code_preserving(D, spec: PerturbationSpec, lam: float) -> tuple[np.ndarray, SpectrumReport]:
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    D = check_hermitian(np.asarray(D))
    rep0, _ = eigh(D)
    K = kernel_projection(D)
    if K.rank != spec.P.rank or operator_norm(K.matrix - spec.P.matrix) > 1e-9:
        raise DomainError("P is not the kernel projection of D")
    Dl = D + lam * spec.V
    rep, _ = eigh(Dl)
    Kl = kernel_projection(Dl)
    if Kl.rank != K.rank or operator_norm(Kl.matrix - K.matrix) > 1e-9:
        raise NumericalError("perturbation moved the kernel")
    if rep.gap < rep0.gap + lam * spec.c - 1e-9 * max(1.0, rep.gap):
        raise NumericalError(f"gap {rep.gap:.12g} below the guaranteed {rep0.gap + lam * spec.c:.12g}")
    return Dl, rep


def k_lambda(eps: Sequence[float], C: float, Delta: float, c: float, lam: float) -> float:
    """``sum_i eps_i^2 (1 + C^2 / (Delta + lam c)^2)``."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0) or C <= 0 or Delta <= 0 or c <= 0 or lam < 0:
        raise DomainError("k(lambda) needs eps >= 0, C, Delta, c > 0 and lambda >= 0")
    return float(np.sum(eps ** 2) * (1.0 + C ** 2 / (Delta + lam * c) ** 2))


SWEEP_COLUMNS = ("lambda", "gap", "comm_norm", "bound", "bound_sq_times_theta", "leak_literal")


@dataclass(frozen=True)
class LeakageSweep:
    rows: list
    C_emp: float
    exponent: float | None
    mode: str

    def summary(self) -> dict:
        return {"C_emp": self.C_emp, "fitted_exponent": self.exponent, "mode": self.mode,
                "n_rows": len(self.rows)}


def leakage_gap_sweep(D, P: CodeProjection, E, theta: float, lambdas: Sequence[float],
                      mode: str = "normalized") -> LeakageSweep:
    """Leakage bound ``C_emp ||[D_lam, E]|| / gap(D_lam)`` along ``D + lam (I - P)``.

    ``normalized`` holds ``||[D, E]||`` at its unperturbed value (the error is
    rescaled at each lambda); ``raw`` uses ``||[D_lam, E]||``. ``C_emp`` comes
    from the unperturbed operator. ``leak_literal`` is the leakage of the
    fixed error channel, which cannot depend on lambda since ``P`` is fixed.
    """
    if mode not in ("normalized", "raw"):
        raise DomainError(f"unknown sweep mode {mode!r}")
    D = check_hermitian(np.asarray(D))
    E = np.asarray(E, dtype=complex)
    spec = PerturbationSpec.complement(P)
    gb = gap_commutator_bounds(P, D, [E])[0]
    eps0 = gb.comm_D
    sigma = code_state(P)
    noise = NoiseFamily((E,))
    if theta < 0 or theta > noise.theta_max:
        raise DomainError(f"theta must lie in [0, {noise.theta_max:.6g}]")
    leak = leakage_probability(P, noise.channel(theta), sigma)
    rows = []
    for lam in lambdas:
        Dl, rep = perturb_code_preserving(D, spec, float(lam))
        comm = eps0 if mode == "normalized" else operator_norm(commutator(Dl, E))
        bound = gb.C_emp * comm / rep.gap
        rows.append({
            "lambda": float(lam),
            "gap": float(rep.gap),
            "comm_norm": float(comm),
            "bound": float(bound),
            "bound_sq_times_theta": float(theta * bound ** 2),
            "leak_literal": float(leak),
        })
    gaps = np.array([r["gap"] for r in rows])
    bounds = np.array([r["bound"] for r in rows])
    exponent = None
    if len(rows) >= 2 and np.all(bounds > 0) and np.ptp(gaps) > 0:
        exponent = float(np.polyfit(np.log(gaps), np.log(bounds), 1)[0])
    return LeakageSweep(rows, float(gb.C_emp), exponent, mode)
