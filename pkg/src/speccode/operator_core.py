"""Dense complex linear algebra used by every other module.

Everything here is a pure function of its inputs. Matrices are plain
``numpy.ndarray`` objects; the only wrapper types are :class:`SpectrumReport`
and :class:`CodeProjection`, which carry derived data (multiplicities, an
orthonormal basis of the code space) that callers otherwise recompute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, NonHermitianError

HERMITIAN_RTOL = 1e-12
ZERO_RTOL = 1e-9
SCALAR_RTOL = 1e-9


def operator_norm(X) -> float:
    """Largest singular value."""
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2))


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def check_hermitian(H, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {H.shape}")
    asym = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if asym > rtol * scale:
        raise NonHermitianError(asym / scale, rtol)
    return H


def zero_threshold(norm: float) -> float:
    return ZERO_RTOL * max(1.0, norm)


@dataclass(frozen=True)
class SpectrumReport:
    """Clustered spectrum of a Hermitian operator.

    ``eigenvalues`` holds the distinct eigenvalues (ascending) and
    ``multiplicities`` their degeneracies; ``raw`` keeps every eigenvalue.
    ``gap`` is the smallest modulus among eigenvalues that are not zero in the
    sense of :func:`zero_threshold` (``inf`` when there are none).
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    gap: float
    raw: np.ndarray = field(repr=False)
    zero_tol: float = 0.0

    @property
    def dim(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def kernel_dim(self) -> int:
        return int(np.sum(np.abs(self.raw) <= self.zero_tol))

    def as_dict(self) -> dict:
        return {
            "values": [float(v) for v in self.eigenvalues],
            "multiplicities": [int(m) for m in self.multiplicities],
            "gap": float(self.gap),
        }


def _cluster(evals: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    if evals.size == 0:
        return evals, np.zeros(0, dtype=int)
    values, counts = [], []
    start = 0
    for i in range(1, evals.size + 1):
        if i == evals.size or evals[i] - evals[i - 1] > tol:
            values.append(float(np.mean(evals[start:i])))
            counts.append(i - start)
            start = i
    return np.array(values), np.array(counts, dtype=int)


def spectrum_report(evals: np.ndarray, norm: float | None = None) -> SpectrumReport:
    evals = np.sort(np.asarray(evals, dtype=float))
    if norm is None:
        norm = float(np.max(np.abs(evals))) if evals.size else 0.0
    ztol = zero_threshold(norm)
    values, mult = _cluster(evals, ztol)
    nonzero = np.abs(evals)[np.abs(evals) > ztol]
    gap = float(nonzero.min()) if nonzero.size else float("inf")
    return SpectrumReport(values, mult, gap, evals, ztol)


def eigh(H, rtol: float = HERMITIAN_RTOL) -> tuple[SpectrumReport, np.ndarray]:
    """Hermitian eigendecomposition returning the clustered spectrum and a
    unitary whose columns are eigenvectors (ascending eigenvalue order)."""
    H = check_hermitian(H, rtol)
    # symmetrize so LAPACK sees exactly Hermitian input
    Hs = 0.5 * (H + H.conj().T)
    evals, U = np.linalg.eigh(Hs)
    norm = float(np.max(np.abs(evals))) if evals.size else 0.0
    return spectrum_report(evals, norm), U


@dataclass(frozen=True)
class CodeProjection:
    """Orthogonal projection stored through an orthonormal basis of its range.

    ``basis`` has shape ``(dim, rank)`` with orthonormal columns, so
    ``P = basis @ basis^dag``. Compressions ``P X P`` are evaluated through the
    ``rank x rank`` block ``basis^dag X basis``.
    """

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def rank(self) -> int:
        return int(self.basis.shape[1])

    @property
    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def restrict(self, X) -> np.ndarray:
        return self.basis.conj().T @ (X @ self.basis)

    def complement(self) -> "CodeProjection":
        if self.rank == 0:
            return CodeProjection(np.eye(self.dim, dtype=complex))
        q, _ = np.linalg.qr(self.basis, mode="complete")
        return CodeProjection(q[:, self.rank:])

    @classmethod
    def from_matrix(cls, P, tol: float = 1e-10) -> "CodeProjection":
        P = np.asarray(P, dtype=complex)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DomainError(f"projection must be square, got {P.shape}")
        if np.max(np.abs(P - P.conj().T), initial=0.0) > tol:
            raise DomainError("projection is not Hermitian")
        if np.max(np.abs(P @ P - P), initial=0.0) > tol:
            raise DomainError("projection is not idempotent")
        evals, U = np.linalg.eigh(0.5 * (P + P.conj().T))
        return cls(U[:, evals > 0.5])

    @classmethod
    def from_vectors(cls, vectors, tol: float = 1e-10) -> "CodeProjection":
        """Projection onto the span of the columns of ``vectors``."""
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[1] == 0:
            return cls(np.zeros((V.shape[0], 0), dtype=complex))
        u, s, _ = np.linalg.svd(V, full_matrices=False)
        keep = s > tol * max(1.0, s[0])
        return cls(u[:, keep])

    def validate(self) -> None:
        G = self.basis.conj().T @ self.basis
        if np.max(np.abs(G - np.eye(self.rank)), initial=0.0) > 1e-10:
            raise DomainError("code basis is not orthonormal")


def spectral_projection(H, lo: float, hi: float, tol: float | None = None) -> CodeProjection:
    """Projection onto eigenvectors of ``H`` with eigenvalue in ``[lo, hi]``.

    Endpoints are widened by the zero threshold so that ``lo = hi = 0`` picks
    out the numerical kernel.
    """
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DomainError("interval endpoints must be finite")
    if lo > hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    rep, U = eigh(H)
    eps = rep.zero_tol if tol is None else tol
    mask = (rep.raw >= lo - eps) & (rep.raw <= hi + eps)
    return CodeProjection(U[:, mask])


def kernel_projection(H) -> CodeProjection:
    return spectral_projection(H, 0.0, 0.0)


def is_scalar_on_code(X, P: CodeProjection, tol: float = SCALAR_RTOL) -> tuple[bool, complex]:
    """Test whether ``P X P`` is a multiple of ``P``.

    Returns ``(flag, lam)`` with ``lam = tr(P X P) / rank(P)``; the flag is set
    when ``||P X P - lam P|| <= tol * max(1, ||X||)``.
    """
    if P.rank == 0:
        raise DomainError("scalar test needs a code of rank >= 1")
    B = P.restrict(X)
    lam = complex(np.trace(B) / P.rank)
    defect = operator_norm(B - lam * np.eye(P.rank))
    return bool(defect <= tol * max(1.0, operator_norm(X))), lam


def partial_trace(X, dims: Sequence[int], trace_out: int = 1) -> np.ndarray:
    """Partial trace of an operator on ``C^dims[0] (x) C^dims[1]``.

    ``trace_out`` selects the factor that is removed (0 or 1).
    """
    X = np.asarray(X)
    if len(dims) != 2:
        raise DomainError("partial_trace supports exactly two tensor factors")
    da, db = (int(d) for d in dims)
    if X.shape != (da * db, da * db):
        raise DomainError(
            f"operator of shape {X.shape} does not match factor dims {da}x{db}"
        )
    T = X.reshape(da, db, da, db)
    if trace_out == 1:
        return np.einsum("ajbj->ab", T)
    if trace_out == 0:
        return np.einsum("iaib->ab", T)
    raise DomainError(f"trace_out must be 0 or 1, got {trace_out}")


def psd_sqrt(A, pinv_cutoff: float | None = None) -> np.ndarray:
    """Square root of a positive semidefinite matrix; with ``pinv_cutoff`` set,
    return the pseudo-inverse square root instead (eigenvalues below the cutoff
    are annihilated)."""
    evals, U = np.linalg.eigh(0.5 * (A + A.conj().T))
    evals = np.clip(evals, 0.0, None)
    if pinv_cutoff is None:
        d = np.sqrt(evals)
    else:
        d = np.zeros_like(evals)
        keep = evals > pinv_cutoff
        d[keep] = 1.0 / np.sqrt(evals[keep])
    return (U * d) @ U.conj().T


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (A + A.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(A)
    return q * (np.diag(r) / np.abs(np.diag(r)))
