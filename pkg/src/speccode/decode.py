"""Noise channels, recovery maps and one-step threshold estimates.

Channels are lists of Kraus operators. Fidelities use the entanglement
fidelity ``F_e(sigma, L) = sum_j |tr(sigma L_j)|^2``, which does not depend on
the Kraus representation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericalError
from .operator_core import (
    CodeProjection,
    commutator,
    eigh,
    operator_norm,
    partial_trace,
    psd_sqrt,
)

TP_TOL = 1e-10
PETZ_CUTOFF = 1e-10
EXACT_REMAINDER = 1e-13


@dataclass
class KrausChannel:
    """``rho -> sum_j K_j rho K_j^dag``.

    ``support`` (optional projection) records the subspace on which the
    channel is trace preserving; ``None`` means everywhere.
    """

    kraus: list
    label: str = ""
    support: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.kraus = [np.asarray(K, dtype=complex) for K in self.kraus]
        if not self.kraus:
            raise DomainError("a channel needs at least one Kraus operator")
        shape = self.kraus[0].shape
        if any(K.shape != shape for K in self.kraus):
            raise DomainError("Kraus operators have inconsistent shapes")

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def tp_defect(self) -> float:
        S = sum(K.conj().T @ K for K in self.kraus)
        target = np.eye(self.dim_in) if self.support is None else self.support
        return operator_norm(S - target)

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        return self.tp_defect() <= tol

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(K @ rho @ K.conj().T for K in self.kraus)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """``other o self``: apply ``self`` first."""
        if other.dim_in != self.dim_out:
            raise DomainError("channel dimensions do not compose")
        return KrausChannel([B @ A for B in other.kraus for A in self.kraus],
                            f"{other.label}o{self.label}")


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel([np.eye(dim)], "id")


def _check_state(rho, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError("state must be a square matrix")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise DomainError("state is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise DomainError(f"state has trace {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise DomainError("state is not positive semidefinite")
    return rho


def apply_channel(ch: KrausChannel, rho) -> np.ndarray:
    rho = _check_state(rho)
    if ch.support is None and ch.tp_defect() > 1e-8:
        raise DomainError(f"channel is not trace preserving (defect {ch.tp_defect():.2e})")
    if rho.shape[0] != ch.dim_in:
        raise DomainError("state dimension does not match the channel")
    return ch(rho)


@dataclass(frozen=True)
class NoiseFamily:
    """``E_0 = sqrt(I - theta sum F_i^dag F_i)``, ``E_i = sqrt(theta) F_i``.

    When ``sum F_i^dag F_i = s I`` this is ``E_0 = sqrt(1 - theta s) I``.
    """

    errors: tuple
    label: str = ""

    def __post_init__(self):
        errs = tuple(np.asarray(F, dtype=complex) for F in self.errors)
        if not errs:
            raise DomainError("noise family needs at least one error operator")
        if any(F.shape != errs[0].shape or F.shape[0] != F.shape[1] for F in errs):
            raise DomainError("error operators must be square and share a shape")
        object.__setattr__(self, "errors", errs)

    @property
    def dim(self) -> int:
        return self.errors[0].shape[0]

    @property
    def load(self) -> np.ndarray:
        return sum(F.conj().T @ F for F in self.errors)

    @property
    def theta_max(self) -> float:
        return 1.0 / operator_norm(self.load)

    def channel(self, theta: float) -> KrausChannel:
        if theta < 0 or theta > self.theta_max * (1 + 1e-12):
            raise DomainError(f"theta={theta} outside [0, {self.theta_max:.6g}]")
        E0 = psd_sqrt(np.eye(self.dim) - theta * self.load)
        return KrausChannel([E0] + [np.sqrt(theta) * F for F in self.errors], f"{self.label}({theta:g})")


def petz_recovery(sigma, ch: KrausChannel, cutoff: float = PETZ_CUTOFF) -> KrausChannel:
    """``R_j = sigma^{1/2} E_j^dag E(sigma)^{-1/2}`` with the inverse square root
    taken on the support of ``E(sigma)`` (relative eigenvalue cutoff)."""
    sigma = _check_state(sigma)
    out = ch(sigma)
    norm = operator_norm(out)
    inv = psd_sqrt(out, pinv_cutoff=cutoff * norm)
    evals = np.linalg.eigvalsh(0.5 * (out + out.conj().T))
    keep = evals > cutoff * norm
    s_half = psd_sqrt(sigma)
    R = [s_half @ K.conj().T @ inv for K in ch.kraus]
    # projection onto the support of E(sigma)
    w, U = np.linalg.eigh(0.5 * (out + out.conj().T))
    supp = U[:, w > cutoff * norm]
    rec = KrausChannel(R, f"petz[{ch.label}]", support=supp @ supp.conj().T)
    rec.support_dim = int(keep.sum())
    return rec


def conditional_expectation(X, low: int, high: int) -> np.ndarray:
    """Normalized partial trace over the high factor of ``C^low (x) C^high``."""
    if low * high != np.shape(X)[0]:
        raise DomainError(f"factorization {low}x{high} does not match dimension {np.shape(X)[0]}")
    return partial_trace(X, (low, high), trace_out=1) / high


def expectation_channel(low: int, high: int) -> KrausChannel:
    """``X -> E(X) (x) I/high`` as a channel on the full space, so it composes
    with channels on ``C^low (x) C^high``."""
    kraus = []
    for j in range(high):
        for k in range(high):
            e = np.zeros((high, high))
            e[j, k] = 1.0
            kraus.append(np.kron(np.eye(low), e) / np.sqrt(high))
    return KrausChannel(kraus, "cond-exp")


def poor_decoder_channel(P: CodeProjection) -> KrausChannel:
    """``X -> P X P + tr((I-P) X) P/d`` with Kraus operators ``P`` and
    ``|k><alpha| / sqrt(d)`` for code basis ``k`` and complement basis ``alpha``."""
    if P.rank == 0:
        raise DomainError("poor decoder needs a nonzero code")
    d = P.rank
    Q = P.complement().basis
    kraus = [P.matrix]
    for a in range(Q.shape[1]):
        for k in range(d):
            kraus.append(np.outer(P.basis[:, k], Q[:, a].conj()) / np.sqrt(d))
    return KrausChannel(kraus, "poor")


def poor_decoder(P: CodeProjection, X) -> np.ndarray:
    X = np.asarray(X)
    Pm = P.matrix
    leak = np.trace(X - Pm @ X).real if np.isrealobj(X) else np.trace(X - Pm @ X)
    return Pm @ X @ Pm + leak * Pm / P.rank


def entanglement_fidelity(sigma, ch: KrausChannel) -> float:
    if ch.dim_in != np.shape(sigma)[0] or ch.dim_out != ch.dim_in:
        raise DomainError("entanglement fidelity needs a channel on the state's space")
    return float(sum(abs(np.trace(sigma @ K)) ** 2 for K in ch.kraus))


def leakage_probability(P: CodeProjection, ch: KrausChannel, sigma) -> float:
    Pm = P.matrix
    if np.linalg.norm(Pm @ sigma @ Pm - sigma) > 1e-10:
        raise DomainError("sigma must be supported in the code")
    out = ch(sigma)
    return float(np.real(np.trace(out) - np.trace(Pm @ out)))


def code_state(P: CodeProjection) -> np.ndarray:
    return P.matrix / P.rank


def variance(sigma, X) -> float:
    """``tr(sigma X^dag X) - |tr(sigma X)|^2``."""
    return float(np.real(np.trace(sigma @ X.conj().T @ X)) - abs(np.trace(sigma @ X)) ** 2)


DECODERS = ("petz", "poor", "petz_expectation")


def decoded_channel(sigma, P: CodeProjection, noise: NoiseFamily, theta: float, decoder: str = "petz",
                    factorization: tuple[int, int] | None = None) -> KrausChannel:
    E = noise.channel(theta)
    if decoder == "poor":
        return E.then(poor_decoder_channel(P))
    if decoder == "petz":
        return E.then(petz_recovery(sigma, E))
    if decoder == "petz_expectation":
        if factorization is None:
            raise DomainError("decoder 'petz_expectation' needs a tensor factorization; use 'petz' or 'poor'")
        low, high = factorization
        return E.then(petz_recovery(sigma, E)).then(expectation_channel(low, high))
    raise DomainError(f"unknown decoder {decoder!r}; choose from {DECODERS}")


def residual_error_T(sigma, P: CodeProjection, noise: NoiseFamily, theta: float, decoder: str = "petz",
                     factorization: tuple[int, int] | None = None) -> float:
    """``T(theta) = 1 - F_e(sigma, decoder o E_theta)``.

    With the expectation decoder the output is re-embedded as
    ``E(X) (x) I/high``; the fidelity is then taken on the full space.
    """
    N = decoded_channel(sigma, P, noise, theta, decoder, factorization)
    return 1.0 - entanglement_fidelity(sigma, N)


def expansion_first_order(sigma, P: CodeProjection, noise: NoiseFamily, theta: float) -> float:
    """``theta sum_i Var(P F_i P) + (1 - 1/d^2) P_leak(theta)``."""
    Pm = P.matrix
    var = sum(variance(sigma, Pm @ F @ Pm) for F in noise.errors)
    leak = leakage_probability(P, noise.channel(theta), sigma)
    return theta * var + (1 - 1 / P.rank ** 2) * leak


@dataclass(frozen=True)
class ExpansionReport:
    thetas: np.ndarray
    T: np.ndarray
    expansion: np.ndarray
    remainder: np.ndarray
    slope: float
    exact: bool

    @property
    def certified(self) -> bool:
        return self.exact or self.slope >= 1.9


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def verify_poor_decoder_expansion(P: CodeProjection, noise: NoiseFamily, thetas: Sequence[float]) -> ExpansionReport:
    """Remainder of the first-order poor-decoder expansion and its log-log slope.

    A remainder that vanishes to rounding on the whole grid (below
    ``EXACT_REMAINDER`` relative to ``T``) is reported as exact.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size < 2 or np.any(thetas <= 0) or np.any(thetas > 1e-2):
        raise DomainError("theta grid must have >= 2 points in (0, 1e-2]")
    sigma = code_state(P)
    T = np.array([residual_error_T(sigma, P, noise, t, "poor") for t in thetas])
    X = np.array([expansion_first_order(sigma, P, noise, t) for t in thetas])
    rem = np.abs(T - X)
    tiny = rem <= EXACT_REMAINDER * np.maximum(np.abs(T), 1e-300) + 1e-16
    if np.all(tiny):
        return ExpansionReport(thetas, T, X, rem, float("inf"), True)
    ok = ~tiny
    if ok.sum() < 2:
        raise NumericalError("remainder is resolved at fewer than two grid points")
    return ExpansionReport(thetas, T, X, rem, loglog_slope(thetas[ok], rem[ok]), False)


@dataclass(frozen=True)
class ThresholdReport:
    thetas: np.ndarray
    T: np.ndarray
    k: float
    gamma: float
    theta_th: float
    residual: float
    clipped: bool
    iterates: np.ndarray
    converged: bool
    monotone: bool

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "gamma": self.gamma,
            "theta_th": self.theta_th,
            "residual": self.residual,
            "clipped": self.clipped,
            "theta0": float(self.iterates[0]),
            "iterations": int(self.iterates.size - 1),
            "theta_final": float(self.iterates[-1]),
            "converged": self.converged,
            "monotone": self.monotone,
        }


def _fit_k_gamma(thetas, T) -> tuple[float, float, bool]:
    A = np.column_stack([thetas, thetas ** 2])
    (k, g), *_ = np.linalg.lstsq(A, T, rcond=None)
    clipped = False
    if k < 0 and g < 0:
        return 0.0, 0.0, True
    if k < 0:
        clipped = True
        k = 0.0
        g = float(np.dot(thetas ** 2, T) / np.dot(thetas ** 2, thetas ** 2))
    elif g < 0:
        clipped = True
        g = 0.0
        k = float(np.dot(thetas, T) / np.dot(thetas, thetas))
    return float(max(k, 0.0)), float(max(g, 0.0)), clipped


def threshold_estimate(thetas, T, theta0: float | None = None, max_iter: int = 10_000) -> ThresholdReport:
    """Fit ``T(theta) = k theta + gamma theta^2`` with ``k, gamma >= 0`` and
    iterate the fitted map from ``theta0``."""
    thetas = np.asarray(thetas, dtype=float)
    T = np.asarray(T, dtype=float)
    if thetas.shape != T.shape or thetas.ndim != 1:
        raise DomainError("theta grid and samples must be 1-d arrays of equal length")
    if thetas.size < 4:
        raise DomainError("threshold fit needs at least 4 grid points")
    if np.any(thetas <= 0) or np.any(thetas > 0.1):
        raise DomainError("threshold fit needs all theta in (0, 0.1]")
    k, g, clipped = _fit_k_gamma(thetas, T)
    if clipped:
        warnings.warn("negative fit coefficient clipped to 0", RuntimeWarning, stacklevel=2)
    resid = float(np.linalg.norm(k * thetas + g * thetas ** 2 - T))
    if k >= 1:
        th = 0.0
    elif g == 0:
        th = float("inf")
    else:
        th = (1 - k) / g
    if theta0 is None:
        theta0 = 0.5 * th if np.isfinite(th) and th > 0 else float(thetas.max())
    its = [float(theta0)]
    for _ in range(max_iter):
        t = its[-1]
        nxt = k * t + g * t * t
        its.append(nxt)
        if nxt > 1.0:
            break  # escaped the physical range; diverging
        if nxt < 1e-300 or abs(nxt - t) <= 1e-15 * max(t, 1e-300):
            break
    its = np.array(its)
    monotone = bool(np.all(np.diff(its) < 0) or (its.size > 1 and its[-1] < 1e-300 and np.all(np.diff(its) <= 0)))
    converged = bool(its[-1] <= 1e-12 * max(1.0, its[0]))
    return ThresholdReport(thetas, T, k, g, th, resid, clipped, its, converged, monotone)


@dataclass(frozen=True)
class GapBound:
    leak_norm: float
    comm_P: float
    comm_D: float
    gap: float
    C_emp: float

    @property
    def chain_holds(self) -> bool:
        return self.leak_norm <= self.comm_P + 1e-12

    def as_dict(self) -> dict:
        return {"leak_norm": self.leak_norm, "comm_P": self.comm_P, "comm_D": self.comm_D,
                "gap": self.gap, "C_emp": self.C_emp, "chain_holds": self.chain_holds}


def gap_commutator_bounds(P: CodeProjection | None, D: np.ndarray, errors: Sequence[np.ndarray]) -> list[GapBound]:
    """Per error: ``||(I-P)EP||``, ``||[P,E]||``, ``||[D,E]||``, the gap and
    ``C_emp = ||[P,E]|| gap / ||[D,E]||`` (0 when ``[D,E] = 0``)."""
    rep, U = eigh(D)
    if not np.isfinite(rep.gap) or rep.gap <= 0:
        raise DomainError("D has no spectral gap above its kernel")
    ker = U[:, np.abs(rep.raw) <= rep.zero_tol]
    if ker.shape[1] == 0:
        raise DomainError("D has trivial kernel")
    Pk = CodeProjection(ker)
    if P is not None and (P.rank != Pk.rank or np.linalg.norm(P.matrix - Pk.matrix) > 1e-8):
        raise DomainError("P is not the kernel projection of D")
    Pm = Pk.matrix
    Q = np.eye(Pm.shape[0]) - Pm
    out = []
    for E in errors:
        E = np.asarray(E)
        a = operator_norm(Q @ E @ Pm)
        b = operator_norm(commutator(Pm, E))
        c = operator_norm(commutator(D, E))
        C = b * rep.gap / c if c > 0 else 0.0
        out.append(GapBound(a, b, c, rep.gap, C))
    return out
