"""Berezin-Toeplitz quantization of the round 2-sphere.

At flux ``p`` the quantum space is spanned by the ``N = p + 1`` holomorphic
sections ``psi_k ~ sin^k(theta/2) cos^(p-k)(theta/2) e^{i k phi}``, normalized
against the area measure (total area ``4 pi``). Toeplitz matrices
``T(f)_jk = <psi_j | f psi_k>`` are evaluated by Gauss-Legendre quadrature in
``u = cos(theta)`` times a uniform grid in ``phi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .operator_core import operator_norm

GRAM_TOL = 1e-8
GRAM_REJECT = 1e-6
FD_STEP = 1e-5
SPHERE_AREA = 4 * np.pi


# --- functions on the sphere ----------------------------------------------------


def _cartesian(theta, phi):
    s = np.sin(theta)
    return s * np.cos(phi), s * np.sin(phi), np.cos(theta)


def _frame(theta, phi):
    """Unit normal and the (e_theta, e_phi) tangent frame, each shaped (3, ...)."""
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    n = np.stack([st * cp, st * sp, ct])
    e_t = np.stack([ct * cp, ct * sp, -st])
    e_p = np.stack([-sp, cp, np.zeros_like(phi + theta)])
    return n, e_t, e_p


@dataclass(frozen=True)
class SphereFunction:
    """Either a polynomial in the ambient coordinates (``terms`` maps exponent
    triples ``(a, b, c)`` of ``x^a y^b z^c`` to coefficients, gradients exact)
    or a callable of ``(theta, phi)`` (gradients by central differences)."""

    terms: tuple = ()
    func: Callable | None = field(default=None, compare=False)
    name: str = ""

    @classmethod
    def polynomial(cls, terms: dict, name: str = "") -> "SphereFunction":
        return cls(tuple(sorted((tuple(int(e) for e in k), complex(v)) for k, v in terms.items())), None, name)

    @classmethod
    def coordinate(cls, axis: str) -> "SphereFunction":
        e = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[axis]
        return cls.polynomial({e: 1.0}, axis)

    @classmethod
    def constant(cls, c: float = 1.0) -> "SphereFunction":
        return cls.polynomial({(0, 0, 0): c}, f"{c:g}")

    @classmethod
    def from_callable(cls, fn: Callable, name: str = "") -> "SphereFunction":
        return cls((), fn, name)

    @classmethod
    def bump(cls, theta0: float, width: float) -> "SphereFunction":
        """``exp(1 - 1/(1 - t^2))`` for ``t = (theta - theta0)/width``, |t| < 1; zero elsewhere."""

        def fn(theta, phi):
            t = (np.asarray(theta) - theta0) / width
            out = np.zeros(np.broadcast(t, phi).shape)
            t = np.broadcast_to(t, out.shape)
            m = np.abs(t) < 1
            out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
            return out

        return cls.from_callable(fn, f"bump({theta0:.4g},{width:.4g})")

    @property
    def is_polynomial(self) -> bool:
        return self.func is None

    def __call__(self, theta, phi) -> np.ndarray:
        if not self.is_polynomial:
            return np.asarray(self.func(theta, phi))
        x, y, z = _cartesian(np.asarray(theta, float), np.asarray(phi, float))
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for (a, b, c), v in self.terms:
            out = out + v * x ** a * y ** b * z ** c
        return out.real if all(v.imag == 0 for _, v in self.terms) else out

    def gradient(self, theta, phi) -> np.ndarray:
        """Tangential gradient as an ambient vector field, shape (3, ...)."""
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        n, e_t, e_p = _frame(theta, phi)
        if self.is_polynomial:
            x, y, z = _cartesian(theta, phi)
            G = np.zeros((3,) + theta.shape, dtype=complex)
            for (a, b, c), v in self.terms:
                if a:
                    G[0] += v * a * x ** (a - 1) * y ** b * z ** c
                if b:
                    G[1] += v * b * x ** a * y ** (b - 1) * z ** c
                if c:
                    G[2] += v * c * x ** a * y ** b * z ** (c - 1)
            G = G - np.sum(G * n, axis=0) * n
            return G.real if all(v.imag == 0 for _, v in self.terms) else G
        h = FD_STEP
        dt = (self(theta + h, phi) - self(theta - h, phi)) / (2 * h)
        dp = (self(theta, phi + h) - self(theta, phi - h)) / (2 * h)
        return dt * e_t + dp / np.sin(theta) * e_p


def poisson_bracket(f: SphereFunction, g: SphereFunction, theta, phi) -> np.ndarray:
    """``{f, g} = n . (grad f x grad g)``, so that ``{x, y} = z``."""
    n, _, _ = _frame(*np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float)))
    return np.sum(n * np.cross(f.gradient(theta, phi), g.gradient(theta, phi), axis=0), axis=0)


def c1_coefficient(f: SphereFunction, g: SphereFunction, theta, phi) -> np.ndarray:
    """First-order coefficient of the Toeplitz product:
    ``-(grad f . grad g + i {f, g}) / 2``."""
    dot = np.sum(f.gradient(theta, phi) * g.gradient(theta, phi), axis=0)
    return -0.5 * (dot + 1j * poisson_bracket(f, g, theta, phi))


def sup_norm(f: SphereFunction, n_theta: int = 401, n_phi: int = 256) -> float:
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    return float(np.max(np.abs(f(T, P))))


def sphere_integral(f: SphereFunction, q: int = 64, n_phi: int = 128) -> complex:
    u, wu = np.polynomial.legendre.leggauss(q)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    U, P = np.meshgrid(u, phi, indexing="ij")
    vals = f(np.arccos(U), P)
    return complex(np.sum(wu[:, None] * vals) * 2 * np.pi / n_phi)


# --- the quantizer --------------------------------------------------------------


def basis_log_norms(p: int) -> np.ndarray:
    """``log c_k`` with ``c_k^2 = (p+1)/(4 pi) binom(p, k)``."""
    k = np.arange(p + 1)
    return 0.5 * (np.log(p + 1) - np.log(4 * np.pi) + gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1))


@dataclass
class ToeplitzQuantizer:
    p: int
    q: int | None = None
    hbar: float | None = None

    def __post_init__(self):
        if self.p < 1:
            raise DomainError("flux p must be >= 1")
        if self.q is None:
            self.q = self.p + 8
        if self.q < self.p + 4:
            raise DomainError(f"quadrature order q={self.q} must be >= p + 4 = {self.p + 4}")
        if self.hbar is None:
            self.hbar = 1.0 / self.p
        if self.hbar <= 0:
            raise DomainError("hbar must be positive")
        p = self.p
        u, wu = np.polynomial.legendre.leggauss(self.q)
        n_phi = 2 * p + 8
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        U, PHI = np.meshgrid(u, phi, indexing="ij")
        self.theta = np.arccos(U)
        self.phi = PHI
        self.weights = np.outer(wu, np.full(n_phi, 2 * np.pi / n_phi))
        k = np.arange(p + 1)[:, None, None]
        amp = np.exp(basis_log_norms(p)[:, None, None]
                     + 0.5 * k * np.log((1 - U) / 2) + 0.5 * (p - k) * np.log((1 + U) / 2))
        self.psi = (amp * np.exp(1j * k * PHI)).reshape(p + 1, -1)
        defect = self.gram_defect
        if defect > GRAM_REJECT:
            raise DomainError(f"Gram defect {defect:.2e} at q={self.q}: quadrature too coarse")

    @property
    def N(self) -> int:
        return self.p + 1

    def matrix_from_samples(self, vals: np.ndarray) -> np.ndarray:
        w = (self.weights * vals).reshape(-1)
        return (self.psi.conj() * w) @ self.psi.T

    def toeplitz(self, f: SphereFunction) -> np.ndarray:
        return self.matrix_from_samples(f(self.theta, self.phi))

    @cached_property
    def gram_defect(self) -> float:
        G = self.matrix_from_samples(np.ones_like(self.theta))
        return float(np.max(np.abs(G - np.eye(self.N))))


def build_quantizer(p: int, q: int | None = None, hbar: float | None = None) -> ToeplitzQuantizer:
    return ToeplitzQuantizer(p, q, hbar)


def toeplitz_matrix(Q: ToeplitzQuantizer, f: SphereFunction) -> np.ndarray:
    return Q.toeplitz(f)


# --- calibration and axioms ------------------------------------------------------


def commutator_scale(Q: ToeplitzQuantizer) -> float:
    """Least-squares ``s`` with ``(i p / s)[T(x), T(y)] ~ T({x, y})`` at this ``p``."""
    X, Y = Q.toeplitz(SphereFunction.coordinate("x")), Q.toeplitz(SphereFunction.coordinate("y"))
    Z = Q.toeplitz(SphereFunction.coordinate("z"))
    C = 1j * Q.p * (X @ Y - Y @ X)
    alpha = np.real(np.vdot(C, Z)) / np.real(np.vdot(C, C))
    return float(1.0 / alpha)


def calibrate_hbar_scale(p_list: Sequence[int], q_extra: int = 8) -> float:
    """Scale ``s`` of ``hbar_p = s / p``: per-p least-squares scales extrapolated
    to ``p -> inf`` with a quadratic in ``1/p``."""
    ps = np.asarray(sorted(set(int(p) for p in p_list)), dtype=float)
    if ps.size < 3:
        raise DomainError("calibration needs at least 3 distinct p values")
    s = np.array([commutator_scale(ToeplitzQuantizer(int(p), int(p) + q_extra)) for p in ps])
    A = np.column_stack([np.ones_like(ps), 1 / ps, 1 / ps ** 2])
    coef, *_ = np.linalg.lstsq(A, s, rcond=None)
    return float(coef[0])


def trace_law_constant(Q: ToeplitzQuantizer) -> float:
    """``(2 pi hbar) Tr T(1) / area``; tends to 1 for a calibrated ``hbar``."""
    return float(2 * np.pi * Q.hbar * np.real(np.trace(Q.toeplitz(SphereFunction.constant(1.0)))) / SPHERE_AREA)


def _product(f: SphereFunction, g: SphereFunction) -> SphereFunction:
    if f.is_polynomial and g.is_polynomial:
        out: dict = {}
        for ef, vf in f.terms:
            for eg, vg in g.terms:
                e = tuple(a + b for a, b in zip(ef, eg))
                out[e] = out.get(e, 0) + vf * vg
        return SphereFunction.polynomial(out, f"{f.name}*{g.name}")
    return SphereFunction.from_callable(lambda t, p: f(t, p) * g(t, p), f"{f.name}*{g.name}")


def defects(Q: ToeplitzQuantizer, f: SphereFunction, g: SphereFunction) -> dict:
    """The four matrix-regularization defects at one ``p``."""
    Tf, Tg = Q.toeplitz(f), Q.toeplitz(g)
    d1 = operator_norm(Tf @ Tg - Q.toeplitz(_product(f, g)))
    bracket = Q.matrix_from_samples(poisson_bracket(f, g, Q.theta, Q.phi))
    d2 = operator_norm(1j / Q.hbar * (Tf @ Tg - Tg @ Tf) - bracket)
    d3 = abs(2 * np.pi * Q.hbar * np.trace(Tf) - sphere_integral(f))
    d4 = abs(operator_norm(Tf) - sup_norm(f))
    return {"p": Q.p, "delta1": float(d1), "delta2": float(d2), "delta3": float(d3), "delta4": float(d4)}


def kl_approx_check(Q: ToeplitzQuantizer, f: SphereFunction, g: SphereFunction) -> tuple[complex, float]:
    """``lam = tr(T(f)^dag T(g)) / N`` and ``||T(f)^dag T(g) - lam I||``."""
    A = Q.toeplitz(f).conj().T @ Q.toeplitz(g)
    lam = np.trace(A) / Q.N
    return complex(lam), operator_norm(A - lam * np.eye(Q.N))


def verify_c1(Q: ToeplitzQuantizer, f: SphereFunction, g: SphereFunction) -> float:
    """``||hbar^-1 (T(f)T(g) - T(fg)) - T(C_1(f, g))||``."""
    Tf, Tg = Q.toeplitz(f), Q.toeplitz(g)
    lhs = (Tf @ Tg - Q.toeplitz(_product(f, g))) / Q.hbar
    return operator_norm(lhs - Q.matrix_from_samples(c1_coefficient(f, g, Q.theta, Q.phi)))


def decay_slope(ps, values) -> float:
    ps, values = np.asarray(ps, float), np.asarray(values, float)
    if np.any(values <= 0):
        return float("nan")
    return float(np.polyfit(np.log(ps), np.log(values), 1)[0])


@dataclass(frozen=True)
class AxiomTable:
    rows: list
    hbar_scale: float
    slopes: dict

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])


DEFECT_COLUMNS = ("p", "delta1", "delta2", "delta3", "delta4", "kl_defect")


def verify_axioms(
    p_list: Sequence[int],
    f: SphereFunction,
    g: SphereFunction,
    hbar_scale: float | None = None,
    kl_pair: tuple[SphereFunction, SphereFunction] | None = None,
    q_extra: int = 8,
) -> AxiomTable:
    """Defect table over ascending ``p_list`` with ``hbar_p = s / p``.

    ``s`` is calibrated from the commutator of the coordinate functions when
    not given. ``kl_defect`` uses ``kl_pair`` (default: the pair ``(f, g)``).
    """
    ps = [int(p) for p in p_list]
    if len(ps) < 3 or ps != sorted(ps) or len(set(ps)) != len(ps):
        raise DomainError("p-list must be strictly ascending with at least 3 entries")
    if hbar_scale is None:
        hbar_scale = calibrate_hbar_scale(ps, q_extra)
    kf, kg = kl_pair or (f, g)
    rows = []
    for p in ps:
        Q = ToeplitzQuantizer(p, p + q_extra, hbar_scale / p)
        row = defects(Q, f, g)
        row["kl_defect"] = kl_approx_check(Q, kf, kg)[1]
        rows.append(row)
    slopes = {c: decay_slope(ps, [r[c] for r in rows]) for c in DEFECT_COLUMNS[1:]}
    return AxiomTable(rows, float(hbar_scale), slopes)
