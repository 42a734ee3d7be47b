"""Twisted crossed products of functions on a finite abelian group.

Group elements are integer tuples. Functions on the group are arrays indexed
by the enumeration order of :attr:`AbelianGroup.element_tuples` (mixed radix,
first coordinate most significant), so for bit vectors the index of ``x`` is
the computational-basis index of the corresponding qubit string.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DomainError
from .geometry import DiscreteMetricTriple, FiniteSpectralTriple, Monomial
from .operator_core import SCALAR_RTOL, CodeProjection, check_hermitian, operator_norm

MAX_DENSE_GROUP = 1 << 14


@dataclass(frozen=True)
class AbelianGroup:
    """``bits``: F_2^n; ``symplectic``: F_2^{2n} as (p|q); ``torus``: Z_M x Z_M."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in ("bits", "symplectic", "torus"):
            raise DomainError(f"unknown group kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("group parameter must be positive")
        if self.kind == "torus" and self.n % 2:
            raise DomainError(f"torus truncation M={self.n} must be even")

    @classmethod
    def bits(cls, n: int) -> "AbelianGroup":
        return cls("bits", n)

    @classmethod
    def symplectic(cls, n: int) -> "AbelianGroup":
        return cls("symplectic", n)

    @classmethod
    def torus(cls, M: int) -> "AbelianGroup":
        return cls("torus", M)

    @property
    def modulus(self) -> int:
        return self.n if self.kind == "torus" else 2

    @property
    def rank(self) -> int:
        return {"bits": self.n, "symplectic": 2 * self.n, "torus": 2}[self.kind]

    @property
    def order(self) -> int:
        return self.modulus ** self.rank

    @property
    def zero(self) -> tuple:
        return (0,) * self.rank

    @cached_property
    def elements(self) -> np.ndarray:
        if self.order > MAX_DENSE_GROUP:
            raise DomainError(f"group of order {self.order} is too large to enumerate densely")
        return np.array(list(itertools.product(range(self.modulus), repeat=self.rank)), dtype=np.int64)

    @cached_property
    def element_tuples(self) -> list[tuple]:
        return [tuple(int(c) for c in row) for row in self.elements]

    @cached_property
    def _radix(self) -> np.ndarray:
        return self.modulus ** np.arange(self.rank - 1, -1, -1, dtype=np.int64)

    def normalize(self, u) -> tuple:
        u = tuple(int(c) % self.modulus for c in u)
        if len(u) != self.rank:
            raise DomainError(f"element {u} has length {len(u)}, expected {self.rank}")
        return u

    def index(self, u) -> int:
        return int(np.dot(np.asarray(self.normalize(u), dtype=np.int64), self._radix))

    def indices(self, arr: np.ndarray) -> np.ndarray:
        return (np.asarray(arr) % self.modulus) @ self._radix

    def add(self, u, v) -> tuple:
        return tuple((a + b) % self.modulus for a, b in zip(u, v))

    def sub(self, u, v) -> tuple:
        return tuple((a - b) % self.modulus for a, b in zip(u, v))

    def neg(self, u) -> tuple:
        return tuple((-a) % self.modulus for a in u)

    def shift_index(self, u) -> np.ndarray:
        """``idx(x - u)`` for every ``x`` in enumeration order."""
        return self.indices(self.elements - np.asarray(self.normalize(u)))

    def split(self, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(p, q) halves for the symplectic and torus kinds."""
        arr = np.asarray(arr)
        if self.kind == "symplectic":
            return arr[..., : self.n], arr[..., self.n:]
        if self.kind == "torus":
            return arr[..., :1], arr[..., 1:]
        raise DomainError("bit-vector groups carry no symplectic splitting")

    def symplectic_form(self, u, v) -> int:
        p, q = self.split(np.asarray(u))
        p2, q2 = self.split(np.asarray(v))
        return int((p @ q2 + q @ p2) % 2)


@dataclass(frozen=True)
class Cocycle:
    """Normalized 2-cocycle ``sigma(u, v)``.

    ``one_sided``: ``(-1)^{p.q'}`` (Pauli convention); ``symmetric``:
    ``(-1)^{p.q' + q.p'}``; ``trivial``: 1. ``beta`` (an array of unit phases
    over the group with ``beta(0) = 1``) multiplies in the coboundary
    ``beta(u) beta(v) / beta(u + v)``.
    """

    group: AbelianGroup
    kind: str = "one_sided"
    beta: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("trivial", "one_sided", "symmetric"):
            raise DomainError(f"unknown cocycle kind {self.kind!r}")
        if self.kind != "trivial" and self.group.kind == "bits":
            raise DomainError("bit-vector groups only carry the trivial cocycle here")
        if self.beta is not None:
            b = np.asarray(self.beta, dtype=complex)
            if b.shape != (self.group.order,) or not np.allclose(np.abs(b), 1.0):
                raise DomainError("coboundary must be a unit phase per group element")
            object.__setattr__(self, "beta", b / b[0])

    @classmethod
    def default(cls, group: AbelianGroup) -> "Cocycle":
        return cls(group, "trivial" if group.kind == "bits" else "one_sided")

    def twisted_by(self, beta) -> "Cocycle":
        return Cocycle(self.group, self.kind, beta)

    def phase_array(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Vectorized phase over broadcast arrays of elements (last axis = coordinates)."""
        g = self.group
        U = np.asarray(U) % g.modulus
        V = np.asarray(V) % g.modulus
        if self.kind == "trivial":
            ph = np.ones(np.broadcast_shapes(U.shape[:-1], V.shape[:-1]), dtype=complex)
        else:
            p, q = g.split(U)
            p2, q2 = g.split(V)
            e = np.sum(p * q2, axis=-1)
            if self.kind == "symmetric":
                e = e + np.sum(q * p2, axis=-1)
            ph = np.where(e % 2, -1.0, 1.0).astype(complex)
        if self.beta is not None:
            iu, iv, iw = g.indices(U), g.indices(V), g.indices(U + V)
            ph = ph * self.beta[iu] * self.beta[iv] / self.beta[iw]
        return ph

    def __call__(self, u, v) -> complex:
        return complex(self.phase_array(np.asarray(u)[None], np.asarray(v)[None])[0])

    def identity_defect(self, rng: np.random.Generator | None = None, samples: int = 10_000) -> float:
        """Max |sigma(u,v) sigma(u+v,w) - sigma(v,w) sigma(u,v+w)|, exhaustive
        for groups of order <= 256 and sampled otherwise."""
        g = self.group
        if g.order <= 256:
            E = g.elements
            U, V, W = E[:, None, None], E[None, :, None], E[None, None, :]
        else:
            rng = rng or np.random.default_rng(0)
            pick = lambda: rng.integers(0, g.modulus, size=(samples, g.rank))
            U, V, W = pick(), pick(), pick()
        lhs = self.phase_array(U, V) * self.phase_array(U + V, W)
        rhs = self.phase_array(V, W) * self.phase_array(U, V + W)
        return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class WeightFunction:
    """``hamming``: nonzero coordinates; ``pauli``: qubits with (p_i, q_i) != 0;
    ``manhattan``: sum of |r| over representatives r in [-M/2, M/2)."""

    group: AbelianGroup
    kind: str

    def __post_init__(self):
        ok = {"bits": ("hamming",), "symplectic": ("pauli", "hamming"), "torus": ("manhattan",)}
        if self.kind not in ok[self.group.kind]:
            raise DomainError(f"weight {self.kind!r} is not defined on {self.group.kind} groups")

    @classmethod
    def default(cls, group: AbelianGroup) -> "WeightFunction":
        return cls(group, {"bits": "hamming", "symplectic": "pauli", "torus": "manhattan"}[group.kind])

    def of_array(self, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U) % self.group.modulus
        if self.kind == "hamming":
            return np.count_nonzero(U, axis=-1)
        if self.kind == "pauli":
            p, q = self.group.split(U)
            return np.count_nonzero(p | q, axis=-1)
        M = self.group.modulus
        return np.sum(np.minimum(U, M - U), axis=-1)

    def __call__(self, u) -> int:
        return int(self.of_array(np.asarray(u)[None])[0])

    def metric(self, x, y) -> int:
        return self(self.group.sub(x, y))


# --- representations ---------------------------------------------------------


def _regular_matrix(group: AbelianGroup, cocycle: Cocycle, u) -> np.ndarray:
    u = group.normalize(u)
    E = group.elements
    cols = np.arange(group.order)
    rows = group.indices(E + np.asarray(u))
    W = np.zeros((group.order, group.order), dtype=complex)
    W[rows, cols] = cocycle.phase_array(np.asarray(u)[None], E)
    return W


class RegularRepresentation:
    """``U_u |x> = sigma(u, x) |x + u>`` on l^2(V)."""

    def __init__(self, group: AbelianGroup, cocycle: Cocycle | None = None):
        self.group = group
        self.cocycle = cocycle or Cocycle.default(group)
        self.dim = group.order

    def matrix(self, u) -> np.ndarray:
        return _regular_matrix(self.group, self.cocycle, u)

    def apply(self, u, V: np.ndarray) -> np.ndarray:
        g = self.group
        u = g.normalize(u)
        # (U_u V)[y] = sigma(u, y - u) V[y - u]
        src = g.shift_index(u)
        ph = self.cocycle.phase_array(np.asarray(u)[None], g.elements - np.asarray(u))
        return ph[:, None] * V[src]


class PauliRepresentation:
    """``U_(p|q) = Z^q X^p`` on (C^2)^{(x) n}, qubit 1 most significant.

    Realizes the one-sided cocycle ``(-1)^{p.q'}`` in dimension ``2^n``.
    """

    def __init__(self, n: int):
        self.n = n
        self.group = AbelianGroup.symplectic(n)
        self.cocycle = Cocycle(self.group, "one_sided")
        self.dim = 1 << n
        self._basis = np.arange(self.dim, dtype=np.int64)

    def masks(self, u) -> tuple[int, int]:
        u = self.group.normalize(u)
        bits = 1 << np.arange(self.n - 1, -1, -1)
        return int(np.dot(u[: self.n], bits)), int(np.dot(u[self.n:], bits))

    def apply(self, u, V: np.ndarray) -> np.ndarray:
        px, qz = self.masks(u)
        c = self._basis
        sign = 1 - 2 * (np.bitwise_count(c & qz).astype(np.int64) & 1)
        return sign[:, None] * V[c ^ px]

    def matrix(self, u) -> np.ndarray:
        return self.apply(u, np.eye(self.dim, dtype=complex))


def weyl(u, group: AbelianGroup, cocycle: Cocycle | None = None, rep: str = "auto") -> np.ndarray:
    """Weyl unitary of ``u``.

    ``rep="auto"`` uses the qubit (Pauli) realization for symplectic groups
    with the one-sided cocycle and the regular representation otherwise.
    """
    cocycle = cocycle or Cocycle.default(group)
    if rep == "auto":
        rep = "pauli" if group.kind == "symplectic" and cocycle.kind == "one_sided" and cocycle.beta is None else "regular"
    if rep == "pauli":
        if group.kind != "symplectic" or cocycle.kind != "one_sided" or cocycle.beta is not None:
            raise DomainError("the qubit realization needs a symplectic group with the one-sided cocycle")
        return PauliRepresentation(group.n).matrix(u)
    if rep == "regular":
        return _regular_matrix(group, cocycle, u)
    raise DomainError(f"unknown representation {rep!r}")


# --- algebra elements --------------------------------------------------------


@dataclass
class CrossedProductElement:
    """``a = sum_u f_u U_u``; ``terms`` maps shift tuples to coefficient arrays."""

    group: AbelianGroup
    cocycle: Cocycle
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for u, f in self.terms.items():
            u = self.group.normalize(u)
            f = np.asarray(f, dtype=complex)
            if f.shape != (self.group.order,):
                raise DomainError(f"coefficient of shape {f.shape}, expected ({self.group.order},)")
            f = clean.get(u, 0) + f
            clean[u] = f
        self.terms = {u: f for u, f in clean.items() if np.any(f != 0)}

    @classmethod
    def function(cls, group, cocycle, f) -> "CrossedProductElement":
        return cls(group, cocycle, {group.zero: f})

    @classmethod
    def monomial(cls, group, cocycle, z, u, coeff: complex = 1.0) -> "CrossedProductElement":
        f = np.zeros(group.order, dtype=complex)
        f[group.index(z)] = coeff
        return cls(group, cocycle, {group.normalize(u): f})

    @classmethod
    def unitary(cls, group, cocycle, u) -> "CrossedProductElement":
        return cls(group, cocycle, {group.normalize(u): np.ones(group.order)})

    def _same(self, other):
        if self.group != other.group or self.cocycle != other.cocycle:
            raise DomainError("elements live in different crossed products")

    def __add__(self, other):
        self._same(other)
        t = dict(self.terms)
        for u, f in other.terms.items():
            t[u] = t.get(u, 0) + f
        return CrossedProductElement(self.group, self.cocycle, t)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        return CrossedProductElement(self.group, self.cocycle, {u: c * f for u, f in self.terms.items()})

    def __mul__(self, other):
        if np.isscalar(other):
            return other * self
        self._same(other)
        g, sig = self.group, self.cocycle
        out: dict = {}
        for u, f in self.terms.items():
            shift = g.shift_index(u)
            for v, h in other.terms.items():
                w = g.add(u, v)
                out[w] = out.get(w, 0) + f * h[shift] * sig(u, v)
        return CrossedProductElement(g, sig, out)

    def adjoint(self) -> "CrossedProductElement":
        g, sig = self.group, self.cocycle
        out = {}
        for u, f in self.terms.items():
            mu = g.neg(u)
            out[mu] = out.get(mu, 0) + np.conj(sig(u, mu)) * np.conj(f)[g.shift_index(mu)]
        return CrossedProductElement(g, sig, out)

    def is_zero(self) -> bool:
        return not self.terms


def represent(a: CrossedProductElement) -> np.ndarray:
    """Regular representation ``sum_u diag(f_u) U_u``."""
    g = a.group
    M = np.zeros((g.order, g.order), dtype=complex)
    for u, f in a.terms.items():
        M += f[:, None] * _regular_matrix(g, a.cocycle, u)
    return M


# --- the assembled triple --------------------------------------------------


@dataclass
class CrossedProductTriple:
    """``D = D_m (+) D_c`` on ``H_m (+) H_phys`` with the metric part kept blockwise.

    Functions act on ``H_m`` through their ``U_0`` coefficient at the two
    endpoints of each block and on ``H_phys`` through the representation.
    """

    group: AbelianGroup
    weight: WeightFunction
    cocycle: Cocycle
    metric: DiscreteMetricTriple
    D_c: np.ndarray

    @property
    def phys_dim(self) -> int:
        return self.D_c.shape[0]

    def position_state(self, x) -> np.ndarray:
        v = np.zeros(self.metric.hilbert_dim + self.phys_dim)
        v[self.metric.hilbert_dim + self.group.index(x)] = 1.0
        return v

    def element_matrix(self, a: CrossedProductElement) -> np.ndarray:
        f0 = a.terms.get(self.group.zero, np.zeros(self.group.order))
        return _direct_sum(self.metric.function_rep(f0), represent(a))

    def dense(self, include_unitaries: bool = True) -> FiniteSpectralTriple:
        g = self.group
        if self.phys_dim != g.order:
            raise DomainError("dense triple needs the regular representation")
        gens = {}
        for i, x in enumerate(g.element_tuples):
            e = np.zeros(g.order)
            e[i] = 1.0
            gens[f"delta{x}"] = self.element_matrix(CrossedProductElement.function(g, self.cocycle, e))
        if include_unitaries:
            for u in g.element_tuples[1:]:
                gens[f"U{u}"] = self.element_matrix(CrossedProductElement.unitary(g, self.cocycle, u))
        states = {x: self.position_state(x) for x in g.element_tuples}
        D = _direct_sum(self.metric.dirac(), self.D_c)
        return FiniteSpectralTriple(D, gens, states)


def _direct_sum(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    out = np.zeros((A.shape[0] + B.shape[0],) * 2, dtype=np.result_type(A, B, complex))
    out[: A.shape[0], : A.shape[0]] = A
    out[A.shape[0]:, A.shape[0]:] = B
    return out


def assemble_triple(
    group: AbelianGroup,
    weight: WeightFunction,
    cocycle: Cocycle,
    D_c: np.ndarray,
    phys_dim: int | None = None,
) -> CrossedProductTriple:
    """Build ``D_m (+) D_c``. ``D_c`` must act on ``l^2(V)`` unless a physical
    dimension is declared (qubit realizations of symplectic groups)."""
    D_c = check_hermitian(np.asarray(D_c))
    expected = group.order if phys_dim is None else phys_dim
    if D_c.shape[0] != expected:
        raise DomainError(f"D_c has dimension {D_c.shape[0]}, expected {expected}")
    metric = DiscreteMetricTriple.from_metric(group.element_tuples, weight.metric)
    return CrossedProductTriple(group, weight, cocycle, metric, D_c)


# --- W-set and distance ------------------------------------------------------


def _representation(group, representation):
    if representation is None or representation == "auto":
        if group.kind == "symplectic":
            return PauliRepresentation(group.n)
        return RegularRepresentation(group)
    if isinstance(representation, str):
        if representation == "pauli":
            return PauliRepresentation(group.n)
        if representation == "regular":
            return RegularRepresentation(group)
        raise DomainError(f"unknown representation {representation!r}")
    return representation


def _non_scalar(P: CodeProjection, UV: np.ndarray, tol: float) -> bool:
    B = P.basis.conj().T @ UV
    lam = np.trace(B) / P.rank
    return operator_norm(B - lam * np.eye(P.rank)) > tol


def compute_W_set(P: CodeProjection, group: AbelianGroup, representation=None,
                  tol: float = SCALAR_RTOL) -> set[tuple]:
    """Group elements whose Weyl unitary is not scalar on the code."""
    rep = _representation(group, representation)
    if P.rank == 0:
        raise DomainError("W-set needs a nonzero code")
    if P.dim != rep.dim:
        raise DomainError(f"code lives in dimension {P.dim}, representation in {rep.dim}")
    return {u for u in group.element_tuples if _non_scalar(P, rep.apply(u, P.basis), tol)}


def code_distance_via_W(P: CodeProjection, group: AbelianGroup, weight: WeightFunction | None = None,
                        representation=None, W: set | None = None) -> float:
    weight = weight or WeightFunction.default(group)
    if W is None:
        W = compute_W_set(P, group, representation)
    if not W:
        return float("inf")
    return float(min(weight(u) for u in W))


def translation_monomials(group: AbelianGroup, representation=None) -> list[Monomial]:
    """Localized monomials with a nonzero shift.

    In the regular representation these are ``delta_z U_u`` for all ``z`` and
    ``u != 0``, supported on ``{z, z - u}``. The qubit realization carries no
    position functions, so there they are ``U_u`` with support ``{u, 0}``.
    """
    rep = _representation(group, representation)
    out = []
    for u in group.element_tuples[1:]:
        if isinstance(rep, PauliRepresentation):
            region = frozenset({u, group.zero})
            out.append(Monomial(region, lambda V, u=u: rep.apply(u, V), 1.0, (u, u)))
            continue
        for z in group.element_tuples:
            i = group.index(z)

            def op(V, u=u, i=i):
                W = rep.apply(u, V)
                res = np.zeros_like(W)
                res[i] = W[i]
                return res

            out.append(Monomial(frozenset({z, group.sub(z, u)}), op, 1.0, (z, u)))
    return out
