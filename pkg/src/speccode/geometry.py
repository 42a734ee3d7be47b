"""Finite spectral triples over discrete point sets.

Covers the pairwise Dirac operator of a weighted point set, Connes distances
(shortest-path closed form and a general semidefinite solver), local algebras
and supports of crossed-product elements, and the geometric Knill-Laflamme
and code-distance checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .errors import DomainError
from .operator_core import (
    SCALAR_RTOL,
    CodeProjection,
    check_hermitian,
    commutator,
    operator_norm,
)

Region = frozenset


@dataclass(frozen=True)
class DiscreteMetricTriple:
    """Weighted finite point set with one 2x2 Dirac block per unordered pair.

    ``weights[i, j]`` is the weight of the pair ``(points[i], points[j])``;
    block ``(i, j)`` carries ``1/weights[i, j]`` off the diagonal.
    """

    points: tuple
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        n = len(self.points)
        if w.shape != (n, n):
            raise DomainError(f"weight matrix shape {w.shape} does not match {n} points")
        if not np.allclose(w, w.T, rtol=0, atol=1e-14):
            raise DomainError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise DomainError("weight(x, x) must be 0")
        off = w[~np.eye(n, dtype=bool)]
        if np.any(off <= 0) or not np.all(np.isfinite(off)):
            raise DomainError("weights of distinct points must be positive and finite")
        if len(set(self.points)) != n:
            raise DomainError("point labels must be distinct")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_metric(cls, points: Sequence[Hashable], metric: Callable) -> "DiscreteMetricTriple":
        pts = tuple(points)
        n = len(pts)
        w = np.zeros((n, n))
        for i, j in itertools.combinations(range(n), 2):
            w[i, j] = w[j, i] = metric(pts[i], pts[j])
        return cls(pts, w)

    @cached_property
    def _index(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    def index(self, x) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise DomainError(f"unknown point {x!r}") from None

    @cached_property
    def pairs(self) -> list[tuple[int, int]]:
        return list(itertools.combinations(range(len(self.points)), 2))

    @property
    def hilbert_dim(self) -> int:
        return 2 * len(self.pairs)

    def blocks(self) -> list[np.ndarray]:
        out = []
        for i, j in self.pairs:
            b = 1.0 / self.weights[i, j]
            out.append(np.array([[0.0, b], [b, 0.0]]))
        return out

    def dirac(self) -> np.ndarray:
        D = np.zeros((self.hilbert_dim, self.hilbert_dim))
        for k, (i, j) in enumerate(self.pairs):
            b = 1.0 / self.weights[i, j]
            D[2 * k, 2 * k + 1] = D[2 * k + 1, 2 * k] = b
        return D

    def function_rep(self, f) -> np.ndarray:
        """Diagonal action of a function on the points: diag(f(x), f(y)) per pair."""
        f = np.asarray(f)
        d = np.empty(self.hilbert_dim, dtype=np.result_type(f, float))
        for k, (i, j) in enumerate(self.pairs):
            d[2 * k], d[2 * k + 1] = f[i], f[j]
        return np.diag(d)

    def position_vector(self, x) -> np.ndarray:
        """A unit vector whose vector state evaluates functions at ``x``."""
        i = self.index(x)
        v = np.zeros(self.hilbert_dim)
        for k, (a, b) in enumerate(self.pairs):
            if a == i:
                v[2 * k] = 1.0
                return v
            if b == i:
                v[2 * k + 1] = 1.0
                return v
        raise DomainError("a single point carries no metric blocks")

    @cached_property
    def closure(self) -> np.ndarray:
        return shortest_path(self.weights, method="FW", directed=False)

    def as_spectral_triple(self) -> "FiniteSpectralTriple":
        n = len(self.points)
        gens = {}
        for i, p in enumerate(self.points):
            e = np.zeros(n)
            e[i] = 1.0
            gens[f"delta[{p}]"] = self.function_rep(e)
        states = {p: self.position_vector(p) for p in self.points}
        return FiniteSpectralTriple(self.dirac(), gens, states)


def connes_distance_closed(t: DiscreteMetricTriple, x, y) -> float:
    """Connes distance between position states of a pairwise metric triple.

    The commutator norm is the largest ``|f(x) - f(y)| / w(x, y)``, so the
    distance is the shortest-path closure of the weights.
    """
    return float(t.closure[t.index(x), t.index(y)])


@dataclass
class FiniteSpectralTriple:
    """Finite-dimensional spectral triple with named algebra generators and
    named vector states."""

    dirac: np.ndarray
    generators: dict[str, np.ndarray]
    states: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dirac = check_hermitian(self.dirac)
        dim = self.dirac.shape[0]
        for name, g in self.generators.items():
            if np.shape(g) != (dim, dim):
                raise DomainError(f"generator {name!r} has shape {np.shape(g)}, expected {(dim, dim)}")
        for name, v in self.states.items():
            if np.shape(v) != (dim,):
                raise DomainError(f"state {name!r} has shape {np.shape(v)}")
            if abs(np.linalg.norm(v) - 1) > 1e-10:
                raise DomainError(f"state {name!r} is not normalized")

    @property
    def hilbert_dim(self) -> int:
        return self.dirac.shape[0]

    def commutator_norms(self) -> dict[str, float]:
        return {k: operator_norm(commutator(self.dirac, g)) for k, g in self.generators.items()}

    def state(self, s) -> np.ndarray:
        if isinstance(s, np.ndarray):
            v = s
        else:
            try:
                v = self.states[s]
            except KeyError:
                raise DomainError(f"unknown state {s!r}") from None
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise DomainError("state vector is not normalized")
        return v


@dataclass(frozen=True)
class ConnesDistance:
    value: float
    upper: float
    lower_bound_only: bool
    status: str

    def __float__(self):
        return self.value


def _selfadjoint_basis(gens: Iterable[np.ndarray]) -> list[np.ndarray]:
    basis = []
    for g in gens:
        h = 0.5 * (g + g.conj().T)
        k = (g - g.conj().T) / 2j
        for m in (h, k):
            if np.max(np.abs(m), initial=0.0) > 1e-14:
                basis.append(m)
    return basis


def _real_embed(K: np.ndarray) -> np.ndarray:
    return np.block([[K.real, -K.imag], [K.imag, K.real]])


class ConnesSolver:
    """Semidefinite program for the Connes distance on a fixed triple.

    Maximizes ``omega1(a) - omega2(a)`` over self-adjoint ``a`` in the real
    span of the generators subject to ``-1 <= i[D, a] <= 1``. The program is
    compiled once; only the objective changes between state pairs. The
    optimizer is rescaled by ``1/max(1, ||[D, a]||)`` so ``value`` is always
    attained by a feasible element; ``upper`` is the solver's objective.
    """

    def __init__(self, t: FiniteSpectralTriple):
        import cvxpy as cp

        self.t = t
        self.basis = _selfadjoint_basis(t.generators.values())
        Ks = [1j * commutator(t.dirac, h) for h in self.basis]
        self._blind = np.array([operator_norm(K) < 1e-12 for K in Ks], dtype=bool)
        self._prob = None
        if self.basis:
            Rs = [_real_embed(K) for K in Ks]
            N = Rs[0].shape[0]
            self._c = cp.Variable(len(self.basis))
            self._obj = cp.Parameter(len(self.basis))
            S = sum(self._c[k] * Rs[k] for k in range(len(self.basis)))
            S = 0.5 * (S + S.T)
            eye = np.eye(N)
            self._prob = cp.Problem(cp.Maximize(self._obj @ self._c), [eye - S >> 0, eye + S >> 0])

    def _objective(self, v1, v2) -> np.ndarray:
        return np.array([np.real(v1.conj() @ h @ v1 - v2.conj() @ h @ v2) for h in self.basis])

    def distance(self, s1, s2) -> ConnesDistance:
        import cvxpy as cp

        v1, v2 = self.t.state(s1), self.t.state(s2)
        if self._prob is None or np.allclose(v1, v2):
            return ConnesDistance(0.0, 0.0, False, "trivial")
        obj = self._objective(v1, v2)
        if np.max(np.abs(obj)) < 1e-14:
            return ConnesDistance(0.0, 0.0, False, "trivial")
        # directions invisible to D but seen by the states make the distance infinite
        if np.any(self._blind & (np.abs(obj) > 1e-12)):
            return ConnesDistance(float("inf"), float("inf"), False, "unbounded")
        self._obj.value = obj
        prob = self._prob
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
        if prob.status in ("unbounded", "unbounded_inaccurate"):
            return ConnesDistance(float("inf"), float("inf"), False, prob.status)
        c = self._c.value
        if c is None:
            return ConnesDistance(0.0, float("inf"), True, prob.status)
        a = sum(ck * h for ck, h in zip(c, self.basis))
        a = a / max(1.0, operator_norm(commutator(self.t.dirac, a)))
        value = abs(float(np.real(v1.conj() @ a @ v1 - v2.conj() @ a @ v2)))
        upper = float(prob.value)
        flagged = prob.status != "optimal" or upper - value > 1e-6 * max(1.0, abs(upper))
        return ConnesDistance(value, upper, flagged, prob.status)


def connes_distance_general(t: FiniteSpectralTriple, s1, s2) -> ConnesDistance:
    """Connes distance between two vector states by semidefinite programming;
    see :class:`ConnesSolver` for reuse across many pairs."""
    return ConnesSolver(t).distance(s1, s2)


# --- locality in crossed products ---------------------------------------------
#
# Elements are duck-typed: ``a.terms`` maps a shift ``u`` (tuple) to a
# coefficient array indexed like ``a.group.elements``; ``a.group`` offers
# ``elements``, ``add`` and ``sub`` on tuples.


def _supp(a, f) -> set:
    idx = np.flatnonzero(f)
    els = a.group.element_tuples
    return {els[i] for i in idx}


def local_algebra_membership(a, Y: Iterable) -> bool:
    """Two-sided locality: every ``f_u`` is supported in ``Y`` and in ``Y + u``."""
    Y = set(Y)
    g = a.group
    for u, f in a.terms.items():
        Yu = {g.add(y, u) for y in Y}
        if not _supp(a, f) <= (Y & Yu):
            return False
    return True


def support_of(a) -> Region:
    """Minimal region containing ``a``: the union of ``supp f_u`` and
    ``supp f_u - u`` over all shifts."""
    g = a.group
    out = set()
    for u, f in a.terms.items():
        s = _supp(a, f)
        out |= s
        out |= {g.sub(z, u) for z in s}
    if not out:
        raise DomainError("the zero element has no minimal support")
    return Region(out)


def diameter(Y: Iterable, metric: Callable) -> float:
    Y = list(Y)
    if len(Y) < 2:
        return 0.0
    return max(metric(x, y) for x, y in itertools.combinations(Y, 2))


# --- Knill-Laflamme and code distance -------------------------------------------


class KLReport(NamedTuple):
    ok: bool
    lam: np.ndarray
    worst: float


def kl_check(P: CodeProjection, errors: Sequence[np.ndarray], tol: float = SCALAR_RTOL) -> KLReport:
    """Check ``P E_a^dag E_b P = lam_ab P`` for all pairs of errors."""
    if P.rank == 0:
        raise DomainError("KL check needs a nonzero code")
    for E in errors:
        if np.shape(E) != (P.dim, P.dim):
            raise DomainError(f"error of shape {np.shape(E)} does not act on dimension {P.dim}")
    EV = [E @ P.basis for E in errors]
    m = len(errors)
    lam = np.zeros((m, m), dtype=complex)
    worst = 0.0
    eye = np.eye(P.rank)
    for a in range(m):
        for b in range(m):
            B = EV[a].conj().T @ EV[b]
            lam[a, b] = np.trace(B) / P.rank
            worst = max(worst, operator_norm(B - lam[a, b] * eye))
    return KLReport(bool(worst <= tol), lam, worst)


@dataclass(frozen=True)
class Monomial:
    """A localized algebra element: its support region and its action.

    ``op`` is either a matrix or a callable ``V -> op @ V``; ``norm`` is the
    operator norm used to scale the scalar-on-code tolerance.
    """

    region: Region
    op: object
    norm: float = 1.0
    label: object = None

    def apply(self, V: np.ndarray) -> np.ndarray:
        return self.op(V) if callable(self.op) else self.op @ V


def code_distance_geometric(
    P: CodeProjection,
    monomials: Iterable[Monomial],
    metric: Callable,
    tol: float = SCALAR_RTOL,
) -> float:
    """Smallest support diameter among monomials that act non-scalarly on the
    code; ``inf`` when every monomial is scalar."""
    if P.rank == 0:
        raise DomainError("code distance needs a nonzero code")
    cands = sorted(((diameter(m.region, metric), i, m) for i, m in enumerate(monomials)),
                   key=lambda t: (t[0], t[1]))
    eye = np.eye(P.rank)
    for diam, _, m in cands:
        B = P.basis.conj().T @ m.apply(P.basis)
        lam = np.trace(B) / P.rank
        if operator_norm(B - lam * eye) > tol * max(1.0, m.norm):
            return float(diam)
    return float("inf")
