"""Concrete code instances: classical linear codes, stabilizer codes, the
truncated discrete GKP code, the Z2 toric code and the formal reconstruction
of a Dirac operator from an arbitrary code projection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .crossed_product import (
    AbelianGroup,
    Cocycle,
    PauliRepresentation,
    RegularRepresentation,
    WeightFunction,
    code_distance_via_W,
    compute_W_set,
)
from .errors import DomainError, NumericalError
from .operator_core import SCALAR_RTOL, CodeProjection, check_hermitian, kernel_projection, operator_norm

MAX_DENSE_QUBITS = 12
MAX_TORIC_EDGES = 16
DENSE_CROSSCHECK_EDGES = 8


# --- F2 linear algebra ----------------------------------------------------------


def gf2_rank(rows) -> int:
    A = np.array(rows, dtype=np.uint8) % 2
    if A.size == 0:
        return 0
    A = A.copy()
    r = 0
    for c in range(A.shape[1]):
        piv = np.flatnonzero(A[r:, c])
        if piv.size == 0:
            continue
        p = r + piv[0]
        A[[r, p]] = A[[p, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        A[others] ^= A[r]
        r += 1
        if r == A.shape[0]:
            break
    return r


def gf2_span(rows) -> np.ndarray:
    """All F2 combinations of ``rows`` (rows assumed independent), as an array."""
    G = np.array(rows, dtype=np.int64) % 2
    k = G.shape[0]
    coeffs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64)
    return (coeffs @ G) % 2


# --- classical codes ------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalCode:
    n: int
    generators: np.ndarray
    codewords: np.ndarray = field(repr=False)

    @property
    def group(self) -> AbelianGroup:
        return AbelianGroup.bits(self.n)

    def dirac(self) -> np.ndarray:
        """Diagonal indicator of the complement of the code."""
        g = self.group
        mask = np.ones(g.order)
        mask[g.indices(self.codewords)] = 0.0
        return np.diag(mask)


class ClassicalResult(NamedTuple):
    code: ClassicalCode
    P: CodeProjection
    distance: float


def classical_code(n: int, rows) -> ClassicalResult:
    G = np.array(rows, dtype=np.int64).reshape(-1, n) % 2
    r = gf2_rank(G)
    if r < G.shape[0]:
        raise DomainError(f"generator rows are dependent: rank {r} < {G.shape[0]} rows")
    code = ClassicalCode(n, G, gf2_span(G))
    g = code.group
    P = CodeProjection(np.eye(g.order, dtype=complex)[:, np.sort(g.indices(code.codewords))])
    d = code_distance_via_W(P, g, WeightFunction(g, "hamming"), RegularRepresentation(g))
    return ClassicalResult(code, P, d)


# --- stabilizer codes ---------------------------------------------------------


def parse_pauli(s: str, n: int | None = None) -> tuple[tuple, int]:
    """``"XZZXI"`` -> ((p|q), sign); an optional leading ``+``/``-`` sets the sign."""
    s = s.strip()
    sign = 1
    if s[:1] in "+-":
        sign = -1 if s[0] == "-" else 1
        s = s[1:]
    s = s.upper()
    if n is not None and len(s) != n:
        raise DomainError(f"Pauli string {s!r} has length {len(s)}, expected {n}")
    if not s or set(s) - set("IXYZ"):
        raise DomainError(f"invalid Pauli string {s!r}")
    p = tuple(int(c in "XY") for c in s)
    q = tuple(int(c in "ZY") for c in s)
    return p + q, sign


def pauli_string(u) -> str:
    n = len(u) // 2
    return "".join("IXZY"[u[i] + 2 * u[n + i]] for i in range(n))


def hermitian_phase(u) -> complex:
    """Phase making ``Z^q X^p`` Hermitian: ``(-i)^{p.q}``, i.e. the usual Pauli string."""
    n = len(u) // 2
    return (-1j) ** (int(np.dot(u[:n], u[n:])) % 4)


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    generators: tuple
    signs: tuple
    phase_fixes: tuple = ()

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def group(self) -> AbelianGroup:
        return AbelianGroup.symplectic(self.n)

    def stabilizer_apply(self, i: int, V: np.ndarray) -> np.ndarray:
        u = self.generators[i]
        rep = PauliRepresentation(self.n)
        return self.signs[i] * hermitian_phase(u) * rep.apply(u, V)

    def stabilizer_matrix(self, i: int) -> np.ndarray:
        return self.stabilizer_apply(i, np.eye(1 << self.n, dtype=complex))

    def dirac(self) -> np.ndarray:
        if self.n > MAX_DENSE_QUBITS:
            raise DomainError(f"dense Dirac operator limited to {MAX_DENSE_QUBITS} qubits")
        N = 1 << self.n
        D = self.m * np.eye(N, dtype=complex)
        for i in range(self.m):
            D -= self.stabilizer_matrix(i)
        return D

    def logical_span(self) -> np.ndarray:
        return gf2_span(self.generators)


class StabilizerResult(NamedTuple):
    code: StabilizerCode
    D_c: np.ndarray
    P: CodeProjection
    distance: float


def _check_isotropic(n: int, gens: Sequence[tuple]) -> None:
    g = AbelianGroup.symplectic(n)
    for (i, u), (j, v) in itertools.combinations(enumerate(gens), 2):
        if g.symplectic_form(u, v):
            raise DomainError(
                f"generators {i} ({pauli_string(u)}) and {j} ({pauli_string(v)}) anticommute"
            )


def stabilizer_code(n: int, generators: Sequence) -> StabilizerResult:
    """Stabilizer code from Pauli strings or symplectic vectors.

    Each generator is realized as a Hermitian unitary (the Pauli string itself,
    i.e. ``Z^q X^p`` times ``(-i)^{p.q}``), so ``D_c = sum_i (1 - S_i)`` is
    positive with spectrum in ``{0, 2, ..., 2m}``.
    """
    vecs, signs = [], []
    for g in generators:
        if isinstance(g, str):
            u, s = parse_pauli(g, n)
        else:
            u, s = tuple(int(c) % 2 for c in g), 1
            if len(u) != 2 * n:
                raise DomainError(f"symplectic vector of length {len(u)}, expected {2 * n}")
        vecs.append(u)
        signs.append(s)
    if not vecs:
        raise DomainError("need at least one generator")
    if any(not any(u) for u in vecs):
        raise DomainError("the identity is not an admissible generator")
    _check_isotropic(n, vecs)
    r = gf2_rank(vecs)
    if r < len(vecs):
        raise DomainError(f"generators are dependent: rank {r} < {len(vecs)}")
    fixes = tuple(i for i, u in enumerate(vecs) if int(np.dot(u[:n], u[n:])) % 2)
    code = StabilizerCode(n, tuple(vecs), tuple(signs), fixes)
    D = check_hermitian(code.dirac())
    P = kernel_projection(D)
    expected = 1 << (n - code.m)
    if P.rank != expected:
        raise NumericalError(f"kernel rank {P.rank} differs from 2^(n-m) = {expected}")
    d = code_distance_via_W(P, code.group, WeightFunction(code.group, "pauli"), PauliRepresentation(n))
    return StabilizerResult(code, D, P, d)


# --- discrete GKP -------------------------------------------------------------


class GKPResult(NamedTuple):
    M: int
    D_c: np.ndarray
    P: CodeProjection
    distance: float


def gkp_dirac(M: int) -> np.ndarray:
    if M % 2 or M < 4:
        raise DomainError(f"truncation M must be even and >= 4, got {M}")
    g = AbelianGroup.torus(M)
    rep = RegularRepresentation(g, Cocycle(g, "one_sided"))
    D = np.zeros((g.order, g.order), dtype=complex)
    for u in ((0, 2), (2, 0)):
        U = rep.matrix(u)
        D += np.eye(g.order) - 0.5 * (U + U.conj().T)
    return D


def gkp_discrete(M: int) -> GKPResult:
    """Lattice code ``L = 2Z^2`` on the truncated torus Z_M x Z_M."""
    D = check_hermitian(gkp_dirac(M))
    g = AbelianGroup.torus(M)
    P = kernel_projection(D)
    rep = RegularRepresentation(g, Cocycle(g, "one_sided"))
    d = code_distance_via_W(P, g, WeightFunction(g, "manhattan"), rep)
    return GKPResult(M, D, P, d)


# --- Z2 toric code ------------------------------------------------------------


@dataclass(frozen=True)
class ToricLattice:
    """Periodic Lx x Ly square lattice. Horizontal edge ``(x,y)->(x+1,y)`` has
    index ``y*Lx + x``; vertical edge ``(x,y)->(x,y+1)`` has ``Lx*Ly + y*Lx + x``."""

    Lx: int
    Ly: int

    def __post_init__(self):
        if self.Lx < 2 or self.Ly < 2:
            raise DomainError("toric lattice needs Lx, Ly >= 2")

    @property
    def n_edges(self) -> int:
        return 2 * self.Lx * self.Ly

    def h(self, x, y) -> int:
        return (y % self.Ly) * self.Lx + (x % self.Lx)

    def v(self, x, y) -> int:
        return self.Lx * self.Ly + (y % self.Ly) * self.Lx + (x % self.Lx)

    def sites(self):
        return [(x, y) for y in range(self.Ly) for x in range(self.Lx)]

    @property
    def stars(self) -> list[tuple[int, ...]]:
        return [(self.h(x, y), self.h(x - 1, y), self.v(x, y), self.v(x, y - 1)) for x, y in self.sites()]

    @property
    def plaquettes(self) -> list[tuple[int, ...]]:
        return [(self.h(x, y), self.h(x, y + 1), self.v(x, y), self.v(x + 1, y)) for x, y in self.sites()]

    def incidence(self, faces) -> np.ndarray:
        A = np.zeros((len(faces), self.n_edges), dtype=np.int64)
        for i, f in enumerate(faces):
            A[i, list(f)] = 1
        return A


def _edge_mask(edges, n: int) -> int:
    return sum(1 << (n - 1 - e) for e in edges)


def pauli_mask_apply(xmask: int, zmask: int, n: int, V: np.ndarray) -> np.ndarray:
    """``Z^z X^x`` on qubit strings (qubit 0 most significant)."""
    c = np.arange(1 << n, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(c & zmask).astype(np.int64) & 1)
    return sign[:, None] * V[c ^ xmask]


class ToricResult(NamedTuple):
    lattice: ToricLattice
    D_code: sp.csr_matrix
    P: CodeProjection
    distance: float


def toric_stabilizers(lat: ToricLattice) -> list[tuple[int, int]]:
    """(xmask, zmask) for every star (X type) and plaquette (Z type)."""
    n = lat.n_edges
    return [(_edge_mask(s, n), 0) for s in lat.stars] + [(0, _edge_mask(p, n)) for p in lat.plaquettes]


def toric_dirac(lat: ToricLattice) -> sp.csr_matrix:
    """Sparse ``sum_v (I - A_v) + sum_f (I - B_f)``; every stabilizer is a
    signed permutation of the computational basis."""
    n = lat.n_edges
    N = 1 << n
    c = np.arange(N, dtype=np.int64)
    D = sp.csr_matrix((N, N))
    for xm, zm in toric_stabilizers(lat):
        sign = 1 - 2 * (np.bitwise_count(c & zm).astype(np.int64) & 1)
        # (S v)[c] = sign[c] v[c ^ xm]
        S = sp.csr_matrix((sign.astype(float), (c, c ^ xm)), shape=(N, N))
        D = D + sp.identity(N, format="csr") - S
    return D


def toric_code_projection(lat: ToricLattice, seed: int = 0) -> CodeProjection:
    """Code space by stabilizer averaging applied to random vectors."""
    n = lat.n_edges
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(1 << n, 8)) + 1j * rng.normal(size=(1 << n, 8))
    for xm, zm in toric_stabilizers(lat):
        V = 0.5 * (V + pauli_mask_apply(xm, zm, n, V))
    P = CodeProjection.from_vectors(V, tol=1e-8)
    return P


def _non_scalar(P: CodeProjection, UV: np.ndarray, tol: float = SCALAR_RTOL) -> bool:
    B = P.basis.conj().T @ UV
    lam = np.trace(B) / P.rank
    return operator_norm(B - lam * np.eye(P.rank)) > tol


def min_weight_nonscalar_pauli(P: CodeProjection, n: int, max_weight: int | None = None) -> int | float:
    """Breadth-first search by weight for a Pauli operator that is not scalar
    on the code; ``inf`` if none up to ``max_weight``."""
    max_weight = n if max_weight is None else max_weight
    for w in range(1, max_weight + 1):
        for support in itertools.combinations(range(n), w):
            for kinds in itertools.product((1, 2, 3), repeat=w):
                xm = sum(1 << (n - 1 - e) for e, k in zip(support, kinds) if k & 1)
                zm = sum(1 << (n - 1 - e) for e, k in zip(support, kinds) if k & 2)
                if _non_scalar(P, pauli_mask_apply(xm, zm, n, P.basis)):
                    return w
    return float("inf")


def toric_code_z2(Lx: int, Ly: int) -> ToricResult:
    lat = ToricLattice(Lx, Ly)
    if lat.n_edges > MAX_TORIC_EDGES:
        raise DomainError(f"{lat.n_edges} edges exceed the limit of {MAX_TORIC_EDGES}")
    P = toric_code_projection(lat)
    D = toric_dirac(lat)
    if np.linalg.norm(D @ P.basis) > 1e-8:
        raise NumericalError("averaged code vectors are not annihilated by D_code")
    if lat.n_edges <= DENSE_CROSSCHECK_EDGES:
        Pk = kernel_projection(D.toarray())
        if Pk.rank != P.rank or np.linalg.norm(Pk.matrix - P.matrix) > 1e-8:
            raise NumericalError("stabilizer averaging and dense kernel disagree")
    if P.rank != 1 << (lat.n_edges - gf2_rank(toric_checks(lat))):
        raise NumericalError("averaged code space disagrees with the stabilizer count")
    if P.rank != 4:
        raise NumericalError(f"toric code space has dimension {P.rank}, expected 4")
    d = min_weight_nonscalar_pauli(P, lat.n_edges)
    return ToricResult(lat, D, P, d)


def closed_z_loops(lat: ToricLattice) -> list[tuple[tuple[int, ...], bool]]:
    """All nonempty edge sets with even degree at every vertex, each paired with
    whether it bounds a set of plaquettes (contractible). Exhaustive, so only
    for small lattices."""
    n = lat.n_edges
    if n > MAX_TORIC_EDGES:
        raise DomainError("loop enumeration limited to small lattices")
    S = lat.incidence(lat.stars)
    B = lat.incidence(lat.plaquettes)
    rb = gf2_rank(B)
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        c = np.array(bits, dtype=np.int64)
        if not c.any() or np.any((S @ c) % 2):
            continue
        contractible = gf2_rank(np.vstack([B, c])) == rb
        out.append((tuple(np.flatnonzero(c).tolist()), contractible))
    return out


def z_loop_apply(lat: ToricLattice, edges, V: np.ndarray) -> np.ndarray:
    return pauli_mask_apply(0, _edge_mask(edges, lat.n_edges), lat.n_edges, V)


# --- formal reconstruction ------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionTriple:
    """``D = 0`` on the code and ``n`` on level ``n`` of the complement.

    The complement of the code fills the requested level dimensions in order;
    the last level absorbs any remainder. When the levels ask for more room
    than the complement has, ``ancilla_dim`` extra dimensions are appended and
    original operators act on them as zero (see :meth:`embed`).
    """

    P: CodeProjection
    tower: tuple
    dirac: np.ndarray = field(repr=False)
    ancilla_dim: int = 0

    @property
    def dim(self) -> int:
        return self.dirac.shape[0]

    def embed(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        if self.ancilla_dim == 0:
            return X
        out = np.zeros((self.dim, self.dim), dtype=np.result_type(X, complex))
        out[: X.shape[0], : X.shape[1]] = X
        return out

    def code_projection(self) -> CodeProjection:
        B = np.zeros((self.dim, self.P.rank), dtype=complex)
        B[: self.P.dim] = self.P.basis
        return CodeProjection(B)


def formal_reconstruction(P: CodeProjection, level_dims: Sequence[int], n_max: int) -> ReconstructionTriple:
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    dims = [int(d) for d in level_dims][:n_max]
    if not dims or any(d <= 0 for d in dims):
        raise DomainError("level dimensions must be positive")
    while len(dims) < n_max:
        dims.append(dims[-1])
    Q = P.complement().basis
    free = Q.shape[1]
    ancilla = max(0, sum(dims) - free)
    if free > sum(dims):
        dims[-1] += free - sum(dims)
    N = P.dim + ancilla
    cols = np.zeros((N, free + ancilla), dtype=complex)
    cols[: P.dim, :free] = Q
    cols[P.dim:, free:] = np.eye(ancilla)
    eig = np.concatenate([np.full(d, float(k + 1)) for k, d in enumerate(dims)])
    D = (cols * eig) @ cols.conj().T
    D = 0.5 * (D + D.conj().T)
    tower = tuple((k + 1, d) for k, d in enumerate(dims))
    return ReconstructionTriple(P, tower, D, ancilla)


# --- exact stabilizer spectra -------------------------------------------------------


def stabilizer_spectrum(n: int, checks) -> dict[int, int]:
    """Spectrum of ``sum_i (1 - S_i)`` for commuting Pauli checks given as
    symplectic rows ``(p|q)``, possibly dependent.

    Each reachable syndrome ``s`` (a vector of check outcomes) labels an
    eigenspace of dimension ``2^(n - rank)`` with eigenvalue ``2 wt(s)``; the
    reachable syndromes are the F2 column space of the check matrix under the
    symplectic pairing. Returns ``{eigenvalue: multiplicity}``.
    """
    H = np.array(checks, dtype=np.int64) % 2
    m = H.shape[0]
    # syndrome of a Pauli e = (p|q): <h_i, e> = h_p . q + h_q . p
    S = np.hstack([H[:, n:], H[:, :n]])
    r = gf2_rank(S.T) if m else 0
    basis = []
    for col in S.T:
        if gf2_rank(basis + [col]) > len(basis):
            basis.append(col)
        if len(basis) == r:
            break
    synd = gf2_span(basis) if basis else np.zeros((1, m), dtype=np.int64)
    mult = 1 << (n - r)
    out: dict[int, int] = {}
    for s in synd:
        ev = 2 * int(s.sum())
        out[ev] = out.get(ev, 0) + mult
    return dict(sorted(out.items()))


def toric_checks(lat: ToricLattice) -> np.ndarray:
    St, Pl = lat.incidence(lat.stars), lat.incidence(lat.plaquettes)
    return np.vstack([np.hstack([St, np.zeros_like(St)]), np.hstack([np.zeros_like(Pl), Pl])])
