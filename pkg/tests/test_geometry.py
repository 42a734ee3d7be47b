import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speccode.code_zoo import stabilizer_code
from speccode.crossed_product import (
    AbelianGroup,
    Cocycle,
    CrossedProductElement,
    PauliRepresentation,
    WeightFunction,
    assemble_triple,
    represent,
    translation_monomials,
)
from speccode.errors import DomainError
from speccode.geometry import (
    ConnesSolver,
    DiscreteMetricTriple,
    FiniteSpectralTriple,
    code_distance_geometric,
    connes_distance_closed,
    connes_distance_general,
    diameter,
    kl_check,
    local_algebra_membership,
    support_of,
)
from speccode.operator_core import CodeProjection

from _oracles import connes_lp, in_local_algebra_by_states, pauli_matrix


def hamming_triple(n):
    pts = list(itertools.product((0, 1), repeat=n))
    return DiscreteMetricTriple.from_metric(pts, lambda x, y: sum(a != b for a, b in zip(x, y)))


def test_closed_form_equals_hamming_on_cube():
    t = hamming_triple(3)
    for x, y in itertools.combinations(t.points, 2):
        assert connes_distance_closed(t, x, y) == sum(a != b for a, b in zip(x, y))


def test_closed_form_takes_shortest_path():
    w = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    t = DiscreteMetricTriple(("a", "b", "c"), w)
    assert connes_distance_closed(t, "a", "c") == 2.0
    assert connes_lp(w, 0, 2) == pytest.approx(2.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 5), st.integers(0, 2**31 - 1))
def test_closed_form_matches_lp(n, seed):
    r = np.random.default_rng(seed)
    w = r.uniform(0.5, 3.0, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    t = DiscreteMetricTriple(tuple(range(n)), w)
    for i, j in itertools.combinations(range(n), 2):
        assert connes_distance_closed(t, i, j) == pytest.approx(connes_lp(w, i, j), abs=1e-9)


def test_general_solver_on_weighted_triangle():
    w = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    t = DiscreteMetricTriple(("a", "b", "c"), w).as_spectral_triple()
    solver = ConnesSolver(t)
    for (i, x), (j, y) in itertools.combinations(enumerate("abc"), 2):
        r = solver.distance(x, y)
        assert r.value == pytest.approx(connes_lp(w, i, j), abs=1e-5)
        assert not r.lower_bound_only


def test_general_solver_on_crossed_product_cube():
    g = AbelianGroup.bits(3)
    tr = assemble_triple(g, WeightFunction.default(g), Cocycle.default(g), np.zeros((8, 8)))
    r = connes_distance_general(tr.dense(), (0, 0, 0), (1, 1, 1))
    assert r.value == pytest.approx(3.0, abs=1e-4)
    assert r.value <= r.upper + 1e-7


def test_invisible_direction_gives_infinite_distance():
    D = np.diag([1.0, 1.0])
    t = FiniteSpectralTriple(D, {"p": np.diag([1.0, 0.0])}, {"x": np.array([1.0, 0]), "y": np.array([0, 1.0])})
    assert connes_distance_general(t, "x", "y").value == np.inf


def test_triple_validation():
    with pytest.raises(DomainError):
        DiscreteMetricTriple((0, 1), np.array([[0, 1], [2, 0]]))
    with pytest.raises(DomainError):
        DiscreteMetricTriple((0, 1), np.array([[0, 0], [0, 0]]))
    with pytest.raises(DomainError):
        FiniteSpectralTriple(np.eye(2), {}, {"x": np.array([1.0, 1.0])})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_local_membership_agrees_with_states(seed, ysize):
    r = np.random.default_rng(seed)
    g = AbelianGroup.symplectic(2)
    coc = Cocycle(g, "one_sided")
    pts = g.element_tuples
    Y = {pts[i] for i in r.choice(g.order, ysize, replace=False)}
    a = CrossedProductElement.function(g, coc, np.zeros(g.order))
    for _ in range(3):
        z = pts[r.integers(g.order)]
        u = pts[r.integers(g.order)]
        a = a + CrossedProductElement.monomial(g, coc, z, u, complex(r.normal(), r.normal()))
    if a.is_zero():
        return
    A = represent(a)
    assert local_algebra_membership(a, Y) == in_local_algebra_by_states(A, pts, Y)
    S = support_of(a)
    assert local_algebra_membership(a, S)


def test_support_of_zero_is_rejected():
    g = AbelianGroup.bits(2)
    a = CrossedProductElement.function(g, Cocycle.default(g), np.zeros(4))
    with pytest.raises(DomainError):
        support_of(a)


def test_diameter():
    m = lambda x, y: abs(x - y)
    assert diameter([3], m) == 0.0
    assert diameter([1, 4, 2], m) == 3


def test_kl_on_five_qubit_code():
    res = stabilizer_code(5, ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"])
    errs = [np.eye(32)] + [pauli_matrix("I" * i + c + "I" * (4 - i)) for i in range(5) for c in "XYZ"]
    ok, lam, worst = kl_check(res.P, errs)
    assert ok and worst < 1e-12
    assert np.allclose(lam, np.eye(16))


def test_kl_fails_for_detectable_only_error():
    res = stabilizer_code(3, ["ZZI", "IZZ"])
    ok, _, worst = kl_check(res.P, [np.eye(8), pauli_matrix("ZII")])
    assert not ok and worst == pytest.approx(1.0)


def test_geometric_distance_matches_w_route():
    for n, gens, d in [(3, ["ZZI", "IZZ"], 1), (5, ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"], 3)]:
        res = stabilizer_code(n, gens)
        g = AbelianGroup.symplectic(n)
        w = WeightFunction(g, "pauli")
        mons = translation_monomials(g, PauliRepresentation(n))
        assert code_distance_geometric(res.P, mons, w.metric) == d == res.distance


def test_geometric_distance_infinite_for_full_space():
    g = AbelianGroup.bits(2)
    P = CodeProjection(np.eye(4, dtype=complex)[:, :1])
    assert code_distance_geometric(P, [], lambda x, y: 0) == np.inf
