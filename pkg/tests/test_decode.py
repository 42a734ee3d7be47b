import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speccode.code_zoo import stabilizer_code
from speccode.decode import (
    KrausChannel,
    NoiseFamily,
    code_state,
    conditional_expectation,
    decoded_channel,
    entanglement_fidelity,
    expansion_first_order,
    gap_commutator_bounds,
    identity_channel,
    leakage_probability,
    petz_recovery,
    poor_decoder,
    poor_decoder_channel,
    residual_error_T,
    threshold_estimate,
    verify_poor_decoder_expansion,
)
from speccode.errors import DomainError
from speccode.operator_core import CodeProjection, random_hermitian

from _oracles import pauli_matrix


@pytest.fixture(scope="module")
def rep3():
    return stabilizer_code(3, ["ZZI", "IZZ"])


def bit_flips():
    return NoiseFamily(tuple(pauli_matrix(s) for s in ("XII", "IXI", "IIX")), "flip")


def test_noise_family_is_trace_preserving():
    fam = bit_flips()
    assert fam.theta_max == pytest.approx(1 / 3)
    assert fam.channel(0.2).is_trace_preserving()
    with pytest.raises(DomainError):
        fam.channel(0.5)


def test_channel_rejects_non_tp():
    ch = KrausChannel([np.eye(2) * 2])
    assert not ch.is_trace_preserving()


def test_leakage_equals_theta_for_single_flip(rep3):
    fam = NoiseFamily((pauli_matrix("XII"),))
    sigma = code_state(rep3.P)
    assert leakage_probability(rep3.P, fam.channel(0.1), sigma) == pytest.approx(0.1, abs=1e-14)


def test_poor_decoder_channel_matches_formula(rng, rep3):
    P = rep3.P
    X = random_hermitian(8, rng)
    X = X @ X
    X /= np.trace(X)
    assert np.allclose(poor_decoder_channel(P)(X), poor_decoder(P, X))
    assert poor_decoder_channel(P).is_trace_preserving()


def test_poor_decoder_single_flip_is_exactly_three_quarters(rep3):
    fam = NoiseFamily((pauli_matrix("XII"),))
    sigma = code_state(rep3.P)
    for th in (1e-4, 1e-3, 1e-2):
        # P X1 P = 0, so T = (1 - 1/d^2) * theta with d = 2
        assert residual_error_T(sigma, rep3.P, fam, th, "poor") == pytest.approx(0.75 * th, rel=1e-12)
        assert expansion_first_order(sigma, rep3.P, fam, th) == pytest.approx(0.75 * th, rel=1e-12)
    rep = verify_poor_decoder_expansion(rep3.P, fam, [1e-4, 1e-3, 1e-2])
    assert rep.exact and rep.certified


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_poor_decoder_remainder_is_second_order(seed):
    r = np.random.default_rng(seed)
    V = r.normal(size=(8, 2)) + 1j * r.normal(size=(8, 2))
    P = CodeProjection.from_vectors(V)
    Fs = [r.normal(size=(8, 8)) + 1j * r.normal(size=(8, 8)) for _ in range(3)]
    s = np.sqrt(np.linalg.norm(sum(F.conj().T @ F for F in Fs), 2))
    fam = NoiseFamily(tuple(F / s for F in Fs))
    rep = verify_poor_decoder_expansion(P, fam, np.geomspace(1e-4, 1e-2, 6))
    assert rep.slope >= 1.9


def test_petz_recovers_correctable_noise(rep3):
    sigma = code_state(rep3.P)
    for th in (0.01, 0.05, 0.1):
        N = decoded_channel(sigma, rep3.P, bit_flips(), th, "petz")
        assert entanglement_fidelity(sigma, N) == pytest.approx(1.0, abs=1e-10)


def test_petz_is_a_channel_on_support(rep3):
    E = bit_flips().channel(0.05)
    R = petz_recovery(code_state(rep3.P), E)
    S = R.support
    defect = sum(K.conj().T @ K for K in R.kraus) - S
    assert np.abs(defect).max() < 1e-10
    assert R.support_dim == 8


def test_petz_expectation_needs_factorization(rep3):
    sigma = code_state(rep3.P)
    with pytest.raises(DomainError, match="factorization"):
        decoded_channel(sigma, rep3.P, bit_flips(), 0.01, "petz_expectation")
    N = decoded_channel(sigma, rep3.P, bit_flips(), 0.01, "petz_expectation", (2, 4))
    assert N.is_trace_preserving()


def test_conditional_expectation():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(conditional_expectation(np.kron(A, np.eye(3)), 2, 3), A)
    with pytest.raises(DomainError):
        conditional_expectation(np.eye(6), 4, 2)


def test_identity_channel_fidelity(rep3):
    assert entanglement_fidelity(code_state(rep3.P), identity_channel(8)) == pytest.approx(1.0)


def test_threshold_recovers_synthetic_quadratic():
    th = np.linspace(0.01, 0.1, 10)
    rep = threshold_estimate(th, 0.5 * th + 2 * th ** 2, theta0=0.2)
    assert rep.k == pytest.approx(0.5, abs=1e-9) and rep.gamma == pytest.approx(2, abs=1e-9)
    assert rep.theta_th == pytest.approx(0.25, abs=1e-9)
    assert rep.converged and rep.monotone


def test_threshold_above_threshold_diverges_from_zero():
    th = np.linspace(0.01, 0.1, 6)
    rep = threshold_estimate(th, 0.5 * th + 2 * th ** 2, theta0=0.3)
    assert not rep.converged


def test_threshold_rejects_short_grid():
    with pytest.raises(DomainError):
        threshold_estimate([0.01], [0.001])
    with pytest.raises(DomainError):
        threshold_estimate([0.01, 0.02, 0.03, 0.5], [0, 0, 0, 0])


def test_threshold_clip_warns():
    th = np.linspace(0.01, 0.1, 5)
    with pytest.warns(RuntimeWarning):
        rep = threshold_estimate(th, -0.1 * th + 3 * th ** 2)
    assert rep.k == 0.0 and rep.clipped


def test_gap_bounds_for_single_flip(rep3):
    gb = gap_commutator_bounds(rep3.P, rep3.D_c, [pauli_matrix("XII")])[0]
    assert (gb.leak_norm, gb.comm_P, gb.comm_D, gb.gap) == pytest.approx((1, 1, 2, 2))
    assert gb.C_emp == pytest.approx(1.0) and gb.chain_holds


def test_gap_bounds_commuting_error(rep3):
    gb = gap_commutator_bounds(None, rep3.D_c, [pauli_matrix("ZZI")])[0]
    assert gb.comm_D == pytest.approx(0, abs=1e-12) and gb.C_emp == 0.0


def test_gap_bounds_reject_gapless():
    with pytest.raises(DomainError):
        gap_commutator_bounds(None, np.zeros((2, 2)), [np.eye(2)])
