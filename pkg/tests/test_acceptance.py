"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict that is printed in the
terminal summary (and to stdout with ``-s``).
"""

import filecmp
import json
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from speccode.code_zoo import classical_code, gkp_discrete, stabilizer_code, toric_code_z2
from speccode.crossed_product import AbelianGroup, Cocycle, WeightFunction, assemble_triple
from speccode.decode import (
    NoiseFamily,
    code_state,
    decoded_channel,
    entanglement_fidelity,
    gap_commutator_bounds,
    threshold_estimate,
    verify_poor_decoder_expansion,
)
from speccode.fluctuation import PerturbationSpec, k_lambda, perturb_code_preserving
from speccode.geometry import ConnesSolver, connes_distance_closed, kl_check
from speccode.operator_core import CodeProjection, eigh, random_unitary
from speccode.toeplitz import (
    SphereFunction,
    ToeplitzQuantizer,
    kl_approx_check,
    trace_law_constant,
    verify_axioms,
)

from _oracles import (
    classical_min_weight,
    code_dimension,
    gkp_distance_bruteforce,
    pauli_matrix,
    stabilizer_distance_bruteforce,
    toric_generators,
)

pytestmark = pytest.mark.acceptance

FIVE = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
STEANE = ["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"]
HAMMING = [[1, 0, 0, 0, 0, 1, 1], [0, 1, 0, 0, 1, 0, 1], [0, 0, 1, 0, 1, 1, 0], [0, 0, 0, 1, 1, 1, 1]]


def verdict(log, num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {num} {name}: {detail}"
    log.append(line)
    print(line)
    assert ok, line


def test_01_three_qubit_demo(acceptance_log):
    t0 = time.perf_counter()
    res = stabilizer_code(3, ["ZZI", "IZZ"])
    rep, _ = eigh(res.D_c)
    spec_ok = (np.allclose(rep.eigenvalues, [0, 2, 4], atol=1e-10)
               and list(rep.multiplicities) == [2, 4, 2] and abs(rep.gap - 2) <= 1e-10)
    spec = PerturbationSpec.complement(res.P)
    errs = [abs(perturb_code_preserving(res.D_c, spec, lam)[1].gap - (2 + lam)) for lam in (0, 1, 2, 4, 8)]
    dt = time.perf_counter() - t0
    ok = spec_ok and max(errs) <= 1e-10 and dt < 1.0
    verdict(acceptance_log, 1, "three-qubit demo", ok,
            f"spectrum ok={spec_ok}, max |gap-(2+lam)|={max(errs):.1e}, {dt:.2f}s")


def test_02_code_distances(acceptance_log):
    t0 = time.perf_counter()
    cases = [
        ("repetition", classical_code(3, [[1, 1, 1]]).distance, classical_min_weight([[1, 1, 1]])),
        ("hamming", classical_code(7, HAMMING).distance, classical_min_weight(HAMMING)),
        ("3-qubit", stabilizer_code(3, ["ZZI", "IZZ"]).distance, stabilizer_distance_bruteforce(3, ["ZZI", "IZZ"])),
        ("[[5,1,3]]", stabilizer_code(5, FIVE).distance, stabilizer_distance_bruteforce(5, FIVE)),
        ("steane", stabilizer_code(7, STEANE).distance, stabilizer_distance_bruteforce(7, STEANE)),
        ("gkp4", gkp_discrete(4).distance, gkp_distance_bruteforce(4)),
        ("gkp8", gkp_discrete(8).distance, gkp_distance_bruteforce(8)),
    ]
    tor = toric_code_z2(2, 2)
    cases.append(("toric2x2", tor.distance, stabilizer_distance_bruteforce(8, toric_generators(2))))
    expected = [3, 3, 1, 3, 3, 1, 1, 2]
    dt = time.perf_counter() - t0
    agree = all(int(a) == b == e for (_, a, b), e in zip(cases, expected))
    kdim = tor.P.rank == code_dimension(8, toric_generators(2)) == 4
    ok = agree and kdim and dt < 60
    verdict(acceptance_log, 2, "code distances", ok,
            ", ".join(f"{n}={int(a)}/{b}" for n, a, b in cases) + f", toric ker={tor.P.rank}, {dt:.1f}s")


def test_03_connes_distance(acceptance_log):
    t0 = time.perf_counter()
    g = AbelianGroup.bits(3)
    w = WeightFunction.default(g)
    tr = assemble_triple(g, w, Cocycle.default(g), np.zeros((8, 8)))
    solver = ConnesSolver(tr.dense())
    closed_err = gen_err = 0.0
    n = 0
    for i, x in enumerate(g.element_tuples):
        for y in g.element_tuples[i + 1:]:
            n += 1
            closed_err = max(closed_err, abs(connes_distance_closed(tr.metric, x, y) - w.metric(x, y)))
            gen_err = max(gen_err, abs(solver.distance(x, y).value - w.metric(x, y)))
    dt = time.perf_counter() - t0
    ok = n == 28 and closed_err == 0 and gen_err <= 1e-4 and dt < 30
    verdict(acceptance_log, 3, "Connes distance", ok,
            f"{n} pairs, closed err={closed_err:g}, general err={gen_err:.1e}, {dt:.1f}s")


def test_04_geometric_kl(acceptance_log):
    t0 = time.perf_counter()
    res = stabilizer_code(5, FIVE)
    errs = [pauli_matrix("I" * i + c + "I" * (4 - i)) for i in range(5) for c in "XYZ"]
    ok_kl, lam, worst = kl_check(res.P, errs, tol=1e-9)
    dt = time.perf_counter() - t0
    ok = ok_kl and lam.shape == (15, 15) and dt < 5
    verdict(acceptance_log, 4, "geometric KL", ok, f"15x15 pairs, worst defect={worst:.1e}, {dt:.2f}s")


def test_05_poor_decoder_expansion(acceptance_log):
    t0 = time.perf_counter()
    thetas = np.geomspace(1e-4, 1e-2, 7)
    res = stabilizer_code(3, ["ZZI", "IZZ"])
    base = verify_poor_decoder_expansion(res.P, NoiseFamily((pauli_matrix("XII"),)), thetas)
    r = np.random.default_rng(2024)
    slopes = []
    for _ in range(10):
        P = CodeProjection.from_vectors(r.normal(size=(8, 2)) + 1j * r.normal(size=(8, 2)))
        Fs = [r.normal(size=(8, 8)) + 1j * r.normal(size=(8, 8)) for _ in range(3)]
        s = np.sqrt(np.linalg.norm(sum(F.conj().T @ F for F in Fs), 2))
        slopes.append(verify_poor_decoder_expansion(P, NoiseFamily(tuple(F / s for F in Fs)), thetas).slope)
    dt = time.perf_counter() - t0
    ok = base.slope >= 1.9 and min(slopes) >= 1.9 and dt < 30
    base_txt = "exact (remainder at rounding)" if base.exact else f"{base.slope:.3f}"
    verdict(acceptance_log, 5, "poor-decoder expansion", ok,
            f"X1 family slope {base_txt}, random min slope={min(slopes):.3f}, {dt:.1f}s")


def test_06_exact_petz(acceptance_log):
    res = stabilizer_code(3, ["ZZI", "IZZ"])
    fam = NoiseFamily(tuple(pauli_matrix(s) for s in ("XII", "IXI", "IIX")))
    sigma = code_state(res.P)
    fid = {th: entanglement_fidelity(sigma, decoded_channel(sigma, res.P, fam, th, "petz"))
           for th in (0.01, 0.05, 0.1)}
    grid = [0.01, 0.03, 0.05, 0.1]
    T = [1 - entanglement_fidelity(sigma, decoded_channel(sigma, res.P, fam, th, "petz")) for th in grid]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = threshold_estimate(grid, T)
    worst = max(abs(f - 1) for f in fid.values())
    ok = worst <= 1e-8 and fit.k <= 1e-3
    verdict(acceptance_log, 6, "exact Petz recovery", ok, f"max |F_e-1|={worst:.1e}, fitted k={fit.k:.1e}")


def test_07_threshold_formula(acceptance_log):
    th = np.linspace(0.01, 0.1, 10)
    rep = threshold_estimate(th, 0.5 * th + 2 * th ** 2, theta0=0.2)
    err = max(abs(rep.k - 0.5), abs(rep.gamma - 2), abs(rep.theta_th - 0.25))
    ok = err <= 1e-6 and rep.converged and rep.monotone
    verdict(acceptance_log, 7, "threshold formula", ok,
            f"k={rep.k:.8f}, gamma={rep.gamma:.8f}, theta_th={rep.theta_th:.8f}, "
            f"converged={rep.converged}, monotone={rep.monotone}")


def test_08_gap_bound_chain(acceptance_log):
    r = np.random.default_rng(8)
    holds = finite = 0
    for _ in range(100):
        dim = int(r.integers(3, 9))
        k = int(r.integers(1, dim))
        U = random_unitary(dim, r)
        ev = np.concatenate([np.zeros(k), r.uniform(0.5, 3.0, dim - k) * r.choice([-1, 1], dim - k)])
        D = (U * ev) @ U.conj().T
        E = r.normal(size=(dim, dim)) + 1j * r.normal(size=(dim, dim))
        gb = gap_commutator_bounds(None, D, [E])[0]
        holds += gb.leak_norm <= gb.comm_P + 1e-12
        finite += bool(np.isfinite(gb.C_emp))
    ok = holds == 100 and finite == 100
    verdict(acceptance_log, 8, "gap-bound chain", ok, f"chain holds {holds}/100, C_emp finite {finite}/100")


def test_09_k_lambda(acceptance_log):
    ks = [k_lambda([0.1, 0.2], 1, 2, 1, lam) for lam in (0, 1, 2, 4, 8, 16)]
    dec = all(a > b for a, b in zip(ks, ks[1:]))
    lim = abs(k_lambda([0.1, 0.2], 1, 2, 1, 1e6) - 0.05)
    ok = dec and lim <= 1e-6
    verdict(acceptance_log, 9, "k(lambda) monotonicity", ok, f"strictly decreasing={dec}, |k(1e6)-0.05|={lim:.1e}")


def test_10_berezin_toeplitz(acceptance_log):
    t0 = time.perf_counter()
    ps = [8, 16, 32, 64]
    z = SphereFunction.coordinate("z")
    tab = verify_axioms(ps, z, z)
    s = tab.hbar_scale
    # [T(z), T(z)] vanishes identically, so the commutator rate is read off (x, y)
    tab_xy = verify_axioms(ps, SphereFunction.coordinate("x"), SphereFunction.coordinate("y"), hbar_scale=s)
    gram = max(ToeplitzQuantizer(p, p + 8, s / p).gram_defect for p in ps)
    sl1, sl2 = tab.slopes["delta1"], tab_xy.slopes["delta2"]
    d4 = tab.column("delta4")
    tl = trace_law_constant(ToeplitzQuantizer(64, 72, s / 64))
    dt = time.perf_counter() - t0
    ok = (gram <= 1e-8 and -1.35 <= sl1 <= -0.65 and -1.35 <= sl2 <= -0.65
          and d4[-1] <= 0.15 and np.all(np.diff(d4) < 0) and abs(tl - 1) <= 0.02 and dt < 120)
    verdict(acceptance_log, 10, "Berezin-Toeplitz axioms", ok,
            f"gram={gram:.1e}, slope d1={sl1:.3f}, slope d2(x,y)={sl2:.3f}, d4(64)={d4[-1]:.4f}, "
            f"trace law={tl:.4f}, s={s:.4f}, {dt:.1f}s")


def test_11_approximate_kl(acceptance_log):
    north = SphereFunction.bump(np.pi / 6, np.pi / 6)
    south = SphereFunction.bump(5 * np.pi / 6, np.pi / 6)
    v = [kl_approx_check(ToeplitzQuantizer(p), north, south)[1] for p in (8, 16, 32)]
    ratios = [b / a for a, b in zip(v, v[1:])]
    ok = all(b <= a for a, b in zip(v, v[1:])) and max(ratios) <= 0.65
    verdict(acceptance_log, 11, "approximate KL", ok,
            "defects " + ", ".join(f"{x:.2e}" for x in v) + f", max ratio={max(ratios):.2e}")


def test_12_cli_determinism(acceptance_log, tmp_path):
    configs = {
        "threshold": {"code": {"kind": "random", "dim": 8, "rank": 2}, "noise": {"kind": "random", "count": 3},
                      "thetas": [1e-4, 1e-3, 3e-3, 1e-2], "decoder": "poor"},
        "distance": {"group": {"kind": "bits", "n": 3}},
        "fluctuation": {"code": {"kind": "stabilizer", "n": 3, "generators": ["ZZI", "IZZ"]},
                        "error": "XII", "theta": 0.01, "lambdas": [0, 1, 2, 4]},
        "bt": {"p_list": [8, 16, 32]},
    }
    same, total = 0, 0
    for cmd, cfg in configs.items():
        path = tmp_path / f"{cmd}.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for rep in range(2):
            out = tmp_path / f"{cmd}_{rep}"
            proc = subprocess.run([sys.executable, "-m", "speccode.cli", cmd, "--config", str(path),
                                   "--out", str(out), "--seed", "11"], capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append(out)
        for f in sorted(p.name for p in outs[0].glob("*.csv")):
            total += 1
            same += filecmp.cmp(outs[0] / f, outs[1] / f, shallow=False)
    ok = total == 4 and same == total
    verdict(acceptance_log, 12, "CLI determinism", ok, f"{same}/{total} CSV outputs byte-identical")
