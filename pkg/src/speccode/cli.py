"""``speccode`` command-line front end.

    speccode code|threshold|fluctuation|bt|distance --config FILE --out DIR [--seed N]

Exit codes: 0 success, 2 configuration error, 3 domain rejection,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
from pydantic import TypeAdapter, ValidationError

from . import schemas
from .errors import DomainError, NumericalError

log = logging.getLogger("speccode")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# --- output helpers ---------------------------------------------------------------


def fmt(v) -> str:
    """17 significant digits, '.' decimal point, independent of locale."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return v


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="ascii")


# --- shared builders --------------------------------------------------------------


def _qubit_code(spec, rng):
    """Code projection on (C^2)^n, or a seeded random code in C^dim."""
    from .code_zoo import classical_code, stabilizer_code
    from .operator_core import CodeProjection

    if spec.kind == "stabilizer":
        return stabilizer_code(spec.n, spec.generators).P
    if spec.kind == "classical":
        return classical_code(spec.n, spec.generators).P
    if spec.rank > spec.dim:
        raise DomainError(f"rank {spec.rank} exceeds dimension {spec.dim}")
    A = rng.normal(size=(spec.dim, spec.rank)) + 1j * rng.normal(size=(spec.dim, spec.rank))
    return CodeProjection.from_vectors(A)


def pauli_matrix(s: str) -> np.ndarray:
    from .code_zoo import hermitian_phase, parse_pauli
    from .crossed_product import PauliRepresentation

    u, sign = parse_pauli(s)
    n = len(u) // 2
    return sign * hermitian_phase(u) * PauliRepresentation(n).matrix(u)


def _noise(spec, dim: int, rng):
    from .decode import NoiseFamily

    if spec.kind == "pauli":
        Fs = [pauli_matrix(s) for s in spec.errors]
        if any(F.shape[0] != dim for F in Fs):
            raise DomainError("Pauli error length does not match the code's qubit count")
        return NoiseFamily(tuple(Fs), "pauli")
    Fs = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(spec.count)]
    L = sum(F.conj().T @ F for F in Fs)
    s = np.sqrt(np.linalg.norm(L, 2))
    return NoiseFamily(tuple(F / s for F in Fs), "random")


def _sphere_function(spec):
    from .toeplitz import SphereFunction

    if isinstance(spec, str):
        if spec in ("x", "y", "z"):
            return SphereFunction.coordinate(spec)
        if spec == "one":
            return SphereFunction.constant(1.0)
        if spec == "bump_north":
            return SphereFunction.bump(np.pi / 6, np.pi / 6)
        return SphereFunction.bump(5 * np.pi / 6, np.pi / 6)
    terms: dict = {}
    for a, b, c, v in spec.terms:
        terms[(a, b, c)] = terms.get((a, b, c), 0) + v
    return SphereFunction.polynomial(terms, "poly")


# --- commands ---------------------------------------------------------------------


def cmd_code(cfg, out: Path) -> dict:
    from .code_zoo import (
        classical_code,
        gkp_discrete,
        stabilizer_spectrum,
        toric_checks,
        toric_code_z2,
        stabilizer_code,
    )
    from .crossed_product import AbelianGroup, Cocycle, PauliRepresentation, RegularRepresentation, compute_W_set
    from .operator_core import eigh

    t0 = time.perf_counter()
    tol = cfg.tol.scalar
    W = None
    if cfg.kind == "classical":
        res = classical_code(cfg.n, cfg.generators)
        g = res.code.group
        spec, _ = eigh(res.code.dirac())
        spectrum = spec.as_dict()
        W = compute_W_set(res.P, g, RegularRepresentation(g), tol)
        P, d = res.P, res.distance
    elif cfg.kind == "stabilizer":
        res = stabilizer_code(cfg.n, cfg.generators)
        spec, _ = eigh(res.D_c)
        spectrum = spec.as_dict()
        W = compute_W_set(res.P, res.code.group, PauliRepresentation(cfg.n), tol)
        P, d = res.P, res.distance
        spectrum["phase_fixes"] = list(res.code.phase_fixes)
    elif cfg.kind == "gkp":
        res = gkp_discrete(cfg.M)
        spec, _ = eigh(res.D_c)
        spectrum = spec.as_dict()
        g = AbelianGroup.torus(cfg.M)
        W = compute_W_set(res.P, g, RegularRepresentation(g, Cocycle(g, "one_sided")), tol)
        P, d = res.P, res.distance
    else:
        res = toric_code_z2(cfg.Lx, cfg.Ly)
        sp = stabilizer_spectrum(res.lattice.n_edges, toric_checks(res.lattice))
        spectrum = {"values": [float(k) for k in sp], "multiplicities": list(sp.values()),
                    "gap": float(min(k for k in sp if k > 0))}
        P, d = res.P, res.distance
    report = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "ker_dim": P.rank,
        "spectrum": spectrum,
        "W_size": None if W is None else len(W),
        "distance": d,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }
    write_json(out / "report.json", report)
    return report


THRESHOLD_COLUMNS = ("theta", "T", "T_expansion", "P_leak", "Fe")


def cmd_threshold(cfg, out: Path) -> dict:
    from .decode import (
        code_state,
        decoded_channel,
        entanglement_fidelity,
        expansion_first_order,
        leakage_probability,
        threshold_estimate,
        verify_poor_decoder_expansion,
    )

    rng = np.random.default_rng(cfg.seed)
    P = _qubit_code(cfg.code, rng)
    noise = _noise(cfg.noise, P.dim, rng)
    if max(cfg.thetas) > noise.theta_max:
        raise DomainError(f"theta grid exceeds the family's range {noise.theta_max:.6g}")
    sigma = code_state(P)
    rows = []
    for th in cfg.thetas:
        N = decoded_channel(sigma, P, noise, th, cfg.decoder, cfg.factorization)
        Fe = entanglement_fidelity(sigma, N)
        rows.append({
            "theta": th,
            "T": 1.0 - Fe,
            "T_expansion": expansion_first_order(sigma, P, noise, th),
            "P_leak": leakage_probability(P, noise.channel(th), sigma),
            "Fe": Fe,
        })
    write_csv(out / "sweep.csv", THRESHOLD_COLUMNS, rows)
    rep = threshold_estimate(cfg.thetas, [r["T"] for r in rows], cfg.theta0)
    fit = rep.as_dict()
    fit["seed"] = cfg.seed
    fit["decoder"] = cfg.decoder
    small = [t for t in cfg.thetas if t <= 1e-2]
    if cfg.decoder == "poor" and len(small) >= 2:
        ex = verify_poor_decoder_expansion(P, noise, small)
        fit["expansion"] = {"slope": ex.slope, "exact": ex.exact, "certified": ex.certified}
    else:
        fit["expansion"] = None
    write_json(out / "fit.json", fit)
    return fit


def cmd_fluctuation(cfg, out: Path) -> dict:
    from .code_zoo import stabilizer_code
    from .fluctuation import SWEEP_COLUMNS, leakage_gap_sweep

    res = stabilizer_code(cfg.code.n, cfg.code.generators)
    E = pauli_matrix(cfg.error)
    if E.shape != res.D_c.shape:
        raise DomainError("error length does not match the code")
    sw = leakage_gap_sweep(res.D_c, res.P, E, cfg.theta, cfg.lambdas, cfg.mode)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, sw.rows)
    summary = sw.summary()
    summary["seed"] = cfg.seed
    write_json(out / "summary.json", summary)
    return summary


def cmd_bt(cfg, out: Path) -> dict:
    from .toeplitz import DEFECT_COLUMNS, ToeplitzQuantizer, trace_law_constant, verify_axioms

    f, g = _sphere_function(cfg.f), _sphere_function(cfg.g)
    kl = (_sphere_function(cfg.kl_pair[0]), _sphere_function(cfg.kl_pair[1]))
    table = verify_axioms(cfg.p_list, f, g, cfg.hbar_scale, kl, cfg.q_extra)
    write_csv(out / "defects.csv", DEFECT_COLUMNS, table.rows)
    pmax = cfg.p_list[-1]
    Q = ToeplitzQuantizer(pmax, pmax + cfg.q_extra, table.hbar_scale / pmax)
    summary = {"seed": cfg.seed, "hbar_scale": table.hbar_scale, "slopes": table.slopes,
               "trace_law_constant": trace_law_constant(Q), "gram_defect": Q.gram_defect}
    write_json(out / "summary.json", summary)
    return summary


DISTANCE_COLUMNS = ("x", "y", "wt", "d_closed", "d_general")


def cmd_distance(cfg, out: Path) -> dict:
    from .crossed_product import AbelianGroup, Cocycle, WeightFunction, assemble_triple
    from .geometry import ConnesSolver, connes_distance_closed

    try:
        g = AbelianGroup(cfg.group.kind, cfg.group.n)
        w = WeightFunction(g, cfg.weight) if cfg.weight else WeightFunction.default(g)
    except DomainError as e:
        raise ConfigError(str(e)) from e
    if g.order > 64:
        raise DomainError(f"group of order {g.order} is too large for the pairwise triple")
    t = assemble_triple(g, w, Cocycle.default(g), np.zeros((g.order, g.order)))
    if cfg.pairs is None:
        pairs = list(itertools.combinations(g.element_tuples, 2))
    else:
        pairs = [(g.normalize(a), g.normalize(b)) for a, b in cfg.pairs]
    solver = ConnesSolver(t.dense()) if cfg.general else None
    sep = "" if g.modulus <= 10 else ":"
    label = lambda u: sep.join(str(c) for c in u)
    rows, flagged = [], 0
    for x, y in pairs:
        dg = float("nan")
        if solver is not None:
            r = solver.distance(x, y)
            dg, flagged = r.value, flagged + int(r.lower_bound_only)
        rows.append({"x": label(x), "y": label(y), "wt": w.metric(x, y),
                     "d_closed": connes_distance_closed(t.metric, x, y), "d_general": dg})
    write_csv(out / "distances.csv", DISTANCE_COLUMNS, rows)
    summary = {"seed": cfg.seed, "pairs": len(rows), "lower_bound_flags": flagged,
               "max_closed_vs_weight": max((abs(r["d_closed"] - r["wt"]) for r in rows), default=0.0)}
    write_json(out / "summary.json", summary)
    return summary


COMMANDS = {
    "code": (schemas.CodeConfig, cmd_code),
    "threshold": (schemas.ThresholdConfig, cmd_threshold),
    "fluctuation": (schemas.FluctuationConfig, cmd_fluctuation),
    "bt": (schemas.BTConfig, cmd_bt),
    "distance": (schemas.DistanceConfig, cmd_distance),
}


def load_config(command: str, path: Path, seed: int | None):
    model, _ = COMMANDS[command]
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if seed is not None:
        doc["seed"] = seed
    try:
        return TypeAdapter(model).validate_python(doc)
    except ValidationError as e:
        msgs = ["/".join(str(p) for p in err["loc"]) + ": " + err["msg"] for err in e.errors()]
        raise ConfigError("; ".join(msgs)) from e


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="speccode", description="Spectral-triple code experiments.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--seed", type=int, default=None, help="overrides the config's seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _, fn = COMMANDS[args.command]
    try:
        cfg = load_config(args.command, args.config, args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        result = fn(cfg, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    log.info("%s finished: %s", args.command, result)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
