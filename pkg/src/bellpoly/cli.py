"""Command-line front end: ``bellpoly <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds, io, polytope, quantum, seesaw, symmetry
from .core import DimensionError, SizeError, TIInequality, format_fraction, to_fraction

log = logging.getLogger("bellpoly")

EXIT_OK, EXIT_GOLDEN, EXIT_RESOURCE, EXIT_INPUT = 0, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    seeds: int = 20
    starts: int = 50
    tol: float = 0.02
    out: Path = Path(".")
    mem_cap_mb: int = 2048
    sym_ext: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        if self.seeds < 1 or self.starts < 1:
            raise ValueError("--seeds and --starts must be positive")

    @property
    def mem_cap(self) -> int:
        return self.mem_cap_mb * 1024 ** 2


def load_golden() -> dict:
    return json.loads(resources.files("bellpoly").joinpath("data/golden.json").read_text())


def workers() -> int:
    try:
        return max(1, int(os.environ.get("BELLPOLY_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    k = workers()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# inequality input
# --------------------------------------------------------------------------

def resolve_inequality(args) -> TIInequality:
    """From --ineq FILE, --row ID (n=4 reference table), --table1-row ID (n=3) or --coeffs with --n."""
    if getattr(args, "ineq", None):
        return io.read_inequality(args.ineq)
    golden = load_golden()
    if getattr(args, "row", None) is not None:
        rows = {r["id"]: r for r in golden["table2"]["rows"]}
        if args.row not in rows:
            raise ValueError(f"no row {args.row} in the n=4 reference table")
        r = rows[args.row]
        return TIInequality.from_table2_row(r["coefficients"], r["beta_c"])
    if getattr(args, "table1_row", None) is not None:
        rows = {r["id"]: r for r in golden["table1"]["rows"]}
        if args.table1_row not in rows:
            raise ValueError(f"no row {args.table1_row} in the n=3 reference table")
        r = rows[args.table1_row]
        return TIInequality.from_coefficients(3, r["coefficients"], r["beta_c"])
    if getattr(args, "coeffs", None):
        if not args.n:
            raise ValueError("--coeffs needs --n")
        return TIInequality.from_coefficients(args.n, [to_fraction(c) for c in args.coeffs.split(",")])
    raise ValueError("no inequality given (use --ineq, --row, --table1-row or --coeffs)")


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    p = cfg.out / name
    p.write_text(text)
    return p


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_vertices(cfg: RunConfig) -> int:
    vs = polytope.ti_vertices(cfg.n)
    bound = polytope.polya_bound(cfg.n)
    _write(cfg, "vertices.csv", io.vertices_csv(vs))
    summary = {"n": cfg.n, "vertices": len(vs), "polya_bound": bound,
               "merged_non_rotational": vs.non_rotational_merges()}
    _write(cfg, "vertices_summary.json", _dump(summary))
    print(f"n={cfg.n}: {len(vs)} of <={bound}")
    return EXIT_OK


def cmd_facets(cfg: RunConfig) -> int:
    fl = polytope.facet_enum(polytope.ti_vertices(cfg.n))
    cfg.out.mkdir(parents=True, exist_ok=True)
    io.write_jsonl(cfg.out / "facets.jsonl", fl.facets)
    _write(cfg, "facets.csv", io.facets_csv(fl))
    print(f"n={cfg.n}: {len(fl)} facets")
    return EXIT_OK


def _classes(cfg: RunConfig):
    fl = polytope.facet_enum(polytope.ti_vertices(cfg.n))
    return symmetry.classify(fl, extension=cfg.sym_ext)


def cmd_classify(cfg: RunConfig) -> int:
    table = _classes(cfg)
    _write(cfg, "classes.csv", io.class_table_csv(table))
    print(f"n={cfg.n}: {len(table)} classes (symmetry extension {'on' if cfg.sym_ext else 'off'})")
    return EXIT_OK


def _class_bounds(job):
    q, starts, seed = job
    bc, _ = bounds.classical_bound(q)
    bn, cert = bounds.ns_bound(q)
    free = quantum.max_violation(q, "free", starts=starts, seed=seed)
    ti = quantum.max_violation(q, "ti", starts=starts, seed=seed)
    bq_ti = max(ti.beta, float(bc))
    bq = max(free.beta, bq_ti)
    return {"beta_c": bc, "beta_n": bn, "beta_q": bq, "beta_q_ti": bq_ti,
            "certified": cert.verify(q)}


def golden_diff(n: int, table, results: dict, tol: float) -> list[str]:
    """Compare computed classes with the bundled tables; returns mismatch lines."""
    golden = load_golden()
    problems = []
    if n == 3:
        rows = [(r["id"], TIInequality.from_coefficients(3, r["coefficients"], r["beta_c"]), None)
                for r in golden["table1"]["rows"]]
        want = golden["table1"]["classes"]
        ns = {int(k): v for k, v in golden["table1"]["beta_ns"].items()}
        qv = {int(k): v for k, v in golden["table1"]["beta_q"].items()}
    elif n == 4:
        rows = [(r["id"], TIInequality.from_table2_row(r["coefficients"], r["beta_c"]), r)
                for r in golden["table2"]["rows"]]
        want = len(rows)
        ns, qv = {}, {}
    else:
        return [f"no golden table for n={n}"]
    if len(table) != want:
        problems.append(f"class count {len(table)} != {want}")
    matched = set()
    for rid, q, r in rows:
        ci = table.find(q)
        if ci is None:
            problems.append(f"row {rid}: no matching class")
            continue
        matched.add(ci)
        got = results.get(ci, {})
        rep = table.classes[ci].representative
        if rep.beta_c != q.beta_c:
            problems.append(f"row {rid}: beta_C {rep.beta_c} != {q.beta_c}")
        exp_n = to_fraction(r["beta_ns"]) if r else (Fraction(ns[rid]) if rid in ns else None)
        if exp_n is not None and "beta_n" in got and got["beta_n"] != exp_n:
            problems.append(f"row {rid}: beta_NS {got['beta_n']} != {exp_n}")
        exp_q = r["beta_q"] if r else qv.get(rid)
        if exp_q is not None and "beta_q" in got and abs(got["beta_q"] - exp_q) > tol:
            problems.append(f"row {rid}: beta_Q {got['beta_q']:.4f} vs {exp_q}")
        if r and "beta_q_ti" in got and abs(got["beta_q_ti"] - r["beta_q_ti"]) > tol:
            problems.append(f"row {rid}: beta_Q^TI {got['beta_q_ti']:.4f} vs {r['beta_q_ti']}")
    for ci, cls in enumerate(table.classes):
        if ci not in matched:
            problems.append(f"class {ci + 1} {cls.representative} not in golden table")
    return problems


def cmd_table(cfg: RunConfig) -> int:
    table = _classes(cfg)
    jobs = [(c.representative, cfg.starts, 0) for c in table.classes]
    results = dict(enumerate(_pmap(_class_bounds, jobs)))
    for i, r in results.items():
        if r["beta_c"] > r["beta_n"]:
            raise AssertionError(f"class {i + 1}: beta_C > beta_N")
    _write(cfg, "table.csv", io.class_table_csv(table, results))
    problems = golden_diff(cfg.n, table, results, cfg.tol)
    flags = []
    for i, r in results.items():
        trivial = r["beta_n"] == r["beta_c"]
        no_q = (not trivial) and r["beta_q"] <= float(r["beta_c"]) + 1e-6
        flags.append({"class": i + 1, "trivial": trivial,
                      "no_quantum_violation_found": no_q, "certified": r["certified"]})
    _write(cfg, "table_flags.json", _dump(flags))
    report = "\n".join(problems) + ("\n" if problems else "")
    _write(cfg, "golden_diff.txt", report or "no differences\n")
    print(f"n={cfg.n}: {len(table)} classes; {len(problems)} golden differences")
    for line in problems:
        print("  " + line)
    return EXIT_GOLDEN if problems else EXIT_OK


def cmd_nsbound(cfg: RunConfig, q: TIInequality) -> int:
    bn, cert = bounds.ns_bound(q)
    bc, strat = bounds.classical_bound(q)
    ok = cert.verify(q)
    _write(cfg, "ns_certificate.json", _dump(cert.to_dict()))
    print(f"beta_C = {format_fraction(bc)}  beta_N = {format_fraction(bn)}  certificate {'verified' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_GOLDEN


def cmd_qbound(cfg: RunConfig, q: TIInequality) -> int:
    free = quantum.max_violation(q, "free", starts=cfg.starts)
    ti = quantum.max_violation(q, "ti", starts=cfg.starts)
    _write(cfg, "qbound.json", _dump({"free": free.to_dict(), "ti": ti.to_dict()}))
    print(f"beta_Q >= {free.beta:.6f}  beta_Q^TI >= {ti.beta:.6f}")
    return EXIT_OK


def cmd_seesaw(cfg: RunConfig, q: TIInequality) -> int:
    D = cfg.extra["D"]
    best = None
    for s in range(cfg.seeds):
        rep = seesaw.seesaw_run(q, D, seed=s, mem_cap=cfg.mem_cap, refine=cfg.extra.get("refine", True))
        if best is None or rep.beta > best.beta:
            best = rep
    _write(cfg, f"seesaw_D{D}.json", _dump(best.to_dict()))
    print(f"D={D}: best beta {best.beta:.6f} over {cfg.seeds} seeds (plain see-saw {best.seesaw_beta:.6f})")
    return EXIT_OK


def cmd_dmin(cfg: RunConfig) -> int:
    rows = io.read_class_csv(cfg.extra["table"])
    wanted = cfg.extra.get("rows")
    out = []
    for r in rows:
        rid = int(r["#"])
        if wanted and rid not in wanted:
            continue
        if r.get("beta_Q") is None or r["beta_Q"] <= float(r["beta_C"]) + 1e-6:
            continue
        coeffs = [r[k] for k in io.TABLE2_HEADER[5:]]
        q = TIInequality.from_table2_row(coeffs, r["beta_C"])
        res = seesaw.dmin_search(q, r["beta_Q"], D_max=cfg.extra["D_max"], seeds=cfg.seeds)
        out.extend(res.rows(rid))
        print(f"class {rid}: d_min {'<= ' + str(res.d_min) if res.d_min else 'not found <= ' + str(cfg.extra['D_max'])}")
    _write(cfg, "dmin.csv", io.dmin_csv(out))
    return EXIT_OK


NAMED_STATES = {
    "psi3": quantum.psi3,
    "psi5": quantum.psi5,
    "w3": lambda: quantum.w_state(3),
    "ghz3": lambda: quantum.ghz_state(3),
}


def _state(name: str) -> np.ndarray:
    if name in NAMED_STATES:
        return NAMED_STATES[name]()
    p = Path(name)
    if not p.exists():
        raise ValueError(f"unknown state {name!r} (named: {', '.join(NAMED_STATES)}, or a .npy file)")
    return quantum.normalize(np.load(p))[0]


def cmd_gme(cfg: RunConfig) -> int:
    psi = _state(cfg.extra["state"])
    sym = cfg.extra.get("symmetric", False)
    eg, det = quantum.geometric_entanglement(psi, symmetric_hint=sym, starts=cfg.starts,
                                             return_details=True)
    amp = 1 - np.sqrt(det["max_overlap"])
    print(f"E_G = {eg:.6f} (max overlap {det['max_overlap']:.6f}, "
          f"{det['starts_agreeing']}/{det['starts']} starts agree); 1-max|overlap| = {amp:.6f}")
    return EXIT_OK


def cmd_chsh(cfg: RunConfig) -> int:
    psi = _state(cfg.extra["state"])
    n = quantum._num_sites(psi.size, 2)
    worst = 0.0
    for (i, j), rho in quantum.two_site_reductions(psi, n).items():
        v = quantum.chsh_max(rho)
        worst = max(worst, v)
        print(f"sites ({i + 1},{j + 1}): max CHSH {v:.6f}")
    local = worst <= 2 + 1e-9
    print("all two-site reductions CHSH-local" if local else "some reduction violates CHSH")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--seeds", type=int, default=20)
    common.add_argument("--starts", type=int, default=50)
    common.add_argument("--tol", type=float, default=0.02)
    common.add_argument("--out", type=Path, default=Path("."))
    common.add_argument("--mem-cap", type=int, default=2048, help="memory cap in MB")
    common.add_argument("--sym-ext", action="store_true",
                        help="also identify classes under the even-site relabelling (alpha = beta = 0, even n)")
    common.add_argument("-v", "--verbose", action="store_true")

    ineq = argparse.ArgumentParser(add_help=False)
    ineq.add_argument("--ineq", type=Path, help="inequality JSON file")
    ineq.add_argument("--row", type=int, help="class number in the bundled n=4 reference table")
    ineq.add_argument("--table1-row", type=int, help="class number in the bundled n=3 reference table")
    ineq.add_argument("--coeffs", help="comma-separated coefficients in native order")

    p = argparse.ArgumentParser(prog="bellpoly", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("vertices", "facets", "classify", "table"):
        sub.add_parser(name, parents=[common])
    sub.add_parser("nsbound", parents=[common, ineq])
    sub.add_parser("qbound", parents=[common, ineq])
    s = sub.add_parser("seesaw", parents=[common, ineq])
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--no-refine", action="store_true", help="plain see-saw loop only")
    d = sub.add_parser("dmin", parents=[common])
    d.add_argument("--table", type=Path, required=True, help="table.csv from the table command")
    d.add_argument("--D-max", type=int, default=6)
    d.add_argument("--rows", type=int, nargs="*")
    for name in ("gme", "chsh-check"):
        g = sub.add_parser(name, parents=[common])
        g.add_argument("--state", required=True)
        if name == "gme":
            g.add_argument("--symmetric", action="store_true")
    return p


def _config(args) -> RunConfig:
    extra = {}
    for key in ("D", "table", "D_max", "rows", "state", "symmetric"):
        if hasattr(args, key):
            extra[key] = getattr(args, key)
    if hasattr(args, "no_refine"):
        extra["refine"] = not args.no_refine
    return RunConfig(args.command, args.n, args.seeds, args.starts, args.tol, args.out,
                     args.mem_cap, args.sym_ext, extra)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; keep 2 for golden mismatches
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command in ("vertices", "facets", "classify", "table") and not cfg.n:
            raise ValueError("--n is required")
        if args.command == "vertices":
            return cmd_vertices(cfg)
        if args.command == "facets":
            return cmd_facets(cfg)
        if args.command == "classify":
            return cmd_classify(cfg)
        if args.command == "table":
            return cmd_table(cfg)
        if args.command == "dmin":
            return cmd_dmin(cfg)
        if args.command == "gme":
            return cmd_gme(cfg)
        if args.command == "chsh-check":
            return cmd_chsh(cfg)
        q = resolve_inequality(args)
        if q.beta_c is None:
            q = bounds.with_classical_bound(q)
        return {"nsbound": cmd_nsbound, "qbound": cmd_qbound, "seesaw": cmd_seesaw}[args.command](cfg, q)
    except SizeError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, DimensionError, FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        print(f"bad input: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
