"""Command-line entry point.

Exit codes: 0 success, 1 the analysis says no (rejected candidate, failed
check, precondition not met), 2 broken input (bad flags, unreadable or
malformed diagram file).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import eigen, measures, vershik
from .diagram import (DiagramError, ParseError, compose_words, incidence_matrix, parse_spec,
                      product_matrix, serialize_spec, validate_properness)
from .examples import build_example, model_conformance, model_kmap
from .report import header, jsonable, render_csv, render_json
from .residues import range_residue_counts

EXIT_OK, EXIT_NO, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


class Outcome:
    """Columns/rows for CSV plus a JSON body and an exit code."""

    def __init__(self, columns, rows, body=None, extra=None, code=EXIT_OK, text=None):
        self.columns, self.rows = columns, rows
        self.body = body if body is not None else {"rows": [dict(zip(columns, r)) for r in rows]}
        self.extra = extra or {}
        self.code = code
        self.text = text


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------

def vertex_set(text: str) -> frozenset[int]:
    try:
        out = frozenset(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad vertex list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty vertex list")
    return out


def window_list(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        try:
            m, n = item.split(":")
            out.append((int(m), int(n)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad window {item!r}, expected m:n") from None
    return out


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def load_spec(args):
    if args.spec:
        try:
            text = Path(args.spec).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.spec}: {exc.strerror}") from None
        spec = parse_spec(text)
        if args.depth is not None and args.depth < spec.depth:
            from .diagram import DiagramSpec
            spec = DiagramSpec(spec.rank, spec.levels[:args.depth - 1], spec.toeplitz, spec.labels)
        return spec, None
    return build_example(args.example, args.depth or 5)


def _sorted_set(s) -> list[int]:
    return sorted(s)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_validate(args, spec, meta):
    rep = validate_properness(spec)
    flags = [("H1", rep.h1_ok), ("H2", rep.h2_ok), ("H3", rep.h3_ok), ("H4", rep.h4_ok),
             ("unique_min", rep.unique_min_ok)]
    rows = [(name, ok) for name, ok in flags] + [("proper", rep.proper)]
    body = {"properness": dict(rows), "failures": list(rep.failures), "rank": spec.rank,
            "depth": spec.depth, "toeplitz": spec.toeplitz}
    return Outcome(["check", "ok"], rows, body, {"failures": list(rep.failures)},
                   EXIT_OK if rep.proper else EXIT_NO)


def cmd_matrices(args, spec, meta):
    if args.residues:
        m = args.m or 1
        n = args.n or spec.depth
        tensor = range_residue_counts(spec, m, n, args.residues)
        rows = [(m, n, t1, t2, k, int(tensor.counts[t1 - 1, t2 - 1, k]))
                for t1 in spec.vertices for t2 in spec.vertices for k in range(args.residues)]
        return Outcome(["m", "n", "t1", "t2", "k", "count"], rows)
    rows = []
    if args.m is not None or args.n is not None:
        m, n = args.m or 1, args.n or spec.depth
        P = product_matrix(spec, m, n)
        rows = [(f"{m}:{n}", t1, t2, P[t1 - 1][t2 - 1]) for t1 in spec.vertices for t2 in spec.vertices]
    else:
        for lev in range(2, spec.depth + 1):
            M = incidence_matrix(spec, lev)
            rows += [(str(lev), t1, t2, M[t1 - 1][t2 - 1]) for t1 in spec.vertices for t2 in spec.vertices]
    return Outcome(["level", "t1", "t2", "count"], rows)


def cmd_words(args, spec, meta):
    if args.m is None and args.n is None:
        return Outcome([], [], {"spec": serialize_spec(spec)}, text=serialize_spec(spec))
    m, n = args.m or 1, args.n or spec.depth
    rows = [(m, n, t, compose_words(spec, m, n, t).length, compose_words(spec, m, n, t).to_text())
            for t in spec.vertices]
    return Outcome(["m", "n", "t", "length", "word"], rows)


def cmd_measures(args, spec, meta):
    N = args.n or spec.depth
    if args.point:
        seed = measures.point_seed(spec.rank, args.point)
    else:
        seed = measures.uniform_seed(spec.rank)
    rows = []
    for m in range(1, N + 1):
        mv = measures.measure_estimate(spec, m, N, seed)
        rows += [(m, t, mv.tower[t - 1], float(mv.tower[t - 1])) for t in spec.vertices]
    table = measures.tower_mass_limit_table(spec, N) if N >= 3 else {}
    body = {"seed": "point %d" % args.point if args.point else "uniform",
            "tower_masses": [dict(zip(["level", "vertex", "mass", "approx"], r)) for r in rows],
            "intervals": [{"level": m, "vertex": v, "mass_lo": lo, "mass_hi": hi}
                          for (m, v), (lo, hi) in sorted(table.items())]}
    if args.intervals:
        rows = [(m, v, lo, hi) for (m, v), (lo, hi) in sorted(table.items())]
        return Outcome(["level", "vertex", "mass_lo", "mass_hi"], rows, body)
    return Outcome(["level", "vertex", "mass", "approx"], rows, body)


def cmd_clean(args, spec, meta):
    rep = measures.cleanliness_classify(spec, args.n or spec.depth, args.delta, args.tol)
    rows = []
    groups = []
    for gi, g in enumerate(rep.groups, start=1):
        traj = []
        for (m, v), (lo, hi) in sorted(g.trajectory.items()):
            rows.append((gi, m, v, lo, hi, v in g.I))
            traj.append({"level": m, "vertex": v, "mass_lo": lo, "mass_hi": hi})
        groups.append({"I": _sorted_set(g.I), "seeds": list(g.seeds), "trajectory": traj})
    body = {"delta": args.delta, "tol": args.tol, "groups": groups,
            "vanishing": _sorted_set(rep.vanishing), "exact": rep.exact}
    extra = {"partition": [_sorted_set(I) for I in rep.partition()], "vanishing": _sorted_set(rep.vanishing)}
    return Outcome(["group", "level", "vertex", "mass_lo", "mass_hi", "in_I"], rows, body, extra)


def _candidate(args, spec):
    return eigen.classify_candidate(spec, args.a, args.b, args.max_level)


def cmd_eigen(args, spec, meta):
    cand = _candidate(args, spec)
    I = args.I or frozenset(spec.vertices)
    body = {"candidate": cand.to_dict(), "status": cand.status, "windows": [], "kmap": {},
            "cocycle": {}, "survey": {}}
    if cand.status != eigen.CANDIDATE:
        reason = {"continuous": "continuous eigenvalue (bb = 1)",
                  "rejected": "bb > d", "undecided": "gcd not stabilized"}[cand.status]
        body["reason"] = reason
        return Outcome(["m", "n", "t2", "D"], [], body, {"status": cand.status, "reason": reason},
                       EXIT_OK if cand.status == eigen.CONTINUOUS else EXIT_NO)
    if cand.bb > len(I):
        body.update(status="rejected", reason="𝐛 > #I")
        return Outcome(["m", "n", "t2", "D"], [], body, {"status": "rejected", "reason": "𝐛 > #I"}, EXIT_NO)
    rep = eigen.deficiency_table(spec, cand, args.windows, None if args.I is None else I, I,
                                 args.tau, args.W, args.trend)
    rows = [(r.m, r.n, r.t2, r.D) for r in rep.records]
    body["windows"] = [{"m": r.m, "n": r.n, "t2": r.t2, "D": r.D} for r in rep.records]
    body["gaps"] = [{"m": g.m, "n": g.n, "t1": g.t1, "t2": g.t2, "magnitude_gap": g.magnitude_gap,
                     "dominant_gap": g.dominant_gap, "k": g.k} for g in rep.gaps]
    status = "accepted" if rep.accepted else "not accepted"
    body.update(status=status, reason=rep.reason)
    return Outcome(["m", "n", "t2", "D"], rows, body, {"status": status, "reason": rep.reason,
                                                       "candidate": cand.to_dict()},
                   EXIT_OK if rep.accepted else EXIT_NO)


def _window(args, spec):
    m = args.m if args.m is not None else max(2, spec.depth - 2)
    n = args.n if args.n is not None else spec.depth
    return m, n


def cmd_kmap(args, spec, meta):
    cand = _candidate(args, spec)
    m, n = _window(args, spec)
    km = eigen.extract_kmap(spec, cand, m, n, args.I)
    rows = [(t1, t2, k, km.dominant_mass[(t1, t2)]) for (t1, t2), k in sorted(km.k.items())]
    return Outcome(["t1", "t2", "k", "dominant_mass"], rows, {"candidate": cand.to_dict(), "kmap": km.to_dict()},
                   {"modulus": km.modulus, "window": [m, n]})


def cmd_cocycle(args, spec, meta):
    I = args.I or frozenset(spec.vertices)
    if args.model:
        km = model_kmap()
        p, b = args.p if args.p is not None else 2, args.b
    else:
        cand = _candidate(args, spec)
        m, n = _window(args, spec)
        km = eigen.extract_kmap(spec, cand, m, n, I)
        if args.p is None and cand.p is None:
            raise eigen.HypothesisError("no constant residue p; pass --p or telescope")
        p, b = (args.p if args.p is not None else cand.p), cand.b
    res = eigen.cocycle_check(km, (p, b), I)
    rows = [v for v in res.violations]
    body = {"cocycle": {"passed": res.passed, "p": p, "b": b,
                        "violations": [list(v) for v in res.violations]}, "kmap": km.to_dict()}
    return Outcome(["kind", "t1", "t2", "t3"], rows, body,
                   {"passed": res.passed, "p": p, "b": b, "summary": res.describe()},
                   EXIT_OK if res.passed else EXIT_NO)


def cmd_psi(args, spec, meta):
    cand = _candidate(args, spec)
    m, n = _window(args, spec)
    ps = eigen.psi_partition(spec, cand, m, n, args.t2, args.I)
    rows = [(k, " ".join(map(str, sorted(ps.atoms[k]))), ps.class_sums[k], ps.distances[k])
            for k in range(ps.modulus)]
    body = {"atoms": {k: sorted(v) for k, v in ps.atoms.items()}, "class_sums": ps.class_sums,
            "distances": ps.distances, "onto": ps.onto, "window": [m, n], "t2": args.t2}
    return Outcome(["k", "atom", "class_sum", "distance"], rows, body, {"onto": ps.onto, "window": [m, n]})


def cmd_survey(args, spec, meta):
    hyps = args.I_sets
    source = "given"
    if not hyps:
        hyps = measures.cleanliness_classify(spec, spec.depth, args.delta).partition()
        source = "cleanliness"
    res = eigen.survey(spec, args.b_max, args.max_level, hyps, tau=args.tau, window_count=args.W,
                       windows=args.windows, trend=args.trend)
    rows = [(" ".join(map(str, sorted(e.I))), e.b, e.status, e.bb, e.accepted, e.reason,
             "" if e.max_tail_D is None else e.max_tail_D) for e in res.entries]
    body = {"survey": {"measures": [{"I": sorted(ms.I), "accepted_b": list(ms.accepted_b), "B": sorted(ms.B),
                                     "b_mu": ms.b_mu} for ms in res.measures],
                       "sum_b": res.sum_b, "sum_ok": res.sum_ok, "count_ok": res.count_ok,
                       "hypotheses": source, "note": res.note},
            "entries": [dict(zip(["I", "b", "status", "bb", "accepted", "reason", "max_tail_D"], r)) for r in rows]}
    extra = {"sum_b": res.sum_b, "sum_ok": res.sum_ok, "count_ok": res.count_ok, "note": res.note}
    return Outcome(["I", "b", "status", "bb", "accepted", "reason", "max_tail_D"], rows, body, extra,
                   EXIT_OK if res.sum_ok and res.count_ok else EXIT_NO)


def cmd_orbit(args, spec, meta):
    N = args.n or spec.depth
    start = vershik.min_path(spec, N, args.top)
    level = args.level or min(2, N)
    moduli = args.moduli or []
    rows = vershik.orbit(spec, start, args.steps, level, moduli)
    cols = ["step", f"tau_{level}"] + [f"r_{level}_mod_{b}" for b in moduli]
    return Outcome(cols, rows)


def cmd_converge(args, spec, meta):
    cand = _candidate(args, spec)
    if cand.p is None:
        raise eigen.HypothesisError("candidate has no constant residue p")
    if args.kmap == "model":
        km = model_kmap()
    else:
        m, n = _window(args, spec)
        km = eigen.extract_kmap(spec, cand, m, n, args.I)
    if args.zeroed:
        km = km.zeroed()
    rep = vershik.convergence_test(spec, cand, km, args.t0, args.samples, args.n or spec.depth, args.seed)
    rows = sorted(rep.histogram.items())
    body = {"fraction": rep.fraction, "stabilized": rep.stabilized, "samples": rep.samples,
            "missing": rep.missing, "histogram": rep.histogram, "stable_levels": rep.stable_levels}
    return Outcome(["last_change_level", "count"], rows, body,
                   {"fraction": rep.fraction, "missing": rep.missing})


def cmd_example(args, spec, meta):
    text = serialize_spec(spec)
    body = {"spec": text, "meta": {"example": meta.example_id,
                                   "claimed_I": [sorted(I) for I in meta.claimed_I],
                                   "claimed_candidates": [{"I": sorted(I), "b": b, "bb": bb}
                                                          for I, b, bb in meta.claimed_candidates],
                                   "claimed_rejections": [{"I": sorted(I), "b": b}
                                                          for I, b in meta.claimed_rejections],
                                   "tower_limits": meta.tower_limits, "claims": list(meta.claims),
                                   "notes": list(meta.notes)}}
    return Outcome([], [], body, text=text)


def cmd_conformance(args, spec, meta):
    rep = model_conformance(spec, args.L)
    rows = [(n, t, c) for (n, t), c in sorted(rep.exceptions.items())]
    body = {"L_bound": rep.L_bound, "max_exceptions": rep.max_exceptions, "passed": rep.passed,
            "exceptions": [{"level": n, "vertex": t, "exceptions": c} for n, t, c in rows],
            "kmap": rep.kmap.to_dict()}
    return Outcome(["level", "vertex", "exceptions"], rows, body,
                   {"passed": rep.passed, "max_exceptions": rep.max_exceptions},
                   EXIT_OK if rep.passed else EXIT_NO)


COMMANDS = {
    "validate": cmd_validate, "matrices": cmd_matrices, "words": cmd_words, "measures": cmd_measures,
    "clean": cmd_clean, "eigen": cmd_eigen, "kmap": cmd_kmap, "cocycle": cmd_cocycle, "psi": cmd_psi,
    "survey": cmd_survey, "orbit": cmd_orbit, "converge": cmd_converge, "example": cmd_example,
    "conformance": cmd_conformance,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--spec", help="diagram file")
    src.add_argument("--example", type=int, choices=range(1, 7), help="built-in example id")
    common.add_argument("--depth", type=int, help="deepest level (default 5 for examples)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)

    cand = argparse.ArgumentParser(add_help=False)
    cand.add_argument("--b", type=int, default=6)
    cand.add_argument("--a", type=int, default=1)
    cand.add_argument("--max-level", type=int, dest="max_level")

    win = argparse.ArgumentParser(add_help=False)
    win.add_argument("--m", type=int)
    win.add_argument("--n", type=int)
    win.add_argument("--I", type=vertex_set, help="vertex set, e.g. 1,2,3")

    thr = argparse.ArgumentParser(add_help=False)
    thr.add_argument("--windows", type=window_list, help="m1:n1,m2:n2,...")
    thr.add_argument("--tau", type=float, default=eigen.TAU_ACCEPT)
    thr.add_argument("--W", type=int, default=eigen.WINDOW_COUNT)
    thr.add_argument("--trend", choices=[eigen.TREND_BY_M, eigen.TREND_LADDER], default=eigen.TREND_BY_M)

    parser = argparse.ArgumentParser(prog="adicscope", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common])
    p = sub.add_parser("matrices", parents=[common, win])
    p.add_argument("--residues", type=int, metavar="B", help="dump the residue tensor mod B")
    sub.add_parser("words", parents=[common, win])
    p = sub.add_parser("measures", parents=[common])
    p.add_argument("--n", type=int, help="seed level")
    p.add_argument("--point", type=int, help="point-mass seed at this vertex (uniform otherwise)")
    p.add_argument("--intervals", action="store_true", help="emit (level, vertex, mass_lo, mass_hi)")
    p = sub.add_parser("clean", parents=[common])
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float, default=measures.DELTA)
    p.add_argument("--tol", type=float, default=measures.CLUSTER_TOL)
    sub.add_parser("eigen", parents=[common, cand, win, thr])
    sub.add_parser("kmap", parents=[common, cand, win])
    p = sub.add_parser("cocycle", parents=[common, cand, win])
    p.add_argument("--model", action="store_true", help="check the model-scheme k-map")
    p.add_argument("--p", type=int)
    p = sub.add_parser("psi", parents=[common, cand, win])
    p.add_argument("--t2", type=int, default=1)
    p = sub.add_parser("survey", parents=[common, thr])
    p.add_argument("--b-max", type=int, default=12, dest="b_max")
    p.add_argument("--max-level", type=int, dest="max_level")
    p.add_argument("--I", type=vertex_set, action="append", dest="I_sets",
                   help="hypothesized I set (repeatable); default: cleanliness partition")
    p.add_argument("--delta", type=float, default=measures.DELTA)
    p = sub.add_parser("orbit", parents=[common])
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--level", type=int)
    p.add_argument("--top", type=int, default=1)
    p.add_argument("--moduli", type=int_list)
    p = sub.add_parser("converge", parents=[common, cand, win])
    p.add_argument("--t0", type=int, default=1)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--kmap", choices=["model", "extract"], default="extract")
    p.add_argument("--zeroed", action="store_true")
    sub.add_parser("example", parents=[common])
    p = sub.add_parser("conformance", parents=[common])
    p.add_argument("--L", type=int, default=12)
    return parser


THRESHOLD_KEYS = ("tau", "W", "trend", "delta", "tol", "L")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.spec is None and args.example is None:
        if args.command == "example":
            parser.error("example needs --example")
        args.example = 2
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format")}
    thresholds = {k: config[k] for k in THRESHOLD_KEYS if k in config}
    if args.command in ("survey", "eigen"):
        thresholds.setdefault("stable_levels", eigen.STABLE_LEVELS)
    if args.command == "converge":
        thresholds["stable_levels"] = vershik.STABLE_LEVELS
    try:
        spec, meta = load_spec(args)
        if args.command == "example" and meta is None:
            raise InputError("example needs --example")
        outcome = COMMANDS[args.command](args, spec, meta)
    except (InputError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except eigen.HypothesisError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_NO
    except DiagramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    head = header(args.command, config, thresholds)
    if args.format == "json":
        text = render_json(head, outcome.body)
    elif outcome.text is not None:
        text = outcome.text
    else:
        text = render_csv(head, outcome.columns, outcome.rows, outcome.extra)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return outcome.code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
