"""The fmlab command line: batch analysis of structure files, experiments, and
report emission.

Exit codes: 0 on success, 1 when an assertion-style subcommand is refuted
(bound verification fails, a relation check comes back false), 2 on usage or
parse errors. Reports are deterministic JSON (or CSV/text for tabular output):
identical argv and seed give byte-identical bytes, regardless of --threads.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import __version__
from .classify import (AmalgamConfig, average_type, delta_star, is_good,
                       kappa, make_class_context, prec_K, stable_amalgam,
                       symmetry_test, GoodnessRefutation)
from .core import tp
from .counting import (count_phi_types, find_shattered,
                       verify_independence_bound, verify_order_bound)
from .detect import (arrow_check, find_cover_violation,
                     find_k_independence, find_n_order, find_weak_m_order,
                     splits, verify_independence, verify_order,
                     verify_weak_order)
from .formats import ParseError, emit_report, parse_formula, parse_structure
from .indisc import (BoundParams, ConstantGrowth, PolynomialGrowth,
                     WorstCaseGrowth, beth, check_indiscernible,
                     extraction_length_estimates, extract_end_indiscernible,
                     extract_indiscernible, f_star, g_func, ExtractionFailure)
from .ramsey import (E_bound, ExperimentConfig, RGraph, bound_compare,
                     coupon_q, extract_homogeneous, independence_probability_mc,
                     independence_trend)
from .util import BudgetExceeded, FmlabError


def _load_structure(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_structure(fh.read())


def _load_formula(path, signature):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_formula(fh.read(), signature)


def _tuple_arg(text):
    return tuple(int(x) for x in text.split(",") if x != "")


def _echo_config(args):
    skip = {"func", "assertion_key"}
    return {k: (str(v) if isinstance(v, Fraction) else v)
            for k, v in sorted(vars(args).items())
            if k not in skip and not callable(v)}


def _emit(args, report, rows=None):
    report = dict(report)
    report["fmlab_report"] = 1
    report["config"] = _echo_config(args)
    if args.format == "json":
        sys.stdout.write(emit_report(report) + "\n")
    elif args.format == "csv":
        if rows is None:
            raise FmlabError("csv output is only available for tabular subcommands")
        cols = ["k", "n", "trials", "estimate", "stderr", "exact_per_tuple",
                "union_bound"]
        sys.stdout.write(",".join(cols) + "\n")
        for row in rows:
            out = []
            for c in cols:
                v = row.get(c, "")
                if isinstance(v, Fraction):
                    out.append(f"{v.numerator}/{v.denominator}")
                elif isinstance(v, float):
                    out.append(f"{v:.12g}")
                else:
                    out.append(str(v))
            sys.stdout.write(",".join(out) + "\n")
    else:
        for k in sorted(report):
            sys.stdout.write(f"{k}: {emit_report(report[k])}\n")


def _outcome(value):
    if value is None:
        return "none"
    if isinstance(value, BudgetExceeded):
        return "budget"
    return "witness"


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_detect(args):
    doc = _load_structure(args.structure)
    M = doc.structure
    src = _load_formula(args.formula, M.signature)
    phi = src.formula
    if args.property == "independence":
        res = find_k_independence(M, phi, args.k)
        report = {"property": "independence", "k": args.k,
                  "outcome": _outcome(res)}
        if res is not None and not isinstance(res, BudgetExceeded):
            report["witness"] = res
            report["verified"] = verify_independence(M, phi, res)
    elif args.property == "order":
        res = find_n_order(M, phi, args.n)
        report = {"property": "order", "n": args.n, "outcome": _outcome(res)}
        if res is not None and not isinstance(res, BudgetExceeded):
            report["witness"] = res
            report["verified"] = verify_order(M, phi, res.a)
    elif args.property == "weak-order":
        res = find_weak_m_order(M, phi, args.m)
        report = {"property": "weak-order", "m": args.m, "outcome": _outcome(res)}
        if res is not None and not isinstance(res, BudgetExceeded):
            report["witness"] = res
            report["verified"] = verify_weak_order(M, phi, res)
    elif args.property == "cover":
        n_max = args.n_max if args.n_max is not None else max(
            M.universe_size ** phi.s, args.d)
        res = find_cover_violation(M, phi, args.d, n_max)
        report = {"property": "cover", "d": args.d, "n_max": n_max,
                  "outcome": _outcome(res)}
        if res is not None and not isinstance(res, BudgetExceeded):
            report["witness"] = res
    else:  # splitting
        A = sorted(doc.sets[args.params_set])
        B = sorted(doc.sets[args.base_set]) if args.base_set else []
        delta = [phi, phi.negated()]
        p = tp(delta, _tuple_arg(args.object), A, M)
        ok, wit = splits(p, B, delta, delta, M)
        report = {"property": "splitting", "splits": ok}
        if wit is not None:
            report["witness"] = wit
    _emit(args, report)
    return 0


def _cmd_types(args):
    if args.action == "shatter":
        family = [frozenset(_tuple_arg(m)) for m in args.member]
        wit = find_shattered(family, args.k)
        report = {"action": "shatter", "k": args.k,
                  "found": wit is not None}
        if wit is not None:
            report["witness"] = wit
        _emit(args, report)
        return 0
    doc = _load_structure(args.structure)
    M = doc.structure
    src = _load_formula(args.formula, M.signature)
    phi = src.formula
    A = sorted(doc.sets[args.set]) if args.set else sorted(M.tuples(phi.s))
    if args.action == "count":
        report = {"action": "count", "count": count_phi_types(M, phi, A),
                  "params": len(A)}
        _emit(args, report)
        return 0
    if args.action == "verify-order-bound":
        rep = verify_order_bound(M, phi, A, args.n)
    else:
        rep = verify_independence_bound(M, phi, A, args.k)
    _emit(args, {"action": args.action, "report": rep})
    return 0 if (rep.holds and rep.hypothesis_ok) else 1


def _growth(args):
    if args.growth == "worst":
        return WorstCaseGrowth(args.growth_m)
    if args.growth == "poly":
        return PolynomialGrowth(args.growth_p)
    return ConstantGrowth(args.growth_c)


def _cmd_indisc(args):
    if args.action == "bounds":
        if args.fn == "beth":
            report = {"fn": "beth", "value": beth(args.i, args.x)}
        elif args.fn == "estimates":
            report = {"fn": "estimates",
                      "value": extraction_length_estimates(args.case, args.m, args.k,
                                              args.p_or_n, args.s, args.t)}
        else:
            params = BoundParams(_growth(args), args.alpha, args.r, args.m, args.k)
            if args.fn == "fstar":
                report = {"fn": "fstar", "value": f_star(params, args.j)}
            else:
                report = {"fn": "g", "value": g_func(params, args.i, args.x)}
        _emit(args, report)
        return 0
    doc = _load_structure(args.structure)
    M = doc.structure
    src = _load_formula(args.formula, M.signature)
    phi = src.formula
    I = doc.seqs[args.seq]
    A = sorted(doc.sets[args.set]) if args.set else []
    if args.action == "check":
        cert = check_indiscernible(I, [phi, phi.negated()], args.m, A, M,
                                   mode=args.mode)
        _emit(args, {"action": "check", "certificate": cert})
        return 0 if cert.verified else 1
    if args.action == "extract-end":
        got = extract_end_indiscernible(I, phi, args.m, A, M, k=args.k)
        if isinstance(got, ExtractionFailure):
            _emit(args, {"action": "extract-end", "failure": got})
            return 1
        seq, trace = got
        _emit(args, {"action": "extract-end", "sequence": seq, "trace": trace})
        return 0
    got = extract_indiscernible(I, phi, args.m, A, M, args.k)
    if isinstance(got, ExtractionFailure):
        _emit(args, {"action": "extract", "failure": got})
        return 1
    _emit(args, {"action": "extract", "sequence": got})
    return 0


def _cmd_ramsey(args):
    if args.action == "arrow":
        holds = arrow_check(args.x, args.y, args.a, args.b)
        _emit(args, {"action": "arrow", "x": args.x, "y": args.y,
                     "a": args.a, "b": args.b, "holds": holds})
        return 0 if holds else 1
    if args.action == "compare-bounds":
        _emit(args, {"action": "compare-bounds",
                     "comparison": bound_compare(args.r, args.n, args.k)})
        return 0
    if args.action == "e-bound":
        _emit(args, {"action": "e-bound",
                     "value": E_bound(args.p, args.j, args.x)})
        return 0
    doc = _load_structure(args.structure)
    G = RGraph.from_structure(doc.structure, args.relation)
    got = extract_homogeneous(G, args.n, args.k)
    if isinstance(got, ExtractionFailure):
        _emit(args, {"action": "homogeneous", "failure": got})
        return 1
    vertices, tag = got
    _emit(args, {"action": "homogeneous", "vertices": sorted(vertices),
                 "tag": tag})
    return 0


def _cmd_experiment(args):
    if args.action == "coupon":
        q = coupon_q(args.n, args.m)
        _emit(args, {"action": "coupon", "n": args.n, "m": args.m, "q": q})
        return 0
    if args.action == "independence-mc":
        row = independence_probability_mc(
            ExperimentConfig(args.n, args.k, args.trials, args.seed))
        _emit(args, {"action": "independence-mc", "row": row}, rows=[row])
        return 0
    rows = independence_trend([int(x) for x in args.k_list.split(",")],
                       args.trials, args.seed)
    _emit(args, {"action": "thmg1", "rows": rows}, rows=rows)
    return 0


def _cmd_classify(args):
    if args.action == "delta-star":
        src = parse_formula(open(args.formula, encoding="utf-8").read())
        star = delta_star([src.formula, src.formula.negated()], args.n)
        _emit(args, {"action": "delta-star", "size": len(star.formulas),
                     "formulas": [f.text() for f in star.formulas]})
        return 0
    doc = _load_structure(args.structure)
    M = doc.structure
    src = _load_formula(args.formula, M.signature)
    phi = src.formula
    if args.action == "kappa":
        res = kappa(M, [phi, phi.negated()], args.n, max_len=args.max_len)
        _emit(args, {"action": "kappa", "result": res})
        return 0
    if args.action == "good":
        got = is_good(M, phi, args.n, args.d)
        _emit(args, {"action": "good", "result": got})
        return 0 if not isinstance(got, GoodnessRefutation) else 1
    if args.action == "average":
        I = doc.seqs[args.seq]
        A = sorted(doc.sets[args.set])
        av = average_type(I, [phi, phi.negated()], A, M, args.kappa, n=args.n)
        _emit(args, {"action": "average",
                     "entries": [[f.text(), list(b), s]
                                 for f, b, s in av.sorted_entries()]})
        return 0
    A = sorted(doc.sets[args.set])
    domains = [frozenset(doc.submodels[name]) for name in args.submodels.split(",")]
    ctx = make_class_context(M, [None] + domains, phi, args.n, args.d, args.k, A)
    if isinstance(ctx, GoodnessRefutation):
        _emit(args, {"action": args.action, "error": "class is not good",
                     "refutation": ctx})
        return 1
    if args.action == "prec":
        rep = prec_K(M, domains[0], ctx)
        _emit(args, {"action": "prec", "report": rep})
        return 0 if rep.holds is True else 1
    config = AmalgamConfig(M, domains[0], domains[1], domains[2], ctx)
    if args.action == "amalgam":
        res = stable_amalgam(config)
        _emit(args, {"action": "amalgam", "result": res})
        return 0 if res.holds is True else 1
    res = symmetry_test(config)
    _emit(args, {"action": "symmetry", "forward": res["forward"],
                 "backward": res["backward"], "symmetric": res["symmetric"]})
    return 0 if res["symmetric"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--format", choices=["json", "csv", "text"], default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="reserved; results are deterministic regardless")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fmlab",
        description="Analyze finite relational structures: witness searches, "
                    "type counting, indiscernible extraction, Ramsey-style "
                    "experiments, and classification checks.")
    ap.add_argument("--version", action="version", version=f"fmlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="search for independence / order / "
                                      "weak-order / cover / splitting witnesses")
    _common(p)
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--property", required=True,
                   choices=["independence", "order", "weak-order", "cover",
                            "splitting"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--object", default="0", help="object tuple for splitting")
    p.add_argument("--params-set", default="A")
    p.add_argument("--base-set", default=None)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("types", help="count realized types, verify the "
                                     "polynomial bounds, find shattered sets")
    _common(p)
    tsub = p.add_subparsers(dest="action", required=True)
    for name in ("count", "verify-order-bound", "verify-independence-bound",
                 "shatter"):
        tp_ = tsub.add_parser(name)
        _common(tp_)
        tp_.add_argument("--structure", required=("shatter" != name))
        tp_.add_argument("--formula", required=("shatter" != name))
        tp_.add_argument("--set", default=None)
        tp_.add_argument("--n", type=int, default=1)
        tp_.add_argument("--k", type=int, default=1)
        tp_.add_argument("--member", action="append", default=[],
                         help="family member for shatter, e.g. --member 0,1")
        tp_.set_defaults(func=_cmd_types, action=name)
    p.set_defaults(func=_cmd_types)

    p = sub.add_parser("indisc", help="check indiscernibility, extract "
                                      "end/full indiscernible subsequences, "
                                      "evaluate length bounds")
    isub = p.add_subparsers(dest="action", required=True)
    for name in ("check", "extract-end", "extract", "bounds"):
        ip = isub.add_parser(name)
        _common(ip)
        ip.add_argument("--structure")
        ip.add_argument("--formula")
        ip.add_argument("--seq", default="I")
        ip.add_argument("--set", default=None)
        ip.add_argument("--m", type=int, default=1)
        ip.add_argument("--k", type=int, default=None)
        ip.add_argument("--mode", choices=["sequence", "set", "end"],
                        default="sequence")
        ip.add_argument("--fn", choices=["fstar", "g", "beth", "estimates"],
                        default="fstar")
        ip.add_argument("--growth", choices=["worst", "poly", "const"],
                        default="worst")
        ip.add_argument("--growth-m", type=int, default=1)
        ip.add_argument("--growth-p", type=int, default=1)
        ip.add_argument("--growth-c", type=int, default=2)
        ip.add_argument("--alpha", type=int, default=0)
        ip.add_argument("--r", type=int, default=1)
        ip.add_argument("--j", type=int, default=0)
        ip.add_argument("--i", type=int, default=0)
        ip.add_argument("--x", type=int, default=0)
        ip.add_argument("--case", type=int, default=1)
        ip.add_argument("--p-or-n", type=int, default=None)
        ip.add_argument("--s", type=int, default=None)
        ip.add_argument("--t", type=int, default=None)
        ip.set_defaults(func=_cmd_indisc, action=name)

    p = sub.add_parser("ramsey", help="arrow relation, homogeneous-set "
                                      "extraction, bound comparison, E iterates")
    rsub = p.add_subparsers(dest="action", required=True)
    for name in ("arrow", "homogeneous", "compare-bounds", "e-bound"):
        rp = rsub.add_parser(name)
        _common(rp)
        rp.add_argument("--structure")
        rp.add_argument("--relation", default="R")
        rp.add_argument("--x", type=int, default=0)
        rp.add_argument("--y", type=int, default=0)
        rp.add_argument("--a", type=int, default=2)
        rp.add_argument("--b", type=int, default=2)
        rp.add_argument("--r", type=int, default=3)
        rp.add_argument("--n", type=int, default=2)
        rp.add_argument("--k", type=int, default=3)
        rp.add_argument("--p", type=int, default=1)
        rp.add_argument("--j", type=int, default=1)
        rp.set_defaults(func=_cmd_ramsey, action=name)

    p = sub.add_parser("experiment", help="coupon-collector exact values and "
                                          "seeded random-graph estimates")
    esub = p.add_subparsers(dest="action", required=True)
    for name in ("coupon", "independence-mc", "thmg1"):
        ep = esub.add_parser(name)
        _common(ep)
        ep.add_argument("--n", type=int, default=2)
        ep.add_argument("--m", type=int, default=2)
        ep.add_argument("--k", type=int, default=2)
        ep.add_argument("--trials", type=int, default=100)
        ep.add_argument("--k-list", default="2,3,4")
        ep.set_defaults(func=_cmd_experiment, action=name)

    p = sub.add_parser("classify", help="closure sets, kappa, averages, "
                                        "goodness, strong submodels, "
                                        "amalgamation and its symmetry")
    csub = p.add_subparsers(dest="action", required=True)
    for name in ("delta-star", "kappa", "average", "good", "prec", "amalgam",
                 "symmetry"):
        cp = csub.add_parser(name)
        _common(cp)
        cp.add_argument("--structure")
        cp.add_argument("--formula", required=True)
        cp.add_argument("--set", default="A")
        cp.add_argument("--seq", default="I")
        cp.add_argument("--submodels", default="M0,M1,M2",
                        help="comma-separated submodel names from the file")
        cp.add_argument("--n", type=int, default=1)
        cp.add_argument("--d", type=int, default=2)
        cp.add_argument("--k", type=int, default=1)
        cp.add_argument("--kappa", type=int, default=1)
        cp.add_argument("--max-len", type=int, default=None)
        cp.set_defaults(func=_cmd_classify, action=name)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParseError as e:
        sys.stderr.write(f"parse error: {e}\n")
        return 2
    except FileNotFoundError as e:
        sys.stderr.write(f"missing file: {e.filename}\n")
        return 2
    except FmlabError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
