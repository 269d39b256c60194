"""Classification machinery for classes of finite structures: the closure set
of pattern formulas, the minority bound kappa, average types over indiscernible
sequences, goodness, the strong-submodel relation, and stable amalgamation with
its symmetry test.

Submodels are universe subsets with induced relations; nothing is relabeled, so
parameter tuples keep their meaning across a whole configuration.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .core import (And, Exists, Not, PartitionedFormula, PhiType, Structure,
                   TupleSequence, bound_vars, formula_text, free_vars,
                   rename_free)
from .detect import find_cover_violation, find_k_independence
from .indisc import TypeOracle, check_indiscernible
from .util import BudgetExceeded, PreconditionError


# ---------------------------------------------------------------------------
# the closure set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaStar:
    base: tuple[PartitionedFormula, ...]
    n: int
    formulas: tuple[PartitionedFormula, ...]


_VAR_KEY = re.compile(r"([a-z]+)(\d+)$")


def _var_key(v: str):
    m = _VAR_KEY.match(v)
    if not m:
        return (v, -1)
    return (m.group(1), int(m.group(2)))


def _canonical(g) -> PartitionedFormula:
    fv = sorted(free_vars(g), key=_var_key)
    mapping = {v: f"v{i}" for i, v in enumerate(fv)}
    return PartitionedFormula(rename_free(g, mapping),
                              tuple(f"v{i}" for i in range(len(fv))), ())


def _subformulas(g):
    yield g
    if hasattr(g, "left"):
        yield from _subformulas(g.left)
        yield from _subformulas(g.right)
    elif hasattr(g, "sub"):
        yield from _subformulas(g.sub)
    elif hasattr(g, "body"):
        yield from _subformulas(g.body)


def delta_star(delta: Sequence[PartitionedFormula], n: int) -> DeltaStar:
    """The closure set: for each formula, each width up to n and each sign
    pattern, the realizability formula "some object shows exactly this pattern
    on these parameter blocks", together with all subformulas.

    Closure formulas carry the fresh parameter blocks as their object block
    with no parameter block, which is what lets them compare concatenated
    selections over the empty parameter set. Subformulas are canonicalized by
    renaming free variables in sorted order, so duplicates collapse.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    out: dict[tuple, PartitionedFormula] = {}

    def add(pf: PartitionedFormula):
        key = (formula_text(pf.ast), pf.object_vars, pf.param_vars)
        if key not in out:
            out[key] = pf

    for phi in delta:
        r, s = phi.r, phi.s
        used = {int(m.group(2)) for v in bound_vars(phi.ast)
                for m in [_VAR_KEY.match(v)] if m and m.group(1) == "z"}
        z0 = max(used, default=-1) + 1
        zblock = tuple(f"z{z0 + i}" for i in range(r))
        for k in range(1, n + 1):
            blocks = [tuple(f"y{i * s + j}" for j in range(s)) for i in range(k)]
            for w_mask in range(1 << k):
                lits = []
                for i in range(k):
                    inst = rename_free(
                        phi.ast, dict(zip(phi.object_vars + phi.param_vars,
                                          zblock + blocks[i])))
                    if (w_mask >> i) & 1:
                        lits.append(inst)
                    else:
                        lits.append(inst.sub if type(inst) is Not else Not(inst))
                body = lits[0]
                for lit in lits[1:]:
                    body = And(body, lit)
                closure = body
                for v in reversed(zblock):
                    closure = Exists(v, closure)
                for g in _subformulas(closure):
                    add(_canonical(g))

    formulas = tuple(sorted(out.values(), key=lambda f: (f.r, f.s, formula_text(f.ast))))
    return DeltaStar(tuple(delta), n, formulas)


# ---------------------------------------------------------------------------
# kappa
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KappaResult:
    value: int
    witness: Optional[dict]

    def to_report(self):
        if self.witness is None:
            return {"kappa": self.value, "witness": None}
        w = dict(self.witness)
        w["sequence"] = [list(t) for t in w["sequence"]]
        w["formula"] = w["formula"].text()
        w["c"] = list(w["c"])
        return {"kappa": self.value, "witness": w}


def kappa(M: Structure, delta: Sequence[PartitionedFormula], n: int,
          max_len: Optional[int] = None, domain=None,
          star: Optional[DeltaStar] = None) -> KappaResult:
    """Least kappa >= 1 such that along every closure-indiscernible sequence of
    distinct parameter tuples (length up to max_len), every formula instance
    splits the sequence with minority side below kappa.

    Exhaustive over ordered sequences of distinct tuples; max_len defaults to
    the number of distinct tuples of the relevant arity.
    """
    if star is None:
        star = delta_star(list(delta), n)
    oracle = TypeOracle(M, star.formulas, [], domain)
    worst = 0
    witness = None
    arities = sorted({f.s for f in delta if f.s >= 1})
    for s in arities:
        tuples = sorted(M.tuples(s, domain=domain))
        fitting = [f for f in delta if f.s == s]
        cap = len(tuples) if max_len is None else min(max_len, len(tuples))
        if cap < 2:
            if max_len is not None and max_len < 2:
                raise PreconditionError("max_len must be >= 2")
            continue
        # satisfaction tables, one per formula
        sat = {}
        for f in fitting:
            objs = sorted(M.tuples(f.r, domain=domain))
            sat[f] = {(c, b): f.holds(M, c, b, domain=domain)
                      for c in objs for b in tuples}
        objs_by_f = {f: sorted(M.tuples(f.r, domain=domain)) for f in fitting}
        for length in range(2, cap + 1):
            for seq in itertools.permutations(tuples, length):
                if length >= n:
                    ref = None
                    ok = True
                    for sel in itertools.combinations(range(length), n):
                        concat = tuple(x for i in sel for x in seq[i])
                        key = oracle.key(concat)
                        if ref is None:
                            ref = key
                        elif key != ref:
                            ok = False
                            break
                    if not ok:
                        continue
                for f in fitting:
                    table = sat[f]
                    for c in objs_by_f[f]:
                        pos = sum(1 for b in seq if table[(c, b)])
                        side = min(pos, length - pos)
                        if side > worst:
                            worst = side
                            witness = {"sequence": tuple(seq), "formula": f,
                                       "c": c, "pos": pos, "neg": length - pos}
    if max_len is not None and max_len < 2:
        raise PreconditionError("max_len must be >= 2")
    return KappaResult(worst + 1, witness)


# ---------------------------------------------------------------------------
# average types
# ---------------------------------------------------------------------------


def average_type(I, delta: Sequence[PartitionedFormula],
                 A: Iterable[tuple[int, ...]], M: Structure, kappa_value: int,
                 n: Optional[int] = None, check: bool = True) -> PhiType:
    """The average: instance (f, b) is in the type iff f holds on at least
    kappa_value members of I.

    With n given (and check on), I is first verified to be indiscernible for
    the closure set of delta over the empty set; the error carries the
    counterexample.
    """
    seq = I if isinstance(I, TupleSequence) else TupleSequence.of(I)
    if kappa_value < 1:
        raise PreconditionError("kappa must be >= 1")
    if check and n is not None and len(seq) >= n:
        star = delta_star(list(delta), n)
        cert = check_indiscernible(seq, star.formulas, n, [], M, mode="sequence")
        if not cert.verified:
            raise PreconditionError(
                f"sequence is not closure-indiscernible; counterexample "
                f"{cert.counterexample}")
    A = sorted(tuple(b) for b in A)
    entries = []
    for f in delta:
        if f.r != seq.tuple_arity:
            continue
        pars = [()] if f.s == 0 else [b for b in A if len(b) == f.s]
        for b in pars:
            count = sum(1 for c in seq if f.holds(M, c, b))
            entries.append((f, b, count >= kappa_value))
    return PhiType(frozenset(entries), seq.tuple_arity)


# ---------------------------------------------------------------------------
# goodness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GoodnessContext:
    phi: PartitionedFormula
    n: int
    d: int
    kappa_value: int
    lambda_value: int

    def to_report(self):
        return {"good": True, "n": self.n, "d": self.d,
                "kappa": self.kappa_value, "lambda": self.lambda_value}


@dataclass(frozen=True)
class GoodnessRefutation:
    kind: str                     # "independence" | "cover" | "budget"
    formula: PartitionedFormula
    witness: object

    def to_report(self):
        from .formats import _reportable
        return {"good": False, "kind": self.kind, "formula": self.formula.text(),
                "witness": _reportable(self.witness) if self.witness is not None else None}


def goodness_delta(phi: PartitionedFormula) -> list[PartitionedFormula]:
    psi = phi.swapped()
    return [phi, psi, phi.negated(), psi.negated()]


def is_good(M: Structure, phi: PartitionedFormula, n: int, d: int,
            domain=None, max_len: Optional[int] = None
            ) -> Union[GoodnessContext, GoodnessRefutation]:
    """Run the independence searches at width n and the cover searches at depth
    d for all four block-arrangements of phi; when every search is empty,
    compute kappa and the threshold lambda = max(d * kappa, 2n)."""
    if n < 1 or d < 1:
        raise PreconditionError("n and d must be >= 1")
    delta = goodness_delta(phi)
    size = len(frozenset(M.universe() if domain is None else domain))
    for f in delta:
        wit = find_k_independence(M, f, n, domain=domain)
        if isinstance(wit, BudgetExceeded):
            return GoodnessRefutation("budget", f, wit)
        if wit is not None:
            return GoodnessRefutation("independence", f, wit)
        n_max = max(size ** f.s, d)
        vio = find_cover_violation(M, f, d, n_max, domain=domain)
        if isinstance(vio, BudgetExceeded):
            return GoodnessRefutation("budget", f, vio)
        if vio is not None:
            return GoodnessRefutation("cover", f, vio)
    kv = kappa(M, delta, n, max_len=max_len, domain=domain).value
    return GoodnessContext(phi, n, d, kv, max(d * kv, 2 * n))


# ---------------------------------------------------------------------------
# class context and the strong-submodel relation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassContext:
    """The suppressed parameters of the relation: phi, n, d, the saturation
    width k, the common parameter set A, and the class-level kappa/lambda."""

    phi: PartitionedFormula
    n: int
    d: int
    k: int
    A: tuple[tuple[int, ...], ...]
    kappa_K: int
    lambda_K: int

    def to_report(self):
        return {"n": self.n, "d": self.d, "k": self.k,
                "A": [list(t) for t in self.A],
                "kappa_K": self.kappa_K, "lambda_K": self.lambda_K}


def make_class_context(M: Structure, domains: Sequence[Optional[frozenset]],
                       phi: PartitionedFormula, n: int, d: int, k: int,
                       A: Iterable[tuple[int, ...]]
                       ) -> Union[ClassContext, GoodnessRefutation]:
    """Check goodness of every member (None = the full structure) and take the
    class kappa as the max over members; lambda scales it by |A|^s."""
    A = tuple(sorted(tuple(b) for b in A))
    kmax = 0
    for dom in domains:
        got = is_good(M, phi, n, d, domain=dom)
        if isinstance(got, GoodnessRefutation):
            return got
        kmax = max(kmax, got.kappa_value)
    s = max(f.s for f in goodness_delta(phi))
    return ClassContext(phi, n, d, k, A, kmax, kmax * len(A) ** s)


@dataclass(frozen=True)
class PrecReport:
    cond1: bool
    cond2: bool
    cond3: Union[bool, str]
    holds: Union[bool, str]
    failing_condition: Optional[int]
    detail: str = ""

    def to_report(self):
        return {"cond1": self.cond1, "cond2": self.cond2, "cond3": self.cond3,
                "holds": self.holds, "failing_condition": self.failing_condition,
                "detail": self.detail}


def _distinct_sequences(tuples: list, lengths: Iterable[int]):
    for L in lengths:
        if L < 1 or L > len(tuples):
            continue
        yield from itertools.permutations(tuples, L)


def _average_matches(seq, sat_row, A_params, kappa_value, target_sign) -> bool:
    L = len(seq)
    for b in A_params:
        pos = sum(1 for c in seq if sat_row[(c, b)])
        want = target_sign[b]
        if (pos >= kappa_value) != want:
            return False
        if ((L - pos) >= kappa_value) != (not want):
            return False
    return True


def _search_average_witness(M: Structure, phi: PartitionedFormula,
                            source_tuples: list, A_params: list,
                            kappa_value: int, lambda_value: int,
                            target_sign: dict, oracle: TypeOracle, n: int,
                            sat_row: dict, budget: int = 1_000_000
                            ) -> Union[TupleSequence, None, str]:
    """A sequence of distinct tuples from the source (or a constant sequence)
    of length at least lambda that is closure-indiscernible over the empty set
    and averages to the target. Returns "budget" when the cap is hit."""
    min_len = max(lambda_value, 1)
    # constant sequences first: they are indiscernible outright
    spent = 0
    for c in source_tuples:
        spent += 1
        if spent > budget:
            return "budget"
        seq = tuple([c] * min_len)
        if _average_matches(seq, sat_row, A_params, kappa_value, target_sign):
            return TupleSequence.of(seq, phi.r)
    for seq in _distinct_sequences(source_tuples,
                                   range(min_len, min_len + 3)):
        spent += 1
        if spent > budget:
            return "budget"
        L = len(seq)
        if L >= n:
            ref = None
            ok = True
            for sel in itertools.combinations(range(L), n):
                concat = tuple(x for i in sel for x in seq[i])
                key = oracle.key(concat)
                if ref is None:
                    ref = key
                elif key != ref:
                    ok = False
                    break
            if not ok:
                continue
        if _average_matches(seq, sat_row, A_params, kappa_value, target_sign):
            return TupleSequence.of(seq, phi.r)
    return None


def prec_K(M: Structure, N_dom: frozenset, ctx: ClassContext,
           ambient: Optional[frozenset] = None, check_good: bool = True,
           strict_over_A: bool = False) -> PrecReport:
    """The strong-submodel check between the induced substructure on N_dom and
    the (induced) ambient structure.

    Condition 1: the formula agrees between the two on parameters from A.
    Condition 2: any pattern over at most k parameters realized in the ambient
    is realized by a tuple from N. Condition 3: every ambient tuple's type over
    A is the average of a long closure-indiscernible sequence inside N
    (indiscernible over the empty set by default; `strict_over_A` asks for
    indiscernibility over A instead).
    """
    phi, n, d, k = ctx.phi, ctx.n, ctx.d, ctx.k
    amb = frozenset(M.universe()) if ambient is None else frozenset(ambient)
    N_dom = frozenset(N_dom)
    if not N_dom <= amb:
        raise PreconditionError("N must be a subset of the ambient universe")
    span = {e for t in ctx.A for e in t}
    if not span <= N_dom:
        raise PreconditionError("A must lie inside N")
    if check_good:
        for dom, tag in ((amb, "ambient"), (N_dom, "N")):
            got = is_good(M, phi, n, d, domain=dom)
            if isinstance(got, GoodnessRefutation):
                raise PreconditionError(f"{tag} structure is not good: {got.kind}")

    A_match = [b for b in ctx.A if len(b) == phi.s]
    # condition 1
    cond1 = True
    for b in itertools.product(sorted(N_dom), repeat=phi.r):
        for a in A_match:
            if phi.holds(M, b, a, domain=amb) != phi.holds(M, b, a, domain=N_dom):
                cond1 = False
                break
        if not cond1:
            break

    # condition 2
    cond2 = True
    objs_amb = sorted(itertools.product(sorted(amb), repeat=phi.r))
    objs_N = sorted(itertools.product(sorted(N_dom), repeat=phi.r))
    for alist in itertools.product(A_match, repeat=k):
        realized = any(all(phi.holds(M, x, a, domain=amb) for a in alist)
                       for x in objs_amb)
        if not realized:
            continue
        if not any(all(phi.holds(M, x, a, domain=amb) for a in alist)
                   for x in objs_N):
            cond2 = False
            break

    # condition 3
    psi = phi.swapped()
    star = delta_star([psi, psi.negated()], n)
    over = A_match if strict_over_A else []
    oracle = TypeOracle(M, star.formulas, over, amb)
    sat_row = {(c, b): phi.holds(M, c, b, domain=amb)
               for c in objs_N for b in A_match}
    cond3: Union[bool, str] = True
    for a in objs_amb:
        target_sign = {b: phi.holds(M, a, b, domain=amb) for b in A_match}
        got = _search_average_witness(M, phi, objs_N, A_match, ctx.kappa_K,
                                      ctx.lambda_K, target_sign, oracle, n,
                                      sat_row)
        if got == "budget":
            cond3 = "budget"
            break
        if got is None:
            cond3 = False
            break

    failing = None
    for idx, c in enumerate((cond1, cond2, cond3), start=1):
        if c is False:
            failing = idx
            break
    if cond3 == "budget" and failing is None:
        holds: Union[bool, str] = "budget"
    else:
        holds = cond1 and cond2 and (cond3 is True)
    return PrecReport(cond1, cond2, cond3, holds, failing)


# ---------------------------------------------------------------------------
# stable amalgamation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmalgamConfig:
    M: Structure
    m0: frozenset
    m1: frozenset
    m2: frozenset
    ctx: ClassContext


@dataclass(frozen=True)
class AmalgamResult:
    holds: Union[bool, str]
    witnesses: dict
    offender: Optional[tuple[int, ...]]

    def to_report(self):
        return {"holds": self.holds,
                "witnesses": {str(list(c)): [list(t) for t in seq]
                              for c, seq in self.witnesses.items()},
                "offender": None if self.offender is None else list(self.offender)}


def stable_amalgam(config: AmalgamConfig, check_preconditions: bool = True,
                   check_good: bool = True) -> AmalgamResult:
    """Is (M0, M1, M2) in stable amalgamation inside M: does every tuple from
    M2 have its type over M1 matched by the average of a long
    closure-indiscernible sequence inside M0?

    `check_good=False` skips re-verifying member goodness inside the
    relation checks, for callers that certified it already.
    """
    M, ctx = config.M, config.ctx
    phi, n = ctx.phi, ctx.n
    if check_preconditions:
        pairs = [("M0<M", config.m0, None), ("M1<M", config.m1, None),
                 ("M2<M", config.m2, None), ("M0<M1", config.m0, config.m1),
                 ("M0<M2", config.m0, config.m2)]
        for name, ndom, adom in pairs:
            try:
                rep = prec_K(M, ndom, ctx, ambient=adom, check_good=check_good)
            except PreconditionError as e:
                raise PreconditionError(f"precondition {name} fails: {e}")
            if rep.holds is not True:
                raise PreconditionError(f"precondition {name} fails: {rep}")
    psi = phi.swapped()
    star = delta_star([psi, psi.negated()], n)
    oracle = TypeOracle(M, star.formulas, [], None)
    A_params = sorted(itertools.product(sorted(config.m1), repeat=phi.s))
    objs_m0 = sorted(itertools.product(sorted(config.m0), repeat=phi.r))
    sat_row = {(c, b): phi.holds(M, c, b) for c in objs_m0 for b in A_params}
    witnesses = {}
    for c in sorted(itertools.product(sorted(config.m2), repeat=phi.r)):
        target_sign = {b: phi.holds(M, c, b) for b in A_params}
        got = _search_average_witness(M, phi, objs_m0, A_params, ctx.kappa_K,
                                      ctx.lambda_K, target_sign, oracle, n,
                                      sat_row)
        if got == "budget":
            return AmalgamResult("budget", witnesses, c)
        if got is None:
            return AmalgamResult(False, witnesses, c)
        witnesses[c] = got
    return AmalgamResult(True, witnesses, None)


def symmetry_test(config: AmalgamConfig, check_preconditions: bool = True,
                  check_good: bool = True) -> dict:
    """Run the amalgamation check in both orientations and compare."""
    forward = stable_amalgam(config, check_preconditions, check_good)
    swapped = AmalgamConfig(config.M, config.m0, config.m2, config.m1, config.ctx)
    backward = stable_amalgam(swapped, check_preconditions, check_good)
    return {"forward": forward.holds, "backward": backward.holds,
            "symmetric": forward.holds == backward.holds,
            "forward_result": forward, "backward_result": backward}


# ---------------------------------------------------------------------------
# the exchange property
# ---------------------------------------------------------------------------


def exchange_check(I0, I1, M: Structure, phi: PartitionedFormula,
                   kappa_phi: int, kappa_psi: int,
                   lambda_delta: Optional[int] = None,
                   n: Optional[int] = None) -> dict:
    """Evaluate the two exchange conditions and assert their equivalence.

    Condition (i): all but kappa_phi members of I0 hit the psi-average of I1.
    Condition (ii): all but kappa_psi members of I1 hit the phi-average of I0.
    Both sequences must be longer than max(lambda_delta, k_phi + k_psi +
    k_phi * k_psi); when n is given, closure-indiscernibility of both
    sequences is verified first.
    """
    seq0 = I0 if isinstance(I0, TupleSequence) else TupleSequence.of(I0)
    seq1 = I1 if isinstance(I1, TupleSequence) else TupleSequence.of(I1)
    lam = max(lambda_delta or 0,
              kappa_phi + kappa_psi + kappa_phi * kappa_psi)
    if len(seq0) <= lam or len(seq1) <= lam:
        raise PreconditionError(f"both sequences must be longer than {lam}")
    psi = phi.swapped()
    if n is not None:
        star0 = delta_star([psi, psi.negated()], n)
        if len(seq0) >= n:
            cert = check_indiscernible(seq0, star0.formulas, n, [], M)
            if not cert.verified:
                raise PreconditionError("I0 is not closure-indiscernible")
        star1 = delta_star([phi, phi.negated()], n)
        if len(seq1) >= n:
            cert = check_indiscernible(seq1, star1.formulas, n, [], M)
            if not cert.verified:
                raise PreconditionError("I1 is not closure-indiscernible")
    m0, m1 = len(seq0), len(seq1)
    good_i = sum(1 for a in seq0
                 if sum(1 for c in seq1 if phi.holds(M, a, c)) >= kappa_psi)
    cond_i = good_i >= m0 - kappa_phi
    good_j = sum(1 for b in seq1
                 if sum(1 for c in seq0 if phi.holds(M, c, b)) >= kappa_phi)
    cond_ii = good_j >= m1 - kappa_psi
    return {"i_holds": cond_i, "ii_holds": cond_ii,
            "equivalent": cond_i == cond_ii}
