"""Indiscernible-sequence predicates, greedy extraction of end-indiscernible and
fully indiscernible subsequences, and the exact length-bound calculators that
say how long an input must be for extraction to be guaranteed.

The extraction returns are always re-verified against `check_indiscernible`,
which compares types directly and shares no code with the greedy search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

from .core import (PartitionedFormula, Structure, TupleSequence, tp)
from .util import PreconditionError, TooLargeError

# ---------------------------------------------------------------------------
# indiscernibility checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndiscernibilityCertificate:
    sequence: TupleSequence
    mode: str
    delta: tuple[PartitionedFormula, ...]
    m: int
    A: tuple[tuple[int, ...], ...]
    verified: bool
    counterexample: Optional[tuple[tuple[int, ...], tuple[int, ...]]]

    def to_report(self):
        return {"mode": self.mode, "m": self.m, "verified": self.verified,
                "length": len(self.sequence),
                "counterexample": None if self.counterexample is None
                else [list(self.counterexample[0]), list(self.counterexample[1])]}


class TypeOracle:
    """Memoized signed-type keys of concatenated tuples over a fixed (delta, A).

    Type equality is the hottest operation in extraction and in the searches
    built on it; the oracle computes each concatenation's type once.
    """

    def __init__(self, M: Structure, delta: Sequence[PartitionedFormula],
                 A: Iterable[tuple[int, ...]],
                 domain: Optional[frozenset[int]] = None):
        self.M = M
        self.delta = tuple(delta)
        self.A = sorted(tuple(b) for b in A)
        self.domain = domain
        self._cache: dict[tuple[int, ...], object] = {}

    def key(self, concat: tuple[int, ...]):
        got = self._cache.get(concat)
        if got is None:
            got = tp(self.delta, concat, self.A, self.M, domain=self.domain)
            self._cache[concat] = got
        return got


def check_indiscernible(I, delta: Sequence[PartitionedFormula], m: int,
                        A: Iterable[tuple[int, ...]], M: Structure,
                        mode: str = "sequence",
                        domain: Optional[frozenset[int]] = None,
                        oracle: Optional[TypeOracle] = None
                        ) -> IndiscernibilityCertificate:
    """Decide whether I is (delta, m)-indiscernible over A.

    mode "sequence" compares increasing m-selections, "set" compares all
    injective m-selections in every order, "end" compares two tails after a
    common increasing (m-1)-prefix. The first counterexample in lexicographic
    order over selection pairs is reported.
    """
    seq = I if isinstance(I, TupleSequence) else TupleSequence.of(I)
    if mode not in ("sequence", "set", "end"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if m < 1:
        raise PreconditionError("m must be >= 1")
    if len(seq) < m:
        raise PreconditionError(f"sequence of length {len(seq)} cannot host m={m} selections")
    A = sorted(tuple(b) for b in A)
    if oracle is None:
        oracle = TypeOracle(M, delta, A, domain)
    n = len(seq)

    def type_of(sel: tuple[int, ...]):
        return oracle.key(seq.concat(sel))

    cert = lambda ok, ce: IndiscernibilityCertificate(
        seq, mode, tuple(delta), m, tuple(A), ok, ce)

    if mode in ("sequence", "set"):
        if mode == "sequence":
            sels = itertools.combinations(range(n), m)
        else:
            sels = itertools.permutations(range(n), m)
        first = None
        ref = None
        for sel in sels:
            ty = type_of(sel)
            if ref is None:
                first, ref = sel, ty
            elif ty != ref:
                return cert(False, (first, sel))
        return cert(True, None)

    # end mode
    for prefix in itertools.combinations(range(n), m - 1):
        lo = (prefix[-1] + 1) if prefix else 0
        base_sel = None
        base_ty = None
        for j in range(lo, n):
            sel = prefix + (j,)
            ty = type_of(sel)
            if base_ty is None:
                base_sel, base_ty = sel, ty
            elif ty != base_ty:
                return cert(False, (base_sel, sel))
    return cert(True, None)


# ---------------------------------------------------------------------------
# growth functions and the length-bound calculators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorstCaseGrowth:
    """F(i) = 2^(i^m): no assumption on how many types a parameter set allows."""
    m: int

    def value(self, i: int) -> int:
        return 2 ** (i ** self.m)


@dataclass(frozen=True)
class PolynomialGrowth:
    """F(i) = i^p: the polynomial-type-count regime."""
    p: int

    def value(self, i: int) -> int:
        return i ** self.p


@dataclass(frozen=True)
class HypergraphWorstGrowth:
    """F(i) = 2^C(i, r-1): vertex types over i points of an r-uniform edge relation."""
    r: int

    def value(self, i: int) -> int:
        from math import comb
        return 2 ** comb(i, self.r - 1)


@dataclass(frozen=True)
class HypergraphBoundedGrowth:
    """F(i) = 1 below r, else i^((r-1)(n-1)): the no-n-independence regime."""
    r: int
    n: int

    def value(self, i: int) -> int:
        if i < self.r:
            return 1
        return i ** ((self.r - 1) * (self.n - 1))


@dataclass(frozen=True)
class ConstantGrowth:
    """F(i) = c: totally homogeneous relations."""
    c: int

    def value(self, i: int) -> int:
        return self.c


GrowthFunction = Union[WorstCaseGrowth, PolynomialGrowth, HypergraphWorstGrowth,
                       HypergraphBoundedGrowth, ConstantGrowth]


@dataclass(frozen=True)
class BoundParams:
    """Parameters of the extraction length bounds: growth function F, parameter
    set size alpha, tuple arity r, selection width m, and target length k."""

    F: GrowthFunction
    alpha: int
    r: int
    m: int
    k: int

    def __post_init__(self):
        if min(self.alpha, self.r, self.m, self.k) < 0:
            raise PreconditionError("bound parameters must be naturals")


def f_star(params: BoundParams, j: int) -> int:
    """The staged recursion F*(0)=1, F*(j+1) = 1 + F*(j) * F(alpha + m*r*j) while
    j < k-2-m, switching to F*(j+1) = 1 + F*(j) on the final m stages.

    Exact integers throughout; j must satisfy 0 <= j <= k-2.
    """
    k, m = params.k, params.m
    if not (0 <= j <= k - 2):
        raise PreconditionError(f"j must satisfy 0 <= j <= k-2 = {k - 2}")
    v = 1
    for jj in range(j):
        if jj < k - 2 - m:
            v = 1 + v * params.F.value(params.alpha + m * params.r * jj)
        else:
            v = 1 + v
    return v


_EVAL_GUARD = 2_000_000


def _end_need(F: GrowthFunction, alpha: int, r: int, m: int, K: int,
              offset: int = 0) -> int:
    """Input length guaranteeing the greedy end-extraction reaches length K.

    Backward pigeonhole bookkeeping over the refinement steps j = m-1 .. K-2,
    where at step j the candidate pool splits into at most
    F(alpha + offset + m*r*j) classes; `offset` accounts for elements already
    frozen into the formula by outer recursion levels. Exact integers; growth
    is doubly exponential in general.
    """
    if K <= m:
        return max(K, 0)
    if K - 2 > _EVAL_GUARD:
        raise TooLargeError("length bound has too many stages to evaluate")
    req = 1
    for j in range(K - 2, m - 2, -1):
        divisor = max(F.value(alpha + offset + m * r * j), 1)
        req = divisor * req + 1
        if req.bit_length() > 4_000_000:
            raise TooLargeError("length bound exceeds the size guard")
    return (m - 1) + req


def g_func(params: BoundParams, i: int, x: int) -> int:
    """Sufficient raw input length for extracting an (phi, i)-indiscernible
    subsequence of length x+1; g_0 is the identity.

    Level l >= 2 peels one element, extracts end-indiscernibles for the
    suffix-fixed formula, and recurses one level down at target x-1, so the
    bound composes the end-extraction need with the next level's bound. The
    class-count argument at level l is widened by the i*r*(i-l) elements
    already frozen into the formula above it.
    """
    if x < 0:
        raise PreconditionError("bound underflow")
    if i < 0:
        raise PreconditionError("level must be a natural")
    if i == 0:
        return x
    top = i

    def go(level: int, x: int) -> int:
        if x == 0:
            return 1
        if level == 1:
            K = x + 1
        else:
            inner = go(level - 1, x - 1)
            if inner > _EVAL_GUARD:
                raise TooLargeError("length bound too large to compose")
            K = inner + 1
        offset = top * params.r * (top - level)
        return _end_need(params.F, params.alpha, params.r, level, K, offset)

    return go(i, x)


def beth(i: int, x: int) -> int:
    """Iterated exponential: beth(0, x) = x, beth(i, x) = 2^beth(i-1, x)."""
    if i < 0 or x < 0:
        raise PreconditionError("beth arguments must be naturals")
    v = x
    for _ in range(i):
        if v > 5_000_000:
            raise TooLargeError("beth value exceeds the size guard")
        v = 2 ** v
    return v


def ceil_log2(x: int) -> int:
    if x < 1:
        raise PreconditionError("ceil_log2 needs a positive integer")
    return (x - 1).bit_length()


def extraction_length_estimates(case: int, m: int, k: int,
                                p_or_n: Optional[int] = None,
                                s: Optional[int] = None,
                                t: Optional[int] = None) -> dict:
    """Closed-form estimates for how long an input must be before an
    m-indiscernible subsequence of length k is guaranteed.

    case 1: worst-case growth; the m-fold log of the bound is at most 4k.
    case 2: polynomial growth i^p; m-fold log at most 2mk + log2 k + log2 p.
    case 3: no k'-independence with parameter n; bound beth(m, 2k + log2 k
            + log2 n + log2 m).
    case 4: no n-order pattern; bound beth(m, 2k + log2 k + (3ns)^(t+1)).
    Logs are ceilings of bit length so the estimates stay upper bounds.
    """
    if m < 1 or k < 1:
        raise PreconditionError("m and k must be positive")
    if case == 1:
        return {"case": 1, "log_level": m, "bound": 4 * k}
    if case == 2:
        if p_or_n is None or p_or_n < 1:
            raise PreconditionError("case 2 needs the polynomial degree p >= 1")
        return {"case": 2, "log_level": m,
                "bound": 2 * m * k + ceil_log2(k) + ceil_log2(p_or_n)}
    if case == 3:
        if p_or_n is None or p_or_n < 1:
            raise PreconditionError("case 3 needs the independence parameter n >= 1")
        inner = 2 * k + ceil_log2(k) + ceil_log2(p_or_n) + ceil_log2(m)
        return {"case": 3, "inner": inner, "bound": beth(m, inner)}
    if case == 4:
        if p_or_n is None or s is None or t is None:
            raise PreconditionError("case 4 needs n, s and t")
        inner = 2 * k + ceil_log2(k) + (3 * p_or_n * s) ** (t + 1)
        return {"case": 4, "inner": inner, "bound": beth(m, inner)}
    raise PreconditionError(f"unknown case {case}")


# ---------------------------------------------------------------------------
# greedy extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionTrace:
    """Chosen positions plus, per refinement step, (step index, class count,
    size of the class kept). Kept-class sizes strictly decrease."""

    chosen: tuple[int, ...]
    steps: tuple[tuple[int, int, int], ...]

    def to_report(self):
        return {"chosen": list(self.chosen),
                "steps": [{"j": j, "classes": c, "kept": s} for j, c, s in self.steps]}


@dataclass(frozen=True)
class ExtractionFailure:
    level: int
    reason: str

    def to_report(self):
        return {"level": self.level, "reason": self.reason}


def greedy_end_extraction(length: int, m: int,
                          key_of: Callable[[tuple[int, ...], int], object],
                          target: Optional[int] = None
                          ) -> tuple[list[int], ExtractionTrace]:
    """Largest-class greedy over positions 0..length-1.

    The first m-1 positions are kept as the prefix; from step m-1 on, the
    candidate pool is split by `key_of(chosen_positions, candidate)`, the
    largest class survives (ties to the class holding the smallest position),
    and its least position is chosen. Runs until the pool empties or `target`
    positions are chosen.
    """
    if m < 1:
        raise PreconditionError("m must be >= 1")
    upto = length if target is None else min(target, length)
    chosen: list[int] = list(range(min(m - 1, upto)))
    pool = list(range(m - 1, length))
    steps: list[tuple[int, int, int]] = []
    while pool and len(chosen) < (length if target is None else target):
        classes: dict[object, list[int]] = {}
        for cand in pool:
            classes.setdefault(key_of(tuple(chosen), cand), []).append(cand)
        best = max(classes.values(), key=lambda c: (len(c), -c[0]))
        steps.append((len(chosen), len(classes), len(best)))
        chosen.append(best[0])
        pool = best[1:]
    return chosen, ExtractionTrace(tuple(chosen), tuple(steps))


def _formula_key(seq: TupleSequence, phi_holds: Callable, pars: list, m: int):
    """Key function comparing the candidate's joint type with every increasing
    (m-1)-selection of the already chosen positions."""
    memo: dict[tuple, bool] = {}

    def holds(obj: tuple[int, ...], b: tuple[int, ...]) -> bool:
        k = (obj, b)
        got = memo.get(k)
        if got is None:
            got = phi_holds(obj, b)
            memo[k] = got
        return got

    def key_of(chosen: tuple[int, ...], cand: int):
        out = []
        for sel in itertools.combinations(chosen, m - 1):
            obj = seq.concat(sel + (cand,))
            out.append(tuple(holds(obj, b) for b in pars))
        return tuple(out)

    return key_of


def extract_end_indiscernible(I, phi: PartitionedFormula, m: int,
                              A: Iterable[tuple[int, ...]], M: Structure,
                              k: Optional[int] = None
                              ) -> Union[tuple[TupleSequence, ExtractionTrace],
                                         ExtractionFailure]:
    """Greedy extraction of a (phi, m)-end-indiscernible subsequence over A.

    phi's object block must cover m sequence entries (object arity m times the
    tuple arity). With k given, the extraction stops at length k and fails if
    it cannot get there; with k omitted it runs to exhaustion. The result is
    re-verified by check_indiscernible before being returned.
    """
    seq = I if isinstance(I, TupleSequence) else TupleSequence.of(I)
    if m < 1:
        raise PreconditionError("m must be >= 1")
    if phi.r != m * seq.tuple_arity:
        raise PreconditionError(
            f"object arity {phi.r} does not cover m={m} entries of arity {seq.tuple_arity}")
    A = sorted(tuple(b) for b in A)
    pars = [()] if phi.s == 0 else [b for b in A if len(b) == phi.s]
    key_of = _formula_key(seq, lambda obj, b: phi.holds(M, obj, b), pars, m)
    chosen, trace = greedy_end_extraction(len(seq), m, key_of, target=k)
    if k is not None and len(chosen) < k:
        return ExtractionFailure(m, f"extraction stalled at length {len(chosen)} < {k}")
    out = TupleSequence.of([seq[p] for p in chosen], seq.tuple_arity)
    if len(out) >= m:  # shorter outputs are vacuously end-indiscernible
        cert = check_indiscernible(out, [phi], m, A, M, mode="end")
        if not cert.verified:
            return ExtractionFailure(m, "output failed end-indiscernibility re-verification")
    return out, trace


def extract_indiscernible(I, phi: PartitionedFormula, m: int,
                          A: Iterable[tuple[int, ...]], M: Structure, k: int
                          ) -> Union[TupleSequence, ExtractionFailure]:
    """Extract a (phi, m)-indiscernible subsequence of length >= k.

    Level 1 is end-extraction (end-indiscernible and indiscernible coincide).
    At level m, the end-extraction runs to exhaustion, the last entry c is
    frozen into the formula (an index permutation on concatenated tuples, not
    a formula rewrite), the recursion continues one level down on the rest,
    and c is appended. The final output is re-verified as a full
    indiscernible sequence.
    """
    seq = I if isinstance(I, TupleSequence) else TupleSequence.of(I)
    if m < 1:
        raise PreconditionError("m must be >= 1")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    if phi.r != m * seq.tuple_arity:
        raise PreconditionError(
            f"object arity {phi.r} does not cover m={m} entries of arity {seq.tuple_arity}")
    A = sorted(tuple(b) for b in A)
    arity = seq.tuple_arity

    def level_extract(items: list[tuple[int, ...]], level: int, want: int,
                      suffix: tuple[int, ...]) -> Union[list[tuple[int, ...]],
                                                        ExtractionFailure]:
        pars = [()] if phi.s == 0 else [b for b in A if len(b) == phi.s]
        local = TupleSequence.of(items, arity) if items else None
        if want <= 0:
            return []
        if len(items) < want:
            return ExtractionFailure(level, f"only {len(items)} entries for target {want}")

        def holds(obj: tuple[int, ...], b: tuple[int, ...]) -> bool:
            return phi.holds(M, obj + suffix, b)

        key_of = _formula_key(local, holds, pars, level)
        if level == 1:
            chosen, _ = greedy_end_extraction(len(items), 1, key_of, target=want)
            if len(chosen) < want:
                return ExtractionFailure(level, f"stalled at length {len(chosen)} < {want}")
            return [items[p] for p in chosen]
        chosen, _ = greedy_end_extraction(len(items), level, key_of, target=None)
        if not chosen:
            return ExtractionFailure(level, "empty end-extraction")
        picked = [items[p] for p in chosen]
        c = picked[-1]
        rest = level_extract(picked[:-1], level - 1, want - 1, c + suffix)
        if isinstance(rest, ExtractionFailure):
            return rest
        return rest + [c]

    got = level_extract(list(seq), m, k, ())
    if isinstance(got, ExtractionFailure):
        return got
    out = TupleSequence.of(got, arity)
    if len(out) >= m:  # shorter outputs are vacuously indiscernible
        cert = check_indiscernible(out, [phi], m, A, M, mode="sequence")
        if not cert.verified:
            return ExtractionFailure(m, "output failed full-indiscernibility re-verification")
    return out
