"""Counting realized local types, polynomial bound verification, and the
Sauer-Shelah shattering finder.

Bound right-hand sides are computed in exact integer arithmetic. When a bound
is too large to materialize (the no-order-pattern bound has a doubly
exponential exponent), the comparison is still decided exactly by comparing
exponents; nothing ever saturates silently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from decimal import Decimal, getcontext
from typing import Iterable, Optional

from .core import PartitionedFormula, Structure, realized_types
from .detect import build_rho, find_k_independence, find_n_order
from .util import BudgetExceeded, PreconditionError, TooLargeError

# materialize bound values only up to this many bits
_MATERIALIZE_BITS = 1 << 20


@dataclass(frozen=True)
class BoundReport:
    """Result of checking |S_phi(A,M)| against a closed-form bound."""

    lhs: int
    rhs: Optional[int]            # None when too large to materialize
    rhs_factor: int               # bound is rhs_factor * rhs_base ** rhs_exponent
    rhs_base: int
    rhs_exponent: int
    params: dict
    holds: bool
    hypothesis_ok: bool
    note: str = ""

    def to_report(self):
        return {"lhs": self.lhs, "rhs": self.rhs,
                "rhs_factor": self.rhs_factor, "rhs_base": self.rhs_base,
                "rhs_exponent": self.rhs_exponent, "params": self.params,
                "holds": self.holds, "hypothesis_ok": self.hypothesis_ok,
                "note": self.note}


@dataclass(frozen=True)
class ShatterWitness:
    """Points alpha_i and selector sets A_w with i in w iff alpha_i in A_w."""

    alphas: tuple[int, ...]
    selectors: dict[frozenset[int], frozenset[int]]

    def to_report(self):
        from .formats import subset_key
        return {"alphas": list(self.alphas),
                "selectors": {subset_key(w): sorted(s) for w, s in self.selectors.items()}}


def count_phi_types(M: Structure, phi: PartitionedFormula,
                    A: Iterable[tuple[int, ...]]) -> int:
    """|S_phi(A, M)| over object tuples of arity l(x)."""
    A = [tuple(b) for b in A]
    if not A:
        raise PreconditionError("A must be nonempty")
    delta = [phi, phi.negated()]
    return len(realized_types(delta, A, M, phi.r))


def _leq_power(lhs: int, factor: int, base: int, exponent: int) -> bool:
    """Decide lhs <= factor * base**exponent without materializing the power."""
    if lhs <= factor:
        return True
    if base <= 1:
        return lhs <= factor * base ** min(exponent, 1)
    # lhs <= factor * base^e  iff  ceil(lhs/factor) <= base^e
    need = -(-lhs // factor)
    # compare bit lengths first, then logarithms via exact integer powers
    e_needed = 0
    v = 1
    while v < need and e_needed <= exponent:
        v *= base
        e_needed += 1
    return e_needed <= exponent and v >= need


def verify_order_bound(M: Structure, phi: PartitionedFormula,
                       A: Iterable[tuple[int, ...]], n: int) -> BoundReport:
    """Check |S_phi(A,M)| <= 2n * |A|^(2^((3ns)^(t+1))) under the no-order hypothesis.

    The hypothesis is that the comparison formula rho = build_rho(phi) has no
    n-order witness; it is checked by the exhaustive search and a failing
    hypothesis is flagged on the report rather than raised.
    """
    A = sorted(tuple(b) for b in A)
    if len(A) < 2:
        raise PreconditionError("requires |A| >= 2")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    s, t = phi.s, phi.t
    k = 2 ** ((3 * n * s) ** (t + 1))
    factor = 2 * n
    base = len(A)
    lhs = count_phi_types(M, phi, A)
    rho = build_rho(phi)
    wit = find_n_order(M, rho, n)
    hypothesis_ok = wit is None
    note = "" if hypothesis_ok else "hypothesis fails"
    if isinstance(wit, BudgetExceeded):
        hypothesis_ok = False
        note = "hypothesis check exhausted its budget"
    rhs: Optional[int] = None
    if k * max(base.bit_length(), 1) <= _MATERIALIZE_BITS:
        rhs = factor * base ** k
    holds = _leq_power(lhs, factor, base, k)
    return BoundReport(lhs=lhs, rhs=rhs, rhs_factor=factor, rhs_base=base,
                       rhs_exponent=k,
                       params={"n": n, "r": phi.r, "s": s, "t": t, "|A|": len(A)},
                       holds=holds, hypothesis_ok=hypothesis_ok, note=note)


def verify_independence_bound(M: Structure, phi: PartitionedFormula,
                              A: Iterable[tuple[int, ...]], k: int) -> BoundReport:
    """Check |S_phi(A,M)| <= |A|^(s(k-1)) under the no-independence hypothesis."""
    A = sorted(tuple(b) for b in A)
    if len(A) < 2:
        raise PreconditionError("requires |A| >= 2")
    if k < 1:
        raise PreconditionError("k must be >= 1")
    wit = find_k_independence(M, phi, k)
    hypothesis_ok = wit is None
    note = "" if hypothesis_ok else "hypothesis fails"
    if isinstance(wit, BudgetExceeded):
        hypothesis_ok = False
        note = "hypothesis check exhausted its budget"
    base = len(A)
    exponent = phi.s * (k - 1)
    lhs = count_phi_types(M, phi, A)
    rhs: Optional[int] = None
    if exponent * max(base.bit_length(), 1) <= _MATERIALIZE_BITS:
        rhs = base ** exponent
    holds = _leq_power(lhs, 1, base, exponent) if exponent > 0 else lhs <= 1
    return BoundReport(lhs=lhs, rhs=rhs, rhs_factor=1, rhs_base=base,
                       rhs_exponent=exponent,
                       params={"k": k, "r": phi.r, "s": phi.s, "t": phi.t, "|A|": len(A)},
                       holds=holds, hypothesis_ok=hypothesis_ok, note=note)


# ---------------------------------------------------------------------------
# Sauer-Shelah
# ---------------------------------------------------------------------------


def sauer_bound(ground_size: int, k: int) -> int:
    """sum_{i<k} C(ground_size, i): families larger than this must shatter a k-set."""
    from math import comb
    return sum(comb(ground_size, i) for i in range(k))


def find_shattered(family: Iterable[Iterable[int]], k: int,
                   ground: Optional[Iterable[int]] = None
                   ) -> Optional[ShatterWitness]:
    """First k-subset of the ground set shattered by the family, or None.

    Candidates are enumerated lexicographically; a candidate is accepted only
    when all 2^k trace cells are inhabited, and the necessary-condition count
    (at least 2^k distinct traces) is exactly that test, done with bitmasks.
    """
    if k < 1:
        raise PreconditionError("k must be >= 1")
    sets = [frozenset(s) for s in family]
    if ground is None:
        g: set[int] = set()
        for s in sets:
            g |= s
        ground_list = sorted(g)
    else:
        ground_list = sorted(set(ground))
    pos = {e: i for i, e in enumerate(ground_list)}
    masks = []
    for s in sets:
        m = 0
        for e in s:
            if e in pos:
                m |= 1 << pos[e]
        masks.append(m)
    npat = 1 << k
    for cand in itertools.combinations(range(len(ground_list)), k):
        first_for: dict[int, int] = {}
        for idx, m in enumerate(masks):
            pat = 0
            for j, e in enumerate(cand):
                if (m >> e) & 1:
                    pat |= 1 << j
            if pat not in first_for:
                first_for[pat] = idx
                if len(first_for) == npat:
                    break
        if len(first_for) == npat:
            alphas = tuple(ground_list[e] for e in cand)
            selectors = {
                frozenset(i for i in range(k) if (pat >> i) & 1):
                    frozenset(sets[first_for[pat]])
                for pat in range(npat)}
            return ShatterWitness(alphas, selectors)
    return None


def verify_shattered(w: ShatterWitness) -> bool:
    k = len(w.alphas)
    if set(w.selectors) != {frozenset(c) for r in range(k + 1)
                            for c in itertools.combinations(range(k), r)}:
        return False
    for wset, chosen in w.selectors.items():
        for i, alpha in enumerate(w.alphas):
            if (alpha in chosen) != (i in wset):
                return False
    return True


# ---------------------------------------------------------------------------
# exact arithmetic for the chained inequality behind the no-order bound
# ---------------------------------------------------------------------------


def no_order_exponent(n: int, s: int, t: int) -> int:
    """The exponent k = 2^((3ns)^(t+1)) of the no-order type bound, exact."""
    return 2 ** ((3 * n * s) ** (t + 1))


def compare_powers(base1: int, exp1: int, base2: int, exp2: int) -> int:
    """Exact sign of base1^exp1 - base2^exp2 for bases >= 2, without materializing.

    Decided by comparing exp * log2(base) at increasing decimal precision; the
    result is certified by requiring a separation margin well above the
    rounding error, and equal values are detected structurally.
    """
    if base1 < 2 or base2 < 2 or exp1 < 0 or exp2 < 0:
        raise PreconditionError("compare_powers needs bases >= 2 and natural exponents")
    if base1 == base2:
        return (exp1 > exp2) - (exp1 < exp2)
    # detect exact equality through powers of two
    def pow2_form(b, e):
        if b & (b - 1) == 0:
            return (b.bit_length() - 1) * e
        return None
    p1, p2 = pow2_form(base1, exp1), pow2_form(base2, exp2)
    if p1 is not None and p2 is not None:
        return (p1 > p2) - (p1 < p2)
    for prec in (50, 120, 300, 1000):
        getcontext().prec = prec
        l1 = Decimal(exp1) * Decimal(base1).ln() / Decimal(2).ln()
        l2 = Decimal(exp2) * Decimal(base2).ln() / Decimal(2).ln()
        diff = l1 - l2
        margin = Decimal(10) ** (max(l1.adjusted(), l2.adjusted(), 0) - prec + 10)
        if abs(diff) > margin:
            return 1 if diff > 0 else -1
    raise TooLargeError("could not separate the two powers at precision 1000")


def chained_inequality(n: int, s: int, t: int, m: int) -> bool:
    """The exact inequality m^(k - (3ns)^(2n)) > 2^(c^s) * c^((3ns)^(2n))
    with c = 2^(2 + (3sn)^t) and k = 2^((3ns)^(t+1)).

    Both sides are compared through their exponents in exact arithmetic; for
    m not a power of two the comparison goes through certified high-precision
    logarithms.
    """
    if m < 2:
        raise PreconditionError("m must be >= 2")
    k = no_order_exponent(n, s, t)
    q = (3 * n * s) ** (2 * n)
    c_exp = 2 + (3 * s * n) ** t          # c = 2^c_exp
    rhs_exp2 = 2 ** (c_exp * s) + q * c_exp   # log2 of 2^(c^s) * c^q
    lhs_exp = k - q
    if lhs_exp < 0:
        return False
    if m == 2:
        return lhs_exp > rhs_exp2
    return compare_powers(m, lhs_exp, 2, rhs_exp2) > 0


def exponent_dominates(n: int, s: int, t: int, reading: str = "closed-early") -> bool:
    """The k-side inequality the chained bound reduces to, in both readings.

    closed-early: k > (c^s + (3ns)^(2n) * (2 + (3ns)^t)) + (3ns)^(2n)
    late:         k > c^s + (3ns)^(2n) * (2 + (3ns)^t + (3ns)^(2n))
    """
    k = no_order_exponent(n, s, t)
    q = (3 * n * s) ** (2 * n)
    c_exp = 2 + (3 * s * n) ** t
    cs = 2 ** (c_exp * s)
    if reading == "closed-early":
        return k > (cs + q * c_exp) + q
    if reading == "late":
        return k > cs + q * (c_exp + q)
    raise PreconditionError(f"unknown reading {reading!r}")
