"""Uniform hypergraphs, coupon-collector exact probabilities, seeded random
graph experiments, monochromatic-subset extraction, and the bound comparisons
between the general Ramsey estimates and the independence-bounded ones.

Random sampling is reproducible by construction: every trial derives its own
SplitMix64 stream from (seed, trial index), and edges are drawn in a fixed
documented order, so equal seeds give bit-identical results.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Optional, Sequence, Union

from .core import Signature, Structure
from .indisc import ExtractionFailure, ceil_log2, greedy_end_extraction
from .util import (FmlabError, PreconditionError, SplitMix64, TooLargeError,
                   mix_seed)


# ---------------------------------------------------------------------------
# r-graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RGraph:
    """A set of vertices 0..n-1 with a set of r-element subsets as edges."""

    n: int
    r: int
    edges: frozenset[tuple[int, ...]]

    def __post_init__(self):
        if self.r < 1 or self.n < 0:
            raise FmlabError("need r >= 1 and n >= 0")
        for e in self.edges:
            if len(e) != self.r or len(set(e)) != self.r or tuple(sorted(e)) != e:
                raise FmlabError(f"edge {e} is not a sorted {self.r}-subset")
            if not all(0 <= v < self.n for v in e):
                raise FmlabError(f"edge {e} out of range")

    @staticmethod
    def of(n: int, r: int, edges: Iterable[Iterable[int]]) -> "RGraph":
        return RGraph(n, r, frozenset(tuple(sorted(e)) for e in edges))

    def has_edge(self, vertices: Iterable[int]) -> bool:
        return tuple(sorted(vertices)) in self.edges

    def to_structure(self) -> Structure:
        """Encode as a structure with one symmetric irreflexive r-ary relation."""
        tuples = set()
        for e in self.edges:
            tuples.update(itertools.permutations(e))
        return Structure(Signature((("R", self.r),)), self.n, {"R": tuples})

    @staticmethod
    def from_structure(M: Structure, rel: str = "R") -> "RGraph":
        r = M.signature.arity(rel)
        edges = set()
        for t in M.relations[rel]:
            if len(set(t)) != r:
                raise FmlabError(f"tuple {t} has repeated entries; not an r-graph relation")
            edges.add(tuple(sorted(t)))
        expect = set()
        for e in edges:
            expect.update(itertools.permutations(e))
        if expect != set(M.relations[rel]):
            raise FmlabError(f"relation {rel} is not closed under permutations")
        return RGraph(M.universe_size, r, frozenset(edges))


# ---------------------------------------------------------------------------
# coupon collector
# ---------------------------------------------------------------------------


def stirling2(n: int, m: int) -> int:
    """Stirling number of the second kind by the standard recurrence."""
    if n < 0 or m < 0:
        raise PreconditionError("stirling2 needs naturals")
    if m == 0:
        return 1 if n == 0 else 0
    prev = [1] + [0] * m
    for _ in range(n):
        cur = [0] * (m + 1)
        for j in range(1, m + 1):
            cur[j] = j * prev[j] + prev[j - 1]
        prev = cur
    return prev[m]


def coupon_q(n: int, m: int) -> Fraction:
    """Probability that n balls thrown uniformly into m boxes leave none empty.

    Computed by inclusion-exclusion as an exact rational and cross-checked on
    every call against the Stirling form m! * S(n, m) / m^n.
    """
    if n < 0 or m < 0:
        raise PreconditionError("coupon_q needs naturals")
    if m == 0:
        return Fraction(1) if n == 0 else Fraction(0)
    total = Fraction(0)
    for i in range(m + 1):
        term = Fraction(m - i, m) ** n
        total += (term if i % 2 == 0 else -term) * comb(m, i)
    stirling_form = Fraction(factorial(m) * stirling2(n, m), m ** n)
    if total != stirling_form:
        raise FmlabError("internal inconsistency between the two coupon forms")
    return total


def lambda_nk(n: int, k: int) -> float:
    """The occupancy parameter 2^k * exp(-(n-k)/2^k)."""
    if not (n >= k >= 1):
        raise PreconditionError("need n >= k >= 1")
    return (2 ** k) * math.exp(-(n - k) / (2 ** k))


# ---------------------------------------------------------------------------
# seeded sampling
# ---------------------------------------------------------------------------


def sample_graph_rows(n: int, rng: SplitMix64,
                      edge_probability: Fraction = Fraction(1, 2)) -> list[int]:
    """Adjacency bitmask rows of a random graph.

    Edges are decided in row-major upper-triangle order (0,1), (0,2), ...,
    (n-2,n-1): one stream bit per edge at probability 1/2, otherwise one
    64-bit draw compared against p * 2^64.
    """
    rows = [0] * n
    fair = edge_probability == Fraction(1, 2)
    threshold = int(edge_probability * (1 << 64))
    for i in range(n):
        for j in range(i + 1, n):
            bit = rng.bit() if fair else int(rng.next_u64() < threshold)
            if bit:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
    return rows


def graph_has_k_independence(rows: Sequence[int], n: int, k: int) -> bool:
    """Does any k-set of vertices realize all 2^k adjacency patterns?

    Patterns may be realized by any vertex, including the chosen ones; the
    check intersects row bitmasks and exits on the first empty cell.
    """
    full = (1 << n) - 1
    for combo in itertools.combinations(range(n), k):
        ok = True
        for w in range(1 << k):
            mask = full
            for i, v in enumerate(combo):
                mask &= rows[v] if (w >> i) & 1 else full & ~rows[v]
                if not mask:
                    break
            if not mask:
                ok = False
                break
        if ok:
            return True
    return False


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    k: int
    trials: int
    seed: int
    edge_probability: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.trials < 1:
            raise PreconditionError("trials must be >= 1")
        if not (0 < self.edge_probability < 1):
            raise PreconditionError("edge probability must be strictly between 0 and 1")


def independence_probability_mc(config: ExperimentConfig) -> dict:
    """Monte Carlo estimate of the probability that a random graph has the
    k-independence property, with the per-tuple coupon value and union bound.

    Trial t uses the stream seeded by mix_seed(seed, t); estimates with equal
    seeds are bit-identical.
    """
    n, k = config.n, config.k
    if not (n > k >= 1):
        raise PreconditionError("need n > k >= 1")
    hits = 0
    for t in range(config.trials):
        rng = SplitMix64(mix_seed(config.seed, t))
        rows = sample_graph_rows(n, rng, config.edge_probability)
        if graph_has_k_independence(rows, n, k):
            hits += 1
    p = hits / config.trials
    stderr = math.sqrt(p * (1 - p) / config.trials)
    lam = lambda_nk(n, k)
    return {"n": n, "k": k, "trials": config.trials, "seed": config.seed,
            "estimate": p, "stderr": stderr,
            "exact_per_tuple": coupon_q(n - k, 2 ** k),
            "union_bound": (n ** k) * math.exp(-lam)}


def fixed_witness_trial(n: int, k: int, rng: SplitMix64) -> bool:
    """One trial of the event: the fixed vertices 0..k-1 witness k-independence.

    Draw order: the inner edges among the fixed vertices in row-major order,
    then for each outer vertex its k adjacency bits to vertices 0..k-1 (bit i
    of the trace is adjacency to vertex i). Realizing tuples may be any
    vertex, so the insider traces (which exclude self-adjacency) count too.
    """
    inner = {}
    for i in range(k):
        for j in range(i + 1, k):
            inner[(i, j)] = rng.bit()
    patterns = set()
    for i in range(k):
        t = 0
        for j in range(k):
            if j != i and inner[(min(i, j), max(i, j))]:
                t |= 1 << j
        patterns.add(t)
    for _ in range(n - k):
        t = 0
        for i in range(k):
            if rng.bit():
                t |= 1 << i
        patterns.add(t)
    return len(patterns) == (1 << k)


def exact_fixed_witness_probability(n: int, k: int) -> Fraction:
    """Exact probability of the fixed-witness event by enumerating the
    relevant edge bits (inner edges plus outer adjacency bits)."""
    inner_bits = comb(k, 2)
    outer = n - k
    npat = 1 << k
    total = Fraction(0)
    one = Fraction(1, 2 ** (k * outer))
    for mask in range(1 << inner_bits):
        bits = {}
        idx = 0
        for i in range(k):
            for j in range(i + 1, k):
                bits[(i, j)] = (mask >> idx) & 1
                idx += 1
        insider = set()
        for i in range(k):
            t = 0
            for j in range(k):
                if j != i and bits[(min(i, j), max(i, j))]:
                    t |= 1 << j
            insider.add(t)
        count = 0
        for traces in itertools.product(range(npat), repeat=outer):
            if insider.union(traces) == set(range(npat)):
                count += 1
        total += Fraction(count) * one
    return total / (1 << inner_bits)


def independence_trend(k_list: Sequence[int], trials: int, seed: int) -> list[dict]:
    """Fixed-witness-set estimates at the threshold size n = k + ceil(2^k ln k).

    For each k the row reports the Monte Carlo estimate that vertices 0..k-1
    witness k-independence in a random graph on n vertices, its standard
    error, the outside-fillers coupon value q(n-k, 2^k), and the union bound.
    """
    rows = []
    for k in k_list:
        if k < 2:
            raise PreconditionError("trend needs k >= 2")
        n = k + math.ceil((2 ** k) * math.log(k))
        if n > 3001:
            raise PreconditionError(f"k={k} exceeds the desk-scale guard (n={n})")
        hits = 0
        row_seed = mix_seed(seed, k)
        for t in range(trials):
            rng = SplitMix64(mix_seed(row_seed, t))
            if fixed_witness_trial(n, k, rng):
                hits += 1
        p = hits / trials
        stderr = math.sqrt(p * (1 - p) / trials)
        lam = lambda_nk(n, k)
        rows.append({"k": k, "n": n, "trials": trials,
                     "estimate": p, "stderr": stderr,
                     "exact_per_tuple": coupon_q(n - k, 2 ** k),
                     "union_bound": (n ** k) * math.exp(-lam)})
    return rows


# ---------------------------------------------------------------------------
# length-bound specializations for r-graphs
# ---------------------------------------------------------------------------


def hypergraph_F(r: int, variant: str, i: int, n: Optional[int] = None) -> int:
    """Class-count growth for vertex types over i points of an r-graph.

    variant "worst": 2^C(i, r-1). variant "bounded" (no n-independence):
    1 below i = r, else i^((r-1)(n-1)).
    """
    if r < 2:
        raise PreconditionError("r must be >= 2")
    if i < 0:
        raise PreconditionError("i must be a natural")
    if variant == "worst":
        return 2 ** comb(i, r - 1)
    if variant == "bounded":
        if n is None or n < 1:
            raise PreconditionError("bounded variant needs n >= 1")
        return 1 if i < r else i ** ((r - 1) * (n - 1))
    raise PreconditionError(f"unknown variant {variant!r}")


def hypergraph_fstar(r: int, variant: str, k: int, n: Optional[int] = None) -> int:
    """Multiplicative envelope G(0)=1, G(t+1) = 1 + G(t) * F(r t), evaluated at k.

    In the worst case it stays below 2^(k^r); in the bounded case below
    k^((r-1)(n-1)k).
    """
    if k < 0:
        raise PreconditionError("k must be a natural")
    v = 1
    for t in range(k):
        v = 1 + v * hypergraph_F(r, variant, r * t, n=n)
        if v.bit_length() > 4_000_000:
            raise TooLargeError("envelope exceeds the size guard")
    return v


def E_bound(p: int, j: int, x: int) -> int:
    """The j-fold iterate at x of E(a) = (a+1)^(p(a+1)), exact."""
    if p < 1 or j < 1 or x < 0:
        raise PreconditionError("need p >= 1, j >= 1, x >= 0")
    v = x
    for _ in range(j):
        bits = (v + 1).bit_length() * p * (v + 1)
        if bits > 4_000_000:
            raise TooLargeError("iterate exceeds the size guard")
        v = (v + 1) ** (p * (v + 1))
    return v


# ---------------------------------------------------------------------------
# monochromatic extraction
# ---------------------------------------------------------------------------


def verify_homogeneous(G: RGraph, vertices: Iterable[int], tag: str) -> bool:
    vs = sorted(set(vertices))
    if tag not in ("complete", "empty"):
        return False
    for sub in itertools.combinations(vs, G.r):
        if (sub in G.edges) != (tag == "complete"):
            return False
    return True


def _halving_chain(G: RGraph, vertices: Sequence[int], k: int
                   ) -> Union[tuple[frozenset[int], str], ExtractionFailure]:
    """Classical halving for 2-graphs: follow the larger adjacency side of the
    least remaining vertex, then keep the majority color along the chain.

    Ties prefer the non-edge side and the empty tag; the last chain vertex
    joins either color class.
    """
    S = sorted(vertices)
    chain: list[tuple[int, Optional[int]]] = []
    while S:
        v = S[0]
        rest = S[1:]
        if not rest:
            chain.append((v, None))
            break
        nb = [u for u in rest if G.has_edge((v, u))]
        nn = [u for u in rest if not G.has_edge((v, u))]
        if len(nb) > len(nn):
            chain.append((v, 1))
            S = nb
        else:
            chain.append((v, 0))
            S = nn
    last = chain[-1][0] if chain else None
    ones = [v for v, c in chain if c == 1]
    zeros = [v for v, c in chain if c == 0]
    if len(ones) > len(zeros):
        members, tag = ones, "complete"
    else:
        members, tag = zeros, "empty"
    if last is not None:
        members = members + [last]
    if len(members) < k:
        return ExtractionFailure(2, f"halving chain supports only {len(members)} < {k}")
    return frozenset(members[:k]), tag


def extract_homogeneous(G: RGraph, n: int, k: int
                        ) -> Union[tuple[frozenset[int], str], ExtractionFailure]:
    """A k-set of vertices inducing a complete or empty sub-r-graph.

    r = 2 uses the halving chain; r >= 3 extracts an end-homogeneous vertex
    sequence by the largest-class greedy, freezes the last vertex v into the
    link relation R'(X) <=> R(X + {v}) on the rest, recurses at r-1 for k-1,
    and appends v. Every output is re-verified; a failure names the uniformity
    level at which the recursion stalled.
    """
    if k < 0:
        raise PreconditionError("k must be a natural")
    if k == 0:
        return frozenset(), "empty"
    if k <= G.r - 1:
        # no r-subsets inside: vacuously homogeneous, tagged empty by convention
        if G.n < k:
            return ExtractionFailure(G.r, f"only {G.n} vertices for target {k}")
        return frozenset(range(k)), "empty"
    if G.n < k:
        return ExtractionFailure(G.r, f"only {G.n} vertices for target {k}")
    if G.r == 2:
        return _halving_chain(G, range(G.n), k)

    def key_of(chosen: tuple[int, ...], cand: int):
        return tuple(G.has_edge(sel + (cand,))
                     for sel in itertools.combinations(chosen, G.r - 1))

    chosen, _ = greedy_end_extraction(G.n, G.r, key_of, target=None)
    if len(chosen) < G.r:
        return ExtractionFailure(G.r, f"end-homogeneous stage reached only {len(chosen)}")
    v = chosen[-1]
    prefix = chosen[:-1]
    back = {i: u for i, u in enumerate(prefix)}
    link_edges = set()
    for sub in itertools.combinations(range(len(prefix)), G.r - 1):
        orig = tuple(sorted(back[i] for i in sub)) + (v,)
        if G.has_edge(orig):
            link_edges.add(sub)
    sub_graph = RGraph.of(len(prefix), G.r - 1, link_edges)
    rec = extract_homogeneous(sub_graph, n, k - 1)
    if isinstance(rec, ExtractionFailure):
        return rec
    core, tag = rec
    result = frozenset(back[i] for i in core) | {v}
    if not verify_homogeneous(G, result, tag):
        return ExtractionFailure(G.r, "result failed homogeneity re-verification")
    return result, tag


def rgraph_lacks_independence(G: RGraph, n: int) -> bool:
    """Fast symmetric-relation check that no n vertices witness n-independence
    with (r-1)-tuple realizers.

    For r >= 3 the all-negative cell is free (a parameter tuple with a repeated
    entry never satisfies the edge relation), so only the 2^n - 1 nonempty
    pattern cells constrain the search. Verified against the generic search on
    tiny cases in the test suite.
    """
    if G.r < 2:
        raise PreconditionError("needs r >= 2")
    pairs = list(itertools.combinations(range(G.n), G.r - 1))
    index = {p: i for i, p in enumerate(pairs)}
    masks = [0] * G.n
    for v in range(G.n):
        m = 0
        for p in pairs:
            if v not in p and G.has_edge(p + (v,)):
                m |= 1 << index[p]
        masks[v] = m
    full = (1 << len(pairs)) - 1
    for combo in itertools.combinations(range(G.n), n):
        ok = True
        for w in range(1, 1 << n):
            cell = full
            for i, v in enumerate(combo):
                cell &= masks[v] if (w >> i) & 1 else full & ~masks[v]
                if not cell:
                    break
            if not cell:
                ok = False
                break
        if ok and G.r == 2:
            # for plain graphs the empty cell needs an actual non-neighbor
            cell = full
            for v in combo:
                cell &= full & ~masks[v]
            ok = bool(cell)
        if ok:
            return False
    return True


# ---------------------------------------------------------------------------
# comparing the two upper-bound recurrences
# ---------------------------------------------------------------------------


def floor_log2(x: int) -> int:
    if x < 1:
        raise PreconditionError("floor_log2 needs a positive integer")
    return x.bit_length() - 1


def bound_compare(r: int, n: int, k: int) -> dict:
    """Log-level comparison of the general Ramsey bound against the bound for
    r-graphs without the n-independence property.

    The a-side value is log^(r-1) of the general bound (exactly 4k at r = 3,
    ceiling-log convention above); the b-side double log is the bit length of
    n*k*(2^(2k)+2); the coefficient c reported satisfies "bounded side is
    roughly 2^(c(n-1))"; and b_smaller is the exact crossover n*k < 2^(2k-2).
    """
    if r < 3:
        raise PreconditionError("comparison is for r >= 3")
    if n < 1 or k < 1:
        raise PreconditionError("n and k must be positive")
    if r == 3:
        a_log = 4 * k
    elif r == 4:
        a_log = 4 * k + ceil_log2(3)
    else:
        a_log = 4 * k + ceil_log2(3) + (r - 4)
    b_loglog = ceil_log2(n * k * (2 ** (2 * k) + 2))
    base = 2 ** (2 * k) + 1
    b_coefficient = 2 * base * floor_log2(base)
    return {"r": r, "n": n, "k": k,
            "a_side_log_level": r - 1, "a_side": a_log,
            "b_loglog": b_loglog,
            "b_coefficient": b_coefficient,
            "b_general_loglog": 2 * k + ceil_log2(k) + ceil_log2(n),
            "b_smaller": n * k < 2 ** (2 * k - 2)}
