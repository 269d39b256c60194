"""Coupon-collector arithmetic, seeded graph experiments, hypergraph bounds,
homogeneous extraction, and the log-level bound comparison."""

import itertools
import math
from fractions import Fraction

import pytest

from fmlab import (E_bound, ExperimentConfig, ExtractionFailure,
                   PreconditionError, RGraph, bound_compare, coupon_q,
                   exact_fixed_witness_probability, extract_homogeneous,
                   find_k_independence, fixed_witness_trial,
                   graph_has_k_independence, hypergraph_F, hypergraph_fstar,
                   independence_probability_mc, lambda_nk,
                   rgraph_lacks_independence, sample_graph_rows, stirling2,
                   independence_trend, verify_homogeneous)
from fmlab.core import Signature, Structure, atom_formula
from fmlab.util import SplitMix64, TooLargeError, mix_seed

from conftest import seeded_3graphs_lacking_independence, sparse_3graph


# ---------------------------------------------------------------------------
# coupon collector
# ---------------------------------------------------------------------------


def test_coupon_base_cases():
    assert coupon_q(0, 0) == 1
    assert coupon_q(3, 0) == 0
    for n in range(1, 8):
        assert coupon_q(n, 1) == 1


def test_coupon_small_values_by_enumeration():
    # every placement of n balls into m boxes, counted directly
    def brute(n, m):
        hits = sum(1 for placing in itertools.product(range(m), repeat=n)
                   if set(placing) == set(range(m)))
        return Fraction(hits, m ** n)
    assert coupon_q(2, 2) == brute(2, 2) == Fraction(1, 2)
    assert coupon_q(3, 2) == brute(3, 2) == Fraction(3, 4)
    for n in range(0, 6):
        for m in range(1, 4):
            assert coupon_q(n, m) == brute(n, m)


def test_stirling_recurrence_values():
    assert stirling2(0, 0) == 1
    assert stirling2(4, 2) == 7
    assert stirling2(9, 8) == 36


def test_coupon_matches_occupancy_asymptotics():
    for k in range(1, 6):
        m = 2 ** k
        for n in (4 * m, 5 * m, 6 * m):
            lam = m * math.exp(-n / m)
            assert abs(float(coupon_q(n, m)) - math.exp(-lam)) < 0.05


def test_lambda_values():
    assert lambda_nk(3, 3) == 8.0
    assert abs(lambda_nk(11, 3) - 8 * math.exp(-1)) < 1e-12
    # at n = k + 2^k ln k the value collapses to 2^k / k
    for k in (2, 3, 5):
        n = k + (2 ** k) * math.log(k)
        # non-integer n: evaluate the formula directly
        lam = (2 ** k) * math.exp(-(n - k) / 2 ** k)
        assert abs(lam - (2 ** k) / k) < 1e-9


# ---------------------------------------------------------------------------
# sampling and experiments
# ---------------------------------------------------------------------------


def test_sampling_is_reproducible():
    a = sample_graph_rows(12, SplitMix64(5))
    b = sample_graph_rows(12, SplitMix64(5))
    assert a == b
    c = sample_graph_rows(12, SplitMix64(6))
    assert a != c


def test_global_independence_check_against_generic_search():
    sig = Signature((("R", 2),))
    phi = atom_formula("R", ["x0"], ["y0"])
    for seed in range(25):
        rows = sample_graph_rows(6, SplitMix64(seed))
        edges = {(i, j) for i in range(6) for j in range(6)
                 if (rows[i] >> j) & 1}
        M = Structure(sig, 6, {"R": edges})
        for k in (1, 2):
            fast = graph_has_k_independence(rows, 6, k)
            generic = find_k_independence(M, phi, k) is not None
            assert fast == generic


def test_mc_is_bit_reproducible():
    cfg = ExperimentConfig(8, 2, 50, 99)
    assert independence_probability_mc(cfg) == independence_probability_mc(cfg)


def test_mc_finds_independence_at_generous_size():
    # at n = k + k*2^k the fixed k vertices witness almost surely, so the
    # whole-graph event is nearly certain
    k = 3
    n = k + k * 2 ** k
    got = independence_probability_mc(ExperimentConfig(n, k, 300, 2))
    assert got["estimate"] > 0.9


def test_mc_exhaustive_crosscheck_tiny():
    # all graphs on 4 vertices: exact probability of pairwise independence
    count = 0
    pairs = list(itertools.combinations(range(4), 2))
    for mask in range(1 << 6):
        rows = [0] * 4
        for idx, (u, v) in enumerate(pairs):
            if (mask >> idx) & 1:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
        if graph_has_k_independence(rows, 4, 2):
            count += 1
    exact = count / 64
    got = independence_probability_mc(ExperimentConfig(4, 2, 4000, 7))
    se = max(got["stderr"], 1 / 4000)
    assert abs(got["estimate"] - exact) <= 3 * se


def test_fixed_witness_exact_value():
    assert exact_fixed_witness_probability(5, 2) == Fraction(192, 1024)


def test_fixed_witness_trial_matches_exact():
    hits = 0
    trials = 4000
    for t in range(trials):
        if fixed_witness_trial(5, 2, SplitMix64(mix_seed(31337, t))):
            hits += 1
    p = hits / trials
    exact = float(exact_fixed_witness_probability(5, 2))
    assert abs(p - exact) <= 3 * math.sqrt(exact * (1 - exact) / trials)


def test_trend_rows_and_reproducibility():
    rows = independence_trend([2, 3], 300, 4)
    assert [r["k"] for r in rows] == [2, 3]
    assert rows[0]["n"] == 5 and rows[1]["n"] == 12
    assert rows == independence_trend([2, 3], 300, 4)


def test_trend_estimate_grows_with_more_fillers():
    # more vertices make the fixed witness set easier to complete
    k = 3
    lo = independence_trend([k], 1500, 11)[0]["estimate"]
    # double the vertex count by hand
    n2 = 2 * (k + math.ceil((2 ** k) * math.log(k)))
    hits = 0
    for t in range(1500):
        if fixed_witness_trial(n2, k, SplitMix64(mix_seed(777, t))):
            hits += 1
    hi = hits / 1500
    assert hi + 3 * 0.02 >= lo


def test_trend_guard():
    with pytest.raises(PreconditionError):
        independence_trend([12], 10, 0)


# ---------------------------------------------------------------------------
# r-graphs and their bounds
# ---------------------------------------------------------------------------


def test_rgraph_structure_round_trip():
    G = sparse_3graph(12, 5)
    M = G.to_structure()
    assert RGraph.from_structure(M) == G


def test_hypergraph_growth_values():
    assert hypergraph_F(2, "worst", 3) == 8
    assert hypergraph_F(3, "bounded", 2, n=2) == 1
    assert hypergraph_F(3, "bounded", 5, n=2) == 25


def test_hypergraph_envelopes():
    # k >= 3 is where the monochromatic-extraction statement applies; below
    # that the staged product overshoots the k^((r-1)(n-1)k) envelope
    for k in range(3, 7):
        assert hypergraph_fstar(3, "bounded", k, n=2) <= k ** (2 * k)
    for k in range(1, 5):
        assert hypergraph_fstar(2, "worst", k) <= 2 ** (k ** 2)


def test_E_iterates():
    assert E_bound(2, 1, 1) == 16
    assert E_bound(5, 1, 0) == 1
    assert E_bound(1, 2, 1) == 3125
    with pytest.raises(TooLargeError):
        E_bound(3, 3, 10)


# ---------------------------------------------------------------------------
# homogeneous extraction
# ---------------------------------------------------------------------------


def test_empty_3graph_extraction():
    G = RGraph.of(10, 3, [])
    vs, tag = extract_homogeneous(G, 2, 4)
    assert tag == "empty" and len(vs) == 4
    assert verify_homogeneous(G, vs, tag)


def test_complete_graph_extraction():
    G = RGraph.of(16, 2, itertools.combinations(range(16), 2))
    vs, tag = extract_homogeneous(G, 2, 4)
    assert tag == "complete" and len(vs) == 4
    assert verify_homogeneous(G, vs, tag)


def test_structured_3graphs_extract_verified_triples():
    for idx, G in seeded_3graphs_lacking_independence(20, 555):
        got = extract_homogeneous(G, 2, 3)
        assert not isinstance(got, ExtractionFailure), idx
        vs, tag = got
        assert verify_homogeneous(G, vs, tag)
        # brute-force confirmation that a homogeneous triple exists
        assert any(verify_homogeneous(G, c, "complete")
                   or verify_homogeneous(G, c, "empty")
                   for c in itertools.combinations(range(G.n), 3))


def test_lacks_independence_fast_path_matches_generic():
    phi = atom_formula("R", ["x0"], ["y0", "y1"])
    for seed in range(30):
        rng = SplitMix64(seed)
        edges = [e for e in itertools.combinations(range(5), 3) if rng.bit()]
        G = RGraph.of(5, 3, edges)
        generic = find_k_independence(G.to_structure(), phi, 2) is None
        assert rgraph_lacks_independence(G, 2) == generic


def test_extraction_failure_is_reported_not_faked():
    # two vertices cannot supply a 3-set
    G = RGraph.of(2, 3, [])
    got = extract_homogeneous(G, 2, 3)
    assert isinstance(got, ExtractionFailure)


# ---------------------------------------------------------------------------
# bound comparison
# ---------------------------------------------------------------------------


def test_three_uniform_comparison_at_k10():
    got = bound_compare(3, 2, 10)
    assert got["a_side"] == 40
    coeff = got["b_coefficient"]
    assert abs(math.log10(coeff) - math.log10(4e7)) < 1.0


def test_crossover_exact():
    for k in range(2, 17):
        boundary = 2 ** (2 * k - 2)
        for n in (1, boundary // k - 1, boundary // k, boundary // k + 1):
            if n < 1:
                continue
            got = bound_compare(3, n, k)
            assert got["b_smaller"] == (n * k < boundary)


def test_crossover_boundary_is_false():
    # n exactly at the threshold: not smaller
    k = 4
    n = 2 ** (2 * k - 2) // k  # 64 = 256/4 exactly
    assert n * k == 2 ** (2 * k - 2)
    assert bound_compare(3, n, k)["b_smaller"] is False


def test_a_side_grows_slowly_with_uniformity():
    k = 5
    vals = [bound_compare(r, 2, k)["a_side"] for r in (3, 4, 5, 6)]
    assert vals[0] == 4 * k
    assert all(b - a <= 2 for a, b in zip(vals, vals[1:]))
