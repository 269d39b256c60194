"""Indiscernibility predicates, greedy extraction, and the length bounds."""

import itertools

import pytest

from fmlab import (BoundParams, ConstantGrowth, ExtractionFailure,
                   HypergraphBoundedGrowth, HypergraphWorstGrowth,
                   PolynomialGrowth, PreconditionError, TupleSequence,
                   WorstCaseGrowth, beth, check_indiscernible, extraction_length_estimates,
                   extract_end_indiscernible, extract_indiscernible, f_star,
                   g_func)
from fmlab.util import SplitMix64, TooLargeError, mix_seed

from conftest import (EDGE, EDGE_PAIR, complete_graph, digraph,
                      empty_graph, graph, seeded_graph, star_graph)
from fmlab import (PartitionedFormula, Signature, Structure, atom_formula,
                   find_n_order)
from fmlab.core import Atom


def vertex_seq(n):
    return TupleSequence.of([(i,) for i in range(n)])


# ---------------------------------------------------------------------------
# checking
# ---------------------------------------------------------------------------


def test_clique_is_a_pairwise_indiscernible_set():
    K5 = complete_graph(5)
    cert = check_indiscernible(vertex_seq(5), [EDGE_PAIR], 2, [], K5, mode="set")
    assert cert.verified


def test_independent_set_is_indiscernible():
    M = empty_graph(4)
    cert = check_indiscernible(vertex_seq(4), [EDGE_PAIR], 2, [], M, mode="set")
    assert cert.verified


def test_monochromatic_tuples_under_a_coloring():
    # 3-uniform coloring relation: increasing enumerations of a monochromatic
    # set are 1-indiscernible for the color formulas
    sig = Signature((("C", 3),))
    n = 6
    mono = {0, 2, 4}
    triples = {t for t in itertools.permutations(range(n), 3)}
    colored = {t for t in triples if set(t) <= mono}
    M = Structure(sig, n, {"C": colored})
    color = atom_formula("C", ["x0", "x1", "x2"], [])
    I = TupleSequence.of([(0, 2, 4), (0, 2, 4)])
    cert = check_indiscernible(I, [color, color.negated()], 1, [], M,
                               mode="sequence")
    assert cert.verified


def test_star_order_end_but_not_fully_indiscernible():
    star = star_graph(3)
    I = vertex_seq(4)  # center first, then the leaves
    assert check_indiscernible(I, [EDGE_PAIR], 2, [], star, mode="end").verified
    cert = check_indiscernible(I, [EDGE_PAIR], 2, [], star, mode="sequence")
    assert not cert.verified
    first, bad = cert.counterexample
    assert first == (0, 1)  # the center-leaf prefix is what distinguishes


def test_counterexample_is_lexicographically_first():
    # build a graph where exactly one later pair disagrees
    M = graph(4, [(0, 1), (0, 2), (0, 3), (1, 2)])
    cert = check_indiscernible(vertex_seq(4), [EDGE_PAIR], 2, [], M,
                               mode="sequence")
    assert not cert.verified
    assert cert.counterexample[0] == (0, 1)


def test_mode_and_length_preconditions():
    with pytest.raises(PreconditionError):
        check_indiscernible(vertex_seq(2), [EDGE_PAIR], 3, [], empty_graph(2))
    with pytest.raises(PreconditionError):
        check_indiscernible(vertex_seq(2), [EDGE_PAIR], 2, [], empty_graph(2),
                            mode="weird")


# ---------------------------------------------------------------------------
# bound functions
# ---------------------------------------------------------------------------


def test_staged_recursion_base_and_tail():
    params = BoundParams(PolynomialGrowth(2), 0, 1, 1, 5)
    assert f_star(params, 0) == 1
    assert f_star(params, 1) == 1          # 1 + 1 * F(0) with F(0) = 0
    assert f_star(params, 2) == 2          # 1 + 1 * F(1)
    # the additive tail: consecutive values differ by one
    tail = BoundParams(WorstCaseGrowth(1), 0, 1, 3, 6)
    vals = [f_star(tail, j) for j in range(0, 5)]
    for j in range(tail.k - 2 - tail.m, tail.k - 2):
        assert vals[j + 1] - vals[j] == 1


def test_staged_recursion_domain():
    params = BoundParams(PolynomialGrowth(2), 0, 1, 1, 5)
    with pytest.raises(PreconditionError):
        f_star(params, 4)
    with pytest.raises(PreconditionError):
        f_star(params, -1)


def test_beth_values():
    assert beth(0, 5) == 5
    assert beth(1, 10) == 1024
    assert beth(2, 2) == 16
    with pytest.raises(TooLargeError):
        beth(3, 64)
    # strictly increasing in both arguments once x >= 2
    for x in (2, 3, 5):
        assert beth(1, x) < beth(2, x)
        assert beth(2, x) < beth(2, x + 1)


def test_g_identity_and_monotone():
    params = BoundParams(WorstCaseGrowth(1), 0, 1, 1, 5)
    assert g_func(params, 0, 7) == 7
    vals = [g_func(params, 1, x) for x in range(1, 6)]
    assert vals == sorted(vals)
    with pytest.raises(PreconditionError, match="underflow"):
        g_func(params, 1, -1)


def test_estimate_cases():
    assert extraction_length_estimates(1, 1, 3)["bound"] == 12
    assert extraction_length_estimates(2, 1, 4, 2)["bound"] == 11
    got = extraction_length_estimates(4, 1, 3, 1, 1, 1)
    assert got["inner"] == 2 * 3 + 2 + 9 == 17
    got2 = extraction_length_estimates(3, 2, 3, 2)
    assert got2["inner"] == 6 + 2 + 1 + 1
    assert got2["bound"] == beth(2, got2["inner"])


def test_growth_variants():
    assert WorstCaseGrowth(2).value(3) == 2 ** 9
    assert PolynomialGrowth(3).value(2) == 8
    assert HypergraphWorstGrowth(2).value(3) == 8
    assert HypergraphBoundedGrowth(3, 2).value(2) == 1
    assert HypergraphBoundedGrowth(3, 2).value(4) == 16
    assert ConstantGrowth(2).value(100) == 2


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


def test_constant_sequence_extracts_to_itself():
    M = empty_graph(3)
    I = TupleSequence.of([(1,)] * 5)
    got = extract_end_indiscernible(I, EDGE_PAIR, 2, [], M)
    seq, trace = got
    assert list(seq) == [(1,)] * 5
    assert all(classes == 1 for _, classes, _ in trace.steps)


def test_star_extraction_keeps_leaves():
    star = star_graph(5)
    I = TupleSequence.of([(1,), (0,), (2,), (3,), (4,), (5,)])
    seq, trace = extract_end_indiscernible(I, EDGE_PAIR, 2, [], star)
    cert = check_indiscernible(seq, [EDGE_PAIR], 2, [], star, mode="end")
    assert cert.verified
    # the tail is leaves only
    assert all(t != (0,) for t in list(seq)[2:])


def test_extraction_trace_invariants():
    M = seeded_graph(30, 71)
    seq, trace = extract_end_indiscernible(vertex_seq(30), EDGE_PAIR, 2, [], M)
    kept = [s for _, _, s in trace.steps]
    assert kept == sorted(kept, reverse=True)
    assert all(kept[i] > kept[i + 1] for i in range(len(kept) - 1))


def test_complete_graph_full_extraction():
    K8 = complete_graph(8)
    got = extract_indiscernible(vertex_seq(8), EDGE_PAIR, 2, [], K8, 4)
    assert not isinstance(got, ExtractionFailure)
    assert len(got) >= 4


def test_two_coloring_extraction_with_oracle_crosscheck():
    # seeded 2-colorings of a complete graph on 40 vertices: extraction at
    # k=3 must agree with the brute-force search for a verified 3-sequence
    for seed in range(8):
        M = seeded_graph(40, mix_seed(4242, seed))
        got = extract_indiscernible(vertex_seq(40), EDGE_PAIR, 2, [], M, 3)
        assert not isinstance(got, ExtractionFailure)
        cert = check_indiscernible(got, [EDGE_PAIR], 2, [], M, mode="sequence")
        assert cert.verified
        brute = False
        for combo in itertools.combinations(range(40), 3):
            I = TupleSequence.of([(v,) for v in combo])
            if check_indiscernible(I, [EDGE_PAIR], 2, [], M,
                                   mode="sequence").verified:
                brute = True
                break
        assert brute


def test_hypergraph_extraction_m1():
    sig = Signature((("H", 3),))
    rng = SplitMix64(909)
    n = 30
    tuples = set()
    for e in itertools.combinations(range(n), 3):
        if rng.bit():
            tuples.update(itertools.permutations(e))
    M = Structure(sig, n, {"H": tuples})
    phi = atom_formula("H", ["x0"], ["y0", "y1"])
    A = [(0, 1), (2, 3)]
    got = extract_indiscernible(TupleSequence.of([(i,) for i in range(4, n)]),
                                phi, 1, A, M, 5)
    assert not isinstance(got, ExtractionFailure)
    cert = check_indiscernible(got, [phi, phi.negated()], 1, A, M,
                               mode="sequence")
    assert cert.verified


def test_extraction_failure_reports_level():
    M = seeded_graph(6, 3)
    got = extract_indiscernible(vertex_seq(6), EDGE_PAIR, 2, [], M, 6)
    if isinstance(got, ExtractionFailure):
        assert got.level in (1, 2)


def test_sequence_to_set_transfer_boundary_on_digraphs():
    # On symmetric relations, a pairwise-indiscernible sequence without an
    # order pattern is automatically a set. On an asymmetric relation the
    # transfer fails with a formula-local hypothesis: take all arcs on four
    # vertices except 2->1. No sign/orientation of the atom has a 3-order
    # witness (that needs three missing arcs), yet the identity sequence is
    # pairwise sequence-indiscernible and not a set: increasing selections
    # never constrain reversed pairs.
    arcs = {(i, j) for i in range(4) for j in range(4) if i != j}
    arcs.discard((2, 1))
    M = digraph(4, arcs)
    reverse = PartitionedFormula(Atom("R", ("y0", "x0")), ("x0",), ("y0",))
    for f in (EDGE, EDGE.negated(), reverse, reverse.negated()):
        assert find_n_order(M, f, 3) is None
    I = TupleSequence.of([(0,), (1,), (2,), (3,)])
    assert check_indiscernible(I, [EDGE_PAIR], 2, [], M, mode="sequence").verified
    assert not check_indiscernible(I, [EDGE_PAIR], 2, [], M, mode="set").verified


def test_sufficient_length_never_fails():
    # worst-case growth cell at m = 1 with one parameter
    params = BoundParams(WorstCaseGrowth(1), 1, 1, 1, 4)
    for k in (2, 3, 4):
        need = g_func(params, 1, k - 1)
        assert need <= 10 ** 4
        for seed in range(5):
            M = seeded_graph(need, mix_seed(888, 100 * k + seed))
            got = extract_indiscernible(vertex_seq(need), EDGE, 1, [(0,)], M, k)
            assert not isinstance(got, ExtractionFailure), (k, seed)
