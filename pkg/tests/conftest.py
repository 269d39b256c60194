"""Shared builders for the test suite: small graphs, digraphs, linear orders,
and the seeded 3-graph families used by the extraction tests."""

import itertools

from fmlab import RGraph, Signature, Structure, atom_formula
from fmlab.util import SplitMix64, mix_seed

GRAPH_SIG = Signature((("R", 2),))
ORDER_SIG = Signature((("L", 2),))


def graph(n, edges):
    """Simple graph: symmetric closure of the given edge pairs."""
    full = set()
    for (u, v) in edges:
        full.add((u, v))
        full.add((v, u))
    return Structure(GRAPH_SIG, n, {"R": full})


def digraph(n, arcs):
    return Structure(GRAPH_SIG, n, {"R": set(arcs)})


def linear_order(n):
    return Structure(ORDER_SIG, n, {"L": [(i, j) for i in range(n)
                                          for j in range(n) if i < j]})


def complete_graph(n):
    return graph(n, itertools.combinations(range(n), 2))


def empty_graph(n):
    return graph(n, [])


def path_graph(n):
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves):
    return graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def all_graphs(n):
    """Every simple graph on n vertices, by edge mask."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield graph(n, [pairs[i] for i in range(len(pairs))
                        if (mask >> i) & 1])


def all_digraphs(n):
    """Every loopless digraph on n vertices."""
    arcs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for mask in range(1 << len(arcs)):
        yield digraph(n, [arcs[i] for i in range(len(arcs)) if (mask >> i) & 1])


def seeded_graph(n, seed):
    rng = SplitMix64(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.bit()]
    return graph(n, edges)


EDGE = atom_formula("R", ["x0"], ["y0"])
EDGE_PAIR = atom_formula("R", ["x0", "x1"], [])
LESS = atom_formula("L", ["x0"], ["y0"])


# seeded 3-graph families that tend to lack pairwise independence

def sparse_3graph(n, seed, m=6):
    rng = SplitMix64(seed)
    all_e = list(itertools.combinations(range(n), 3))
    edges = {all_e[rng.below(len(all_e))] for _ in range(m)}
    return RGraph.of(n, 3, edges)


def heavy_pair_3graph(n, seed):
    rng = SplitMix64(seed)
    c1 = rng.below(n)
    c2 = rng.below(n)
    while c2 == c1:
        c2 = rng.below(n)
    edges = [tuple(sorted({c1, c2, u})) for u in range(n) if u not in (c1, c2)]
    return RGraph.of(n, 3, edges)


def linear_pack_3graph(n, seed):
    """Greedy partial Steiner packing: no two edges share a vertex pair."""
    rng = SplitMix64(seed)
    used_pairs = set()
    edges = []
    all_e = list(itertools.combinations(range(n), 3))
    for _ in range(3 * n):
        e = all_e[rng.below(len(all_e))]
        prs = list(itertools.combinations(e, 2))
        if all(p not in used_pairs for p in prs):
            edges.append(e)
            used_pairs.update(prs)
    return RGraph.of(n, 3, edges)


def seeded_3graphs_lacking_independence(count, base_seed):
    """Yield (index, RGraph) pairs from the structured families, filtered to
    lack pairwise independence, until `count` are produced."""
    from fmlab import rgraph_lacks_independence
    families = [lambda n, s: sparse_3graph(n, s),
                heavy_pair_3graph,
                linear_pack_3graph]
    produced = 0
    attempt = 0
    while produced < count:
        fam = families[attempt % len(families)]
        n = 30 + (attempt % 11)
        G = fam(n, mix_seed(base_seed, attempt))
        attempt += 1
        if attempt > 20 * count:
            raise RuntimeError("generator stalled")
        if rgraph_lacks_independence(G, 2):
            produced += 1
            yield produced, G
