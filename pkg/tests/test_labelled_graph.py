import itertools

import pytest

from smallcancel import Alphabet, LabelledGraph, ValidationError, graph_from_text, graph_to_text
from smallcancel.constructions import hec_word, unbproj_relator
from smallcancel.words import free_reduce, inverse

AB = Alphabet(["a", "b"])


def cycle(word_text):
    return LabelledGraph.from_cycle(AB, AB.parse_word(word_text))


# -- read_word -----------------------------------------------------------------


def test_read_word_empty_path():
    g = cycle("ab")
    assert g.read_word([]) == ()


def test_read_word_backwards_edge():
    g = LabelledGraph(AB, 2, [(0, 1, 1)])
    assert g.read_word([(0, -1)]) == (-1,)


def test_read_word_hec_cycle_positively():
    w = hec_word(1)
    g = LabelledGraph.from_cycle(AB, w)
    path = [(i, 1 if w[i] > 0 else -1) for i in range(len(w))]
    assert g.read_word(path) == w
    assert len(w) == 275


def test_read_word_malformed_path():
    g = cycle("a b a b^2")
    with pytest.raises(ValidationError):
        g.read_word([(0, 1), (3, 1)])


def test_read_word_path_then_reverse_is_identity():
    g = LabelledGraph.from_cycle(AB, AB.parse_word("a b a b^2 a b^3"))
    # all paths of length <= 12 starting at vertex 0, depth-first
    def paths(v, path, depth):
        yield path
        if depth == 0:
            return
        for (eid, w, _) in g.incident(v):
            if path and eid == path[-1][0]:
                continue
            yield from paths(w, path + [(eid, 1 if g.edges[eid][0] == v else -1)],
                             depth - 1)
    for p in itertools.islice(paths(0, [], 12), 4000):
        w = g.read_word(p)
        back = [(e, -d) for (e, d) in reversed(p)]
        assert free_reduce(w + g.read_word(back)) == ()


# -- check_reduced -------------------------------------------------------------


def test_reduced_loop_fails():
    with pytest.raises(ValidationError):
        LabelledGraph(AB, 1, [(0, 0, 1)])
    g = LabelledGraph(AB, 1, [(0, 0, 1)], check=False)
    rep = g.check_reduced()
    assert not rep.ok and rep.witness_vertex == 0


def test_reduced_cycle_passes():
    assert cycle("a b a b^2").check_reduced().ok


def test_reduced_two_outgoing_fails():
    g = LabelledGraph(AB, 3, [(0, 1, 1), (0, 2, 1)], check=False)
    rep = g.check_reduced()
    assert not rep.ok and "outgoing" in rep.reason


def test_reduced_duplicate_components_pass():
    g = LabelledGraph.disjoint_union([cycle("ab"), cycle("ab")])
    assert g.check_reduced().ok


# -- embedded cycles and girth ---------------------------------------------------


def test_tree_has_no_cycles():
    g = LabelledGraph(AB, 3, [(0, 1, 1), (1, 2, 2)])
    assert g.embedded_cycles() == []
    assert g.girth() == float("inf")


def test_cycle_graph_single_class():
    g = cycle("a b a b^2")
    cyc = g.embedded_cycles()
    assert len(cyc) == 1
    assert cyc[0].canonical_word() == min(
        {AB.parse_word("a b a b^2")[i:] + AB.parse_word("a b a b^2")[:i]
         for i in range(5)} |
        {inverse(AB.parse_word("a b a b^2"))[i:] + inverse(AB.parse_word("a b a b^2"))[:i]
         for i in range(5)})


def test_glued_relators_three_classes():
    # R_0 and R_1 glued along the b^20 path: R_0, R_1, and the union boundary
    from smallcancel.constructions import AB as ab2
    r0, r1 = unbproj_relator(0), unbproj_relator(1)
    c0 = LabelledGraph.from_cycle(ab2, r0)
    c1 = LabelledGraph.from_cycle(ab2, r1)
    g = LabelledGraph.disjoint_union([c0, c1])
    # identify R_0's final b^-20 path with R_1's b^20 inside its first run
    m0 = len(r0)
    chain0 = [0] + [m0 - 1 - t for t in range(20)]
    chain1 = [m0 + 1 + t for t in range(21)]
    parent = list(range(g.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, y in zip(chain0, chain1):
        parent[find(x)] = find(y)
    remap, edges = {}, set()
    for (u, v, lab) in g.edges:
        ru = remap.setdefault(find(u), len(remap))
        rv = remap.setdefault(find(v), len(remap))
        edges.add((ru, rv, lab))
    glued = LabelledGraph(ab2, len(remap), sorted(edges))
    cycles = glued.embedded_cycles()
    assert len(cycles) == 3
    lengths = sorted(len(c) for c in cycles)
    assert lengths == [230, 630, 230 + 630 - 40]


def test_girth_values():
    assert cycle("ab").girth() == 2
    g = LabelledGraph.from_cycle(AB, hec_word(1))
    assert g.girth() == 275
    for n in (1, 2, 3):
        gn = LabelledGraph.from_cycle(AB, hec_word(n))
        assert gn.girth() == 11 * (44 * n - 19)


def test_girth_equals_min_embedded_cycle():
    g = LabelledGraph(AB, 4, [(0, 1, 1), (1, 2, 2), (2, 0, 1),
                              (2, 3, 2), (3, 0, 2)], check=False)
    cycles = g.embedded_cycles()
    assert g.girth() == min(len(c) for c in cycles)


# -- automorphisms -----------------------------------------------------------


def test_aperiodic_cycle_trivial_group():
    aut = cycle("a b a b^2").label_automorphisms()
    assert aut.is_trivial


def test_ab_cubed_cycle_has_rotations():
    aut = cycle("ababab").label_automorphisms()
    assert len(aut) == 3
    assert not aut.fixes_essential_components()


def test_two_isomorphic_components_contain_swap():
    g = LabelledGraph.disjoint_union([cycle("ab"), cycle("ab")])
    aut = g.label_automorphisms()
    swaps = [p for p in aut.permutations if p[0] >= 2]
    assert swaps, "component swap missing"


def test_automorphisms_form_group():
    g = LabelledGraph.disjoint_union([cycle("abab"), cycle("ab")])
    aut = g.label_automorphisms()
    perms = set(aut.permutations)
    n = g.n_vertices
    for p in perms:
        inv = tuple(sorted(range(n), key=lambda i: p[i]))
        assert tuple(inv[p[i]] for i in range(n)) == tuple(range(n))
        assert inv in perms
        for q in perms:
            assert tuple(q[p[i]] for i in range(n)) in perms


# -- families and text format ---------------------------------------------------


def test_family_size_agrees():
    from smallcancel.constructions import make_family
    for spec in ("hec:1..3", "unbproj:1..3", "notHE:sqrt:1..3"):
        fam = make_family(spec)
        for i in fam.indices:
            assert len(fam.graph(i).edges) == fam.size(i)


def test_text_format_roundtrip():
    g = LabelledGraph.disjoint_union([cycle("a b a b^2"), cycle("ab")])
    text = graph_to_text(g)
    assert text.splitlines()[0] == "alphabet: a b"
    g2 = graph_from_text(text)
    assert g2.n_vertices == g.n_vertices
    assert sorted(g2.edges) == sorted(g.edges)
