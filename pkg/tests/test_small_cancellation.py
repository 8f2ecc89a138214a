from fractions import Fraction

import pytest

from smallcancel import Alphabet, LabelledGraph, ValidationError
from smallcancel.constructions import hec_word, make_family, unbproj_relator
from smallcancel.small_cancellation import (
    check_cprime,
    check_gr,
    check_word_collection,
    max_piece_in_cycle,
)

AB = Alphabet(["a", "b"])
ABC = Alphabet(["a", "b", "c"])


def cycle(text, alphabet=AB):
    return LabelledGraph.from_cycle(alphabet, alphabet.parse_word(text))


# -- max_piece_in_cycle ------------------------------------------------------------


def test_distinct_letters_no_pieces():
    g = cycle("abc", ABC)
    length, piece = max_piece_in_cycle(g, g.embedded_cycles()[0])
    assert length == 0 and piece is None


def test_hec_component_max_piece_is_44n():
    fam = make_family("hec:1..3")
    union, _ = fam.union_graph()
    for n, expected in ((1, 44), (2, 88)):
        cyc = next(c for c in union.embedded_cycles()
                   if len(c) == 11 * (44 * n - 19))
        length, piece = max_piece_in_cycle(union, cyc)
        assert length == expected
        # the witness subword is b^{22n-1} a b^{22n}
        word = piece.word
        assert word.count(1) == 1
        assert len(word) == 44 * n


def test_nothe_max_piece_2r_plus_1():
    fam = make_family("notHE:sqrt:1..3")
    union, _ = fam.union_graph()
    for r in (1, 2):
        cyc = next(c for c in union.embedded_cycles()
                   if len(c) == fam.size(r))
        length, _ = max_piece_in_cycle(union, cyc)
        assert length == 2 * r + 1


def test_piece_witnesses_read_same_word():
    fam = make_family("hec:1..2")
    union, _ = fam.union_graph()
    cyc = union.embedded_cycles()[0]
    _, piece = max_piece_in_cycle(union, cyc)
    assert union.walk(piece.witness1.start, piece.word) is not None
    assert union.walk(piece.witness2.start, piece.word) is not None
    assert piece.witness1.start != piece.witness2.start


def test_subpaths_of_pieces_are_pieces():
    fam = make_family("hec:1..2")
    union, _ = fam.union_graph()
    cyc = union.embedded_cycles()[0]
    length, piece = max_piece_in_cycle(union, cyc)
    # every subword of the witness can be read from two distinct starts
    w = piece.word
    for a in range(len(w)):
        for b in range(a + 1, min(a + 6, len(w)) + 1):
            sub = w[a:b]
            starts = [v for v in range(union.n_vertices)
                      if union.walk(v, sub) is not None]
            assert len(starts) >= 2


# -- check_gr -----------------------------------------------------------------


def test_hec_gr_exact_worst_ratio():
    fam = make_family("hec:1..3")
    rep = check_gr(fam, Fraction(1, 6))
    assert rep.verdict
    assert rep.worst_ratio == Fraction(4, 25)


def test_unbproj_gr_passes():
    fam = make_family("unbproj:1..2")
    rep = check_gr(fam, Fraction(1, 6))
    assert rep.verdict


def test_ab6_gr_passes_cprime_fails():
    g = cycle("ab" * 6)
    assert check_gr(g, Fraction(1, 6)).verdict
    rep = check_cprime(g, Fraction(1, 6))
    assert not rep.verdict
    assert rep.failures


def test_gr_monotone_in_lambda():
    fam = make_family("hec:1..2")
    r1 = check_gr(fam, Fraction(4, 25))
    r2 = check_gr(fam, Fraction(1, 6))
    r3 = check_gr(fam, Fraction(1, 5))
    assert not r1.verdict          # worst ratio equals 4/25, needs strict <
    assert r2.verdict and r3.verdict


# -- check_cprime ------------------------------------------------------------------


def test_two_identical_components_fail_cprime():
    g = LabelledGraph.disjoint_union([cycle("ab"), cycle("ab")])
    assert not check_cprime(g, Fraction(1, 6)).verdict
    assert check_gr(g, Fraction(1, 6)).verdict


def test_hec_pushout_cprime_passes():
    fam = make_family("hec-pushout:1..2")
    rep = check_cprime(fam, Fraction(1, 6))
    assert rep.verdict


# -- check_word_collection ----------------------------------------------------------


def test_unbproj_relators_classical():
    words = [unbproj_relator(n) for n in range(1, 5)]
    rep = check_word_collection(words, Fraction(1, 6), AB)
    assert rep.verdict


def test_ab_squared_classical_fails():
    rep = check_word_collection([AB.parse_word("abab")], Fraction(1, 6), AB)
    assert not rep.verdict
    assert rep.worst_ratio >= Fraction(2, 4)


def test_distinct_letters_pass_any_lambda():
    rep = check_word_collection([ABC.parse_word("abc")], Fraction(1, 10 ** 6), ABC)
    assert rep.verdict and rep.worst_ratio == 0


def test_word_collection_requires_cyclic_reduction():
    with pytest.raises(ValidationError):
        check_word_collection([AB.parse_word("a b a^-1")], Fraction(1, 6), AB)


def test_collection_agrees_with_check_gr_on_built_union():
    from smallcancel.small_cancellation import word_collection_graph
    words = [unbproj_relator(n) for n in (1, 2)]
    direct = check_word_collection(words, Fraction(1, 6), AB)
    union = word_collection_graph(words, AB)
    via_graph = check_gr(union, Fraction(1, 6))
    # these relators have no automorphisms, so the exemption is moot
    assert direct.verdict == via_graph.verdict
    assert direct.worst_ratio == via_graph.worst_ratio


def test_report_json_shape():
    rep = check_gr(make_family("hec:1..2"), Fraction(1, 6))
    js = rep.to_json()
    assert js["verdict"] == "pass"
    assert js["worst_ratio"] == [4, 25]
    assert js["lambda"] == [1, 6]
    assert js["witness_piece"] is not None
