"""Piece search and the Gr'(lambda) / C'(lambda) condition checkers.

A piece is a labelled path admitting two label-preserving maps into the
graph that do not differ by a label-preserving automorphism.  Reducedness
makes such a map determined by its start vertex, so a word ``w`` read along
a cycle is a piece exactly when some other start vertex in a different
automorphism orbit also reads ``w``.  The checker scans every window of
every simple cycle against every start vertex with a survival DP that is
vectorized over start vertices.

All ratio arithmetic is exact (`fractions.Fraction`): 4/25 versus 1/6 must
never be settled in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BudgetError, ValidationError
from .labelled_graph import EmbeddedCycle, GraphFamily, LabelledGraph
from .words import WordTuple, canonical_rotation, is_cyclically_reduced

Target = Union[LabelledGraph, GraphFamily]


@dataclass(frozen=True)
class Witness:
    """One label-preserving occurrence of a word: component + start vertex."""
    component: int
    start: int


@dataclass(frozen=True)
class Piece:
    word: WordTuple
    witness1: Witness
    witness2: Witness

    def __len__(self):
        return len(self.word)


@dataclass
class ConditionReport:
    condition: str
    lam: Fraction
    verdict: bool
    worst_ratio: Fraction
    witness_cycle: Optional[WordTuple] = None
    witness_cycle_component: Optional[int] = None
    witness_piece: Optional[Piece] = None
    failures: list = field(default_factory=list)
    certified: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "lambda": [self.lam.numerator, self.lam.denominator],
            "verdict": "pass" if self.verdict else "fail",
            "worst_ratio": [self.worst_ratio.numerator, self.worst_ratio.denominator],
            "witness_cycle": list(self.witness_cycle) if self.witness_cycle else None,
            "witness_cycle_component": self.witness_cycle_component,
            "witness_piece": (list(self.witness_piece.word)
                              if self.witness_piece else None),
            "witness_piece_at": ([[self.witness_piece.witness1.component,
                                   self.witness_piece.witness1.start],
                                  [self.witness_piece.witness2.component,
                                   self.witness_piece.witness2.start]]
                                 if self.witness_piece else None),
            "failures": list(self.failures),
            "certified": dict(self.certified),
        }


# -- ambient graphs and orbit data ----------------------------------------------


def _as_union(target: Target):
    """``(graph, component_index_of_vertex, component_names)``.

    For a family the component index is the family index of the member the
    vertex came from; for a bare graph it is the connected component id.
    """
    if isinstance(target, GraphFamily):
        union, offsets = target.union_graph()
        names = np.zeros(union.n_vertices, dtype=np.int64)
        for (idx, off), g in zip(offsets, target.graphs()):
            names[off:off + g.n_vertices] = idx
        return union, names, {"family": target.name,
                              "indices": list(target.indices)}
    graph = target
    return graph, graph.component_ids().astype(np.int64), {
        "components": graph.n_components}


def _step_arrays(graph: LabelledGraph) -> dict:
    """Per signed letter: int32 array of size V+1 mapping vertex -> next
    vertex, with V itself a dead state that absorbs undefined steps."""
    cached = getattr(graph, "_step_arrays_cache", None)
    if cached is not None:
        return cached
    n = graph.n_vertices
    arrs = {letter: np.full(n + 1, n, dtype=np.int32)
            for letter in graph.alphabet.letters()}
    for (v, letter), (w, _) in graph._step.items():
        arrs[letter][v] = w
    graph._step_arrays_cache = arrs
    return arrs


def _orbit_ids(graph: LabelledGraph, exempt_automorphisms: bool) -> np.ndarray:
    if not exempt_automorphisms:
        return np.arange(graph.n_vertices, dtype=np.int64)
    return graph.label_automorphisms().vertex_orbits().astype(np.int64)


# -- the survival DP ---------------------------------------------------------------


def _max_piece_in_cycle_arrays(graph: LabelledGraph, cycle: EmbeddedCycle,
                               orbits: np.ndarray):
    """``(length, window_start, twin_start)`` of the longest piece inside
    ``cycle``, scanning all windows against all start vertices at once.

    ``surv[v]`` is the number of steps the unique walk from ``v`` survives
    while reading the cycle word from position ``j``; it is built backwards
    over the doubled word so windows may wrap.  A path subgraph of the
    cycle has at most ``len(cycle) - 1`` edges, hence the cap.  Occurrences
    in the same automorphism orbit as the window itself are masked out by
    temporarily poking their survival to -1.
    """
    m = len(cycle)
    n = graph.n_vertices
    step = _step_arrays(graph)
    word = cycle.word
    cap = m - 1
    surv = np.zeros(n + 1, dtype=np.int32)
    surv[n] = -1
    buf = np.empty_like(surv)
    orbit_members = None
    if orbits[-1] != n - 1 or not np.array_equal(
            orbits, np.arange(n, dtype=orbits.dtype)):
        orbit_members = {}
        for v, o in enumerate(orbits):
            orbit_members.setdefault(int(o), []).append(v)
        orbit_members = {o: np.array(vs) for o, vs in orbit_members.items()}
    best = (0, -1, -1)
    for j in range(2 * m - 1, -1, -1):
        np.take(surv, step[word[j % m]], out=buf, mode="clip")
        buf += 1
        buf[n] = -1
        surv, buf = buf, surv
        if j < m:
            u = cycle.vertex_at(j)
            if orbit_members is None:
                saved = surv[u]
                surv[u] = -1
                v = int(np.argmax(surv[:n]))
                surv[u] = saved
            else:
                mem = orbit_members[int(orbits[u])]
                saved = surv[mem].copy()
                surv[mem] = -1
                v = int(np.argmax(surv[:n]))
                surv[mem] = saved
            val = min(int(surv[v]), cap)
            if val > best[0]:
                best = (val, j, v)
    return best


def max_piece_in_cycle(target: Target, cycle: EmbeddedCycle,
                       exempt_automorphisms: bool = True):
    """Longest piece of the ambient graph contained in ``cycle``.

    Returns ``(length, piece_or_None)``; the piece carries both witnesses.
    """
    graph, comp_names, _ = _as_union(target)
    if cycle.graph is not graph and isinstance(target, LabelledGraph):
        graph = cycle.graph
        comp_names = graph.component_ids().astype(np.int64)
    orbits = _orbit_ids(graph, exempt_automorphisms)
    length, j, v = _max_piece_in_cycle_arrays(graph, cycle, orbits)
    if length == 0:
        return 0, None
    word = tuple(cycle.word[(j + k) % len(cycle)] for k in range(length))
    u = cycle.vertex_at(j)
    piece = Piece(word,
                  Witness(int(comp_names[u]), int(u)),
                  Witness(int(comp_names[v]), int(v)))
    return length, piece


# -- the three condition checkers ----------------------------------------------------


def _check(target: Target, lam, condition: str,
           exempt_automorphisms: bool, cycle_budget: int,
           require_fixing_clause: bool, threads: int = 1) -> ConditionReport:
    lam = Fraction(lam)
    if lam <= 0:
        raise ValidationError("lambda must be positive")
    graph, comp_names, certified = _as_union(target)
    rep = graph.check_reduced()
    if not rep.ok:
        raise ValidationError(f"labelling not reduced: {rep.reason}")

    aut = graph.label_automorphisms()
    orbits = (aut.vertex_orbits().astype(np.int64) if exempt_automorphisms
              else np.arange(graph.n_vertices, dtype=np.int64))

    failures = []
    if require_fixing_clause and not aut.fixes_essential_components():
        failures.append(
            "a non-trivial label-preserving automorphism moves a component "
            "with non-trivial fundamental group")

    cycles = graph.embedded_cycles(budget=cycle_budget)
    worst = Fraction(0)
    w_cycle = w_comp = w_piece = None

    def one(cycle):
        length, j, v = _max_piece_in_cycle_arrays(graph, cycle, orbits)
        return cycle, length, j, v

    if threads > 1 and len(cycles) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, cycles))
    else:
        results = [one(c) for c in cycles]

    for cycle, length, j, v in results:
        ratio = Fraction(length, len(cycle))
        if ratio > worst or w_cycle is None:
            worst = ratio
            w_cycle = cycle
            w_comp = int(comp_names[cycle.vertices[0]])
            if length > 0:
                word = tuple(cycle.word[(j + k) % len(cycle)]
                             for k in range(length))
                u = cycle.vertex_at(j)
                w_piece = Piece(word,
                                Witness(int(comp_names[u]), int(u)),
                                Witness(int(comp_names[v]), int(v)))
            else:
                w_piece = None

    verdict = (worst < lam) and not failures
    certified = dict(certified)
    certified.update({
        "n_vertices": graph.n_vertices,
        "n_simple_cycles": len(cycles),
        "piece_scope": "built components only",
    })
    return ConditionReport(
        condition=condition, lam=lam, verdict=verdict, worst_ratio=worst,
        witness_cycle=canonical_rotation(w_cycle.word) if w_cycle else None,
        witness_cycle_component=w_comp, witness_piece=w_piece,
        failures=failures, certified=certified)


def check_gr(target: Target, lam, cycle_budget: int = 2_000_000,
             threads: int = 1) -> ConditionReport:
    """Gr'(lambda): every piece inside a simple cycle ``c`` is shorter than
    ``lam * |c|``.  Pieces whose two maps differ by a label-preserving
    automorphism do not count."""
    lam = Fraction(lam)
    return _check(target, lam, f"Gr'({lam})", True, cycle_budget, False,
                  threads=threads)


def check_cprime(target: Target, lam, cycle_budget: int = 2_000_000,
                 threads: int = 1) -> ConditionReport:
    """C'(lambda): Gr'(lambda) plus: every label-preserving automorphism is
    the identity on each component with non-trivial fundamental group."""
    lam = Fraction(lam)
    return _check(target, lam, f"C'({lam})", True, cycle_budget, True,
                  threads=threads)


def word_collection_graph(words: Sequence[WordTuple],
                          alphabet) -> LabelledGraph:
    cycles = []
    for w in words:
        if not w:
            raise ValidationError("empty word in collection")
        if not is_cyclically_reduced(w):
            raise ValidationError(
                f"word {w} is not cyclically reduced")
        cycles.append(LabelledGraph.from_cycle(alphabet, w))
    return LabelledGraph.disjoint_union(cycles)


def check_word_collection(words: Sequence[WordTuple], lam, alphabet,
                          cycle_budget: int = 2_000_000,
                          threads: int = 1) -> ConditionReport:
    """Classical C'(lambda) for a set of cyclically reduced words.

    Builds the disjoint union of cycle graphs and runs the common checker
    with the automorphism exemption switched off: the classical condition
    counts a repeated subword as a piece even when the two occurrences
    differ by a rotation of a single relator cycle.
    """
    lam = Fraction(lam)
    graph = word_collection_graph(list(words), alphabet)
    return _check(graph, lam, f"classical-C'({lam})", False, cycle_budget,
                  False, threads=threads)
