"""Word problem, Cayley balls, exact distances, and embedded components.

Dehn's algorithm decides triviality over a Gr'(1/6) presentation: a null
word contains more than half of some relator, so repeatedly replacing such
a subword by the inverse of its complement terminates at the empty word
exactly for trivial inputs.  Ball construction exploits the same fact in
reverse: a non-empty trivial reduced word has length at least the shortest
relator, so a radius-R ball with no relator of length <= 2R is the free
ball and can be materialized as an implicit tree.  Otherwise the ball is
built by breadth-first search with element identification by triviality
tests, filtered through abelianization buckets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BudgetError,
    CertificationError,
    UncertifiedRegionError,
    ValidationError,
)
from .labelled_graph import GraphFamily, LabelledGraph
from .words import (
    Alphabet,
    WordTuple,
    abelianization,
    canonical_rotation,
    cyclic_class,
    free_reduce,
    inverse,
    is_freely_reduced,
)


class RelatorOracle:
    """Monotone queries for all relator classes up to a length bound.

    The relator set of a labelled graph is the set of labels of embedded
    cycles of its components, closed under rotation and inversion; one
    canonical representative per class is stored and the closure is
    expanded on demand.  ``certified_length`` bounds the lengths for which
    the stored set is known to be complete (None = complete outright, the
    case for a fully built finite graph or word list).
    """

    def __init__(self, alphabet: Alphabet, relators: Iterable[WordTuple],
                 certified_length: Optional[int] = None,
                 description: str = ""):
        self.alphabet = alphabet
        self.certified_length = certified_length
        self.description = description
        canon = sorted({canonical_rotation(r) for r in relators if r})
        self._by_length: dict = {}
        for r in canon:
            self._by_length.setdefault(len(r), []).append(r)
        self.relators = canon

    @staticmethod
    def from_words(words: Sequence[WordTuple], alphabet: Alphabet,
                   description: str = "word list") -> "RelatorOracle":
        return RelatorOracle(alphabet, words, description=description)

    @staticmethod
    def from_family(family: GraphFamily,
                    cycle_budget: int = 2_000_000) -> "RelatorOracle":
        """Relators of a built family: labels of embedded cycles of every
        member.  Complete for the built graph (which presents the group
        under study)."""
        rels = []
        for i in family.indices:
            for cyc in family.graph(i).embedded_cycles(budget=cycle_budget):
                rels.append(cyc.word)
        return RelatorOracle(family.alphabet, rels,
                             description=f"family {family.name}")

    @staticmethod
    def free(alphabet: Alphabet) -> "RelatorOracle":
        return RelatorOracle(alphabet, [], description="free group")

    def query(self, max_length: int) -> list:
        """All relator classes of length <= max_length (canonical words)."""
        if self.certified_length is not None and max_length > self.certified_length:
            raise CertificationError(
                f"oracle '{self.description}' certified only to length "
                f"{self.certified_length}, queried at {max_length}")
        out = []
        for ln in sorted(self._by_length):
            if ln <= max_length:
                out.extend(self._by_length[ln])
        return out

    def min_relator_length(self) -> Optional[int]:
        return min(self._by_length) if self._by_length else None

    def needle_tables(self, max_length: int) -> list:
        """Cached ``(needle_length, {needle: replacement})`` tables for
        relators <= max_length; needles are more-than-half prefixes of
        relator rotations, so a word is Dehn-reducible iff one of its
        windows hits a table."""
        cache = getattr(self, "_needle_table_cache", None)
        if cache is None:
            cache = self._needle_table_cache = {}
        key = max(ln for ln in self._by_length if ln <= max_length) \
            if any(ln <= max_length for ln in self._by_length) else 0
        if self.certified_length is not None and max_length > self.certified_length:
            raise CertificationError(
                f"oracle '{self.description}' certified only to length "
                f"{self.certified_length}, queried at {max_length}")
        if key not in cache:
            tables: dict = {}
            for r in self.query(key):
                for needle, repl in _half_needles(r):
                    tables.setdefault(len(needle), {}).setdefault(needle, repl)
            cache[key] = sorted(tables.items())
        return cache[key]

    def abelianization_lattice(self, max_l1: int) -> set:
        """All lattice points of the relator abelianization lattice with
        l1-norm <= max_l1 (used to bucket ball identification candidates)."""
        gens = {abelianization(r, len(self.alphabet)) for r in self.relators}
        points = {tuple([0] * len(self.alphabet))}
        frontier = set(points)
        while frontier:
            new = set()
            for p in frontier:
                for g in gens:
                    for sgn in (1, -1):
                        q = tuple(a + sgn * b for a, b in zip(p, g))
                        if sum(map(abs, q)) <= max_l1 and q not in points:
                            new.add(q)
            points |= new
            frontier = new
        return points


# -- Dehn's algorithm ------------------------------------------------------------


def _half_needles(relator: WordTuple):
    """(needle, replacement) pairs: needle is more than half of a rotation
    of the relator or its inverse; replacement is the inverse of the rest."""
    h = len(relator) // 2 + 1
    seen = set()
    for rot in cyclic_class(relator):
        needle = rot[:h]
        if needle not in seen:
            seen.add(needle)
            yield needle, inverse(rot[h:])


def _find_subword(word: WordTuple, needle: WordTuple) -> int:
    n, m = len(word), len(needle)
    first = needle[0]
    for i in range(n - m + 1):
        if word[i] == first and word[i:i + m] == needle:
            return i
    return -1


def dehn_reduce(word: Iterable[int], oracle: RelatorOracle,
                max_steps: int = 100_000) -> WordTuple:
    """Greedy Dehn reduction: while some subword is more than half of a
    relator, replace it by the inverse of the complement and free-reduce.

    The output is empty iff the input represents the identity, provided
    the oracle's graph satisfies Gr'(1/6).  Only relators shorter than
    twice the current word can contribute, so queries stay bounded.
    """
    w = free_reduce(tuple(word))
    if not is_freely_reduced(w):
        raise ValidationError("input word must be freely reduced")
    for _ in range(max_steps):
        if not w:
            return w
        changed = False
        for h, table in oracle.needle_tables(2 * len(w) - 1):
            if h > len(w):
                continue
            for i in range(len(w) - h + 1):
                repl = table.get(w[i:i + h])
                if repl is not None:
                    w = free_reduce(w[:i] + repl + w[i + h:])
                    changed = True
                    break
            if changed:
                break
        if not changed:
            return w
    raise BudgetError(f"Dehn reduction did not stabilise in {max_steps} steps")


def is_trivial(word: Iterable[int], oracle: RelatorOracle) -> bool:
    return dehn_reduce(word, oracle) == ()


# -- Cayley balls -----------------------------------------------------------------


class FreeBall:
    """The radius-R ball of a free group, as an implicit trie.

    Valid as the exact ball of G(Γ) whenever no relator has length <= 2R
    (any non-empty trivial reduced word is at least as long as the shortest
    relator).  Vertices are numbered level by level; each carries only the
    letter on its parent edge, and steps are O(1) arithmetic.
    """

    kind = "free"

    def __init__(self, alphabet: Alphabet, radius: int,
                 certified_pair_radius: Optional[int] = None):
        if radius < 0:
            raise ValidationError("radius must be >= 0")
        self.alphabet = alphabet
        self.radius = radius
        m = len(alphabet)
        self._letters_order = alphabet.letters()
        self._letter_rank = {s: i for i, s in enumerate(self._letters_order)}
        br = 2 * m - 1
        self._br = br
        self._m = m
        self.offsets = [0, 1]
        size = 1
        level = 2 * m if radius >= 1 else 0
        for _ in range(radius):
            size += level
            self.offsets.append(size)
            level *= br
        self.n_vertices = size
        # letters array per vertex (parent edge letter); level 1 in order,
        # deeper levels: children of v in _letters_order skipping -letter(v)
        letters = np.zeros(size, dtype=np.int8)
        if radius >= 1:
            letters[1:2 * m + 1] = self._letters_order
            lut = np.array([[s for s in self._letters_order if s != -t]
                            for t in self._letters_order], dtype=np.int8)
            for k in range(1, radius):
                lo, hi = self.offsets[k], self.offsets[k + 1]
                parent_rank = np.array(
                    [self._letter_rank[int(x)] for x in letters[lo:hi]]
                ) if hi - lo < 64 else self._rank_vec(letters[lo:hi])
                letters[hi:hi + (hi - lo) * br] = lut[parent_rank].reshape(-1)
        self._letters = letters
        self.certified_pair_radius = (radius // 2 if certified_pair_radius is None
                                      else certified_pair_radius)

    def _rank_vec(self, arr):
        # letters order is (1..m, -1..-m); rank = s-1 for s>0 else m - s - 1
        a = arr.astype(np.int32)
        return np.where(a > 0, a - 1, self._m - a - 1)

    def level(self, v: int) -> int:
        import bisect
        return bisect.bisect_right(self.offsets, v) - 1

    def dist(self, v: int) -> int:
        return self.level(v)

    def parent(self, v: int) -> int:
        k = self.level(v)
        if k <= 0:
            raise ValidationError("root has no parent")
        if k == 1:
            return 0
        return self.offsets[k - 1] + (v - self.offsets[k]) // self._br

    def parent_letter(self, v: int) -> int:
        return int(self._letters[v])

    def step(self, v: int, s: int) -> int:
        k = self.level(v)
        if v != 0 and s == -int(self._letters[v]):
            return self.parent(v)
        if k >= self.radius:
            return -1
        if v == 0:
            return 1 + self._letter_rank[s]
        rank = self._letter_rank[s]
        skip = self._letter_rank[-int(self._letters[v])]
        j = rank - (1 if rank > skip else 0)
        return self.offsets[k + 1] + (v - self.offsets[k]) * self._br + j

    def neighbors(self, v: int):
        for s in self._letters_order:
            w = self.step(v, s)
            if w >= 0:
                yield s, w

    def word(self, v: int) -> WordTuple:
        out = []
        while v != 0:
            out.append(int(self._letters[v]))
            v = self.parent(v)
        return tuple(reversed(out))

    def vertex_of_word(self, word: Iterable[int]) -> int:
        v = 0
        for s in word:
            v = self.step(v, s)
            if v < 0:
                raise UncertifiedRegionError(
                    "word walks outside the ball; only geodesically "
                    "prefixed words can be located")
        return v

    def sphere(self, k: int):
        return range(self.offsets[k], self.offsets[k + 1])


class EnumBall:
    """Explicit BFS ball with Dehn-backed element identification.

    New candidate words are compared against existing vertices at the two
    previous levels and the current one, restricted to abelianization
    buckets shifted by relator-lattice points; matches are confirmed by a
    triviality test.  The canonical word of a vertex is its first
    discovery, which under letter-ordered exploration is the
    lexicographically least geodesic representative.
    """

    kind = "enumerated"

    def __init__(self, alphabet: Alphabet, radius: int, oracle: RelatorOracle,
                 max_vertices: int = 2_000_000,
                 certified_pair_radius: Optional[int] = None):
        self.alphabet = alphabet
        self.radius = radius
        self.oracle = oracle
        words: list = [()]
        dist: list = [0]
        by_word = {(): 0}
        adj: dict = {}
        m = len(alphabet)
        lattice = oracle.abelianization_lattice(4 * radius)
        min_rel = oracle.min_relator_length() or (4 * radius + 1)
        buckets: dict = {abelianization((), m): [0]}
        tables = oracle.needle_tables(4 * radius + 2)

        def equal_words(w1, w2):
            # strip the common suffix (capped: a longer one would leave a
            # trivial core shorter than the shortest relator), then demand
            # a window hit in a needle table before paying for full Dehn
            k_max = (len(w1) + len(w2) - min_rel) // 2
            k = 0
            while (k < len(w1) and k < len(w2)
                   and w1[len(w1) - 1 - k] == w2[len(w2) - 1 - k]):
                k += 1
                if k > k_max:
                    return False
            core = w1[:len(w1) - k] + inverse(w2[:len(w2) - k])
            if not core:
                return True
            if len(core) < min_rel:
                return False
            if not any(core[i:i + h] in tab
                       for h, tab in tables if h <= len(core)
                       for i in range(len(core) - h + 1)):
                return False
            return is_trivial(core, self.oracle)

        def lookup(wv, level, min_dist):
            ab = abelianization(wv, m)
            for lam in lattice:
                key = tuple(a - b for a, b in zip(ab, lam))
                for cand in buckets.get(key, ()):
                    if dist[cand] < min_dist:
                        continue
                    if level + dist[cand] < min_rel and words[cand] != wv:
                        continue
                    if equal_words(wv, words[cand]):
                        return cand
            return None

        offsets = [0, 1]
        frontier = [0]
        for level in range(1, radius + 1):
            new_frontier = []
            for u in frontier:
                wu = words[u]
                for s in alphabet.letters():
                    if wu and s == -wu[-1]:
                        # the freely reduced candidate is the parent word
                        v = by_word.get(wu[:-1])
                        if v is not None:
                            adj[(u, s)] = v
                        continue
                    wv = wu + (s,)
                    if (u, s) in adj:
                        continue
                    target = lookup(wv, level, level - 2)
                    if target is None:
                        target = len(words)
                        if target > max_vertices:
                            raise BudgetError(
                                f"ball exceeds {max_vertices} vertices; "
                                "partial balls are not returned",
                                explored=target)
                        words.append(wv)
                        dist.append(level)
                        by_word[wv] = target
                        buckets.setdefault(abelianization(wv, m), []).append(target)
                        new_frontier.append(target)
                    adj[(u, s)] = target
                    adj[(target, -s)] = u
            offsets.append(len(words))
            frontier = new_frontier
        # boundary post-pass: edges between vertices of the last sphere are
        # not found by expansion (the sphere is never a frontier), so look
        # the candidates up without creating anything new
        for u in frontier:
            wu = words[u]
            for s in alphabet.letters():
                if (u, s) in adj or (wu and s == -wu[-1]):
                    continue
                hit = lookup(wu + (s,), radius, radius - 1)
                if hit is not None:
                    adj[(u, s)] = hit
                    adj[(hit, -s)] = u
        self.words = words
        self._dist = dist
        self._by_word = by_word
        self._adj = adj
        self.offsets = offsets
        self.n_vertices = len(words)
        self.certified_pair_radius = (radius // 2 if certified_pair_radius is None
                                      else certified_pair_radius)

    def dist(self, v: int) -> int:
        return self._dist[v]

    def word(self, v: int) -> WordTuple:
        return self.words[v]

    def step(self, v: int, s: int) -> int:
        return self._adj.get((v, s), -1)

    def neighbors(self, v: int):
        for s in self.alphabet.letters():
            w = self._adj.get((v, s))
            if w is not None:
                yield s, w

    def vertex_of_word(self, word: Iterable[int]) -> int:
        v = 0
        for s in word:
            v = self.step(v, s)
            if v < 0:
                raise UncertifiedRegionError(
                    "word walks outside the ball")
        return v

    def sphere(self, k: int):
        return range(self.offsets[k], self.offsets[k + 1])


Ball = FreeBall | EnumBall


def build_ball(oracle: RelatorOracle, alphabet: Alphabet, radius: int,
               max_vertices: int = 2_000_000) -> Ball:
    """The exact radius-R ball of Cay(G(Γ), S).

    If the oracle certifies no relator of length <= 2R, every reduced word
    of length <= 2R is non-trivial and the ball is the free one, built as
    an implicit tree.  Otherwise a BFS with identification runs, with an
    explicit budget error rather than a silently wrong metric.
    """
    short = oracle.query(2 * radius)
    if not short:
        ball = FreeBall(alphabet, radius)
        if ball.n_vertices > max_vertices * 64:
            raise BudgetError("free ball too large to address")
        return ball
    return EnumBall(alphabet, radius, oracle, max_vertices=max_vertices)


# -- metric queries ---------------------------------------------------------------


def _bfs_from(ball: Ball, sources: Iterable[int], max_depth: int):
    """dict vertex -> distance, exploring at most ``max_depth`` layers."""
    dist = {int(s): 0 for s in sources}
    frontier = list(dist)
    depth = 0
    while frontier and depth < max_depth:
        depth += 1
        nxt = []
        for u in frontier:
            for _, w in ball.neighbors(u):
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
    return dist


def distance_and_geodesics(ball: Ball, g: int, h: int,
                           max_geodesics: int = 64):
    """Exact distance and all geodesic words from g to h (capped).

    A point z on a true geodesic satisfies d(1,z) <= (d(1,g)+d(1,h)+d)/2,
    so the geodesic stays inside the ball, and in-ball BFS is the word
    metric, whenever d <= 2R - d(1,g) - d(1,h).  This contains the stated
    safe region d <= R - max(d(1,g), d(1,h)).
    """
    dg, dh = ball.dist(g), ball.dist(h)
    budget = 2 * ball.radius - dg - dh
    dist = _bfs_from(ball, [g], max_depth=budget + 1)
    if h not in dist or dist[h] > budget:
        raise UncertifiedRegionError(
            f"d({g},{h}) not certified at radius {ball.radius}: "
            f"needs d <= {budget}")
    d = dist[h]
    # backward enumeration of geodesics, h to g
    geos: list = []

    def back(v, suffix):
        if len(geos) >= max_geodesics:
            return
        if v == g:
            geos.append(tuple(suffix))
            return
        for s, w in ball.neighbors(v):
            if dist.get(w, -1) == dist[v] - 1:
                back(w, [-s] + suffix)

    back(h, [])
    return d, geos


def project(ball: Ball, x: int, Y: Sequence[int]) -> list:
    """Full closest point projection π(x) = {y in Y : d(x,y) = d(x,Y)}.

    Layers are explored from x.  A path of length l from x to y stays in
    the ball when (d(1,x) + d(1,y) + l)/2 <= R, so the first hit layer is
    certified complete while l <= 2R - d(1,x) - max_{y in Y} d(1,y).
    """
    Yset = set(int(y) for y in Y)
    if not Yset:
        raise ValidationError("projection to an empty set")
    if x in Yset:
        return [x]
    budget = 2 * ball.radius - ball.dist(x) - max(ball.dist(y) for y in Yset)
    dist = {x: 0}
    frontier = [x]
    depth = 0
    while frontier:
        depth += 1
        if depth > budget:
            raise UncertifiedRegionError(
                f"projection of {x} leaves the certified region "
                f"(no target within {budget})")
        nxt = []
        hits = []
        for u in frontier:
            for _, w in ball.neighbors(u):
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
                    if w in Yset:
                        hits.append(w)
        if hits:
            return sorted(set(hits))
        frontier = nxt
    raise UncertifiedRegionError("projection target unreachable in the ball")


# -- embedded components -----------------------------------------------------------


@dataclass
class EmbeddedComponent:
    """A (possibly partial) label-preserving copy of a family member in a ball."""

    family_index: int
    anchor: tuple                    # (graph vertex, ball vertex)
    vertex_map: dict = field(repr=False)
    partial: bool = False

    def image_vertices(self):
        return set(self.vertex_map.values())

    def image_edge_key(self, graph: LabelledGraph):
        key = set()
        for (u, v, g) in graph.edges:
            bu, bv = self.vertex_map.get(u), self.vertex_map.get(v)
            if bu is not None and bv is not None:
                key.add((bu, bv, g))
        return frozenset(key)


def extend_component_map(graph: LabelledGraph, ball: Ball, g_vertex: int,
                         b_vertex: int) -> EmbeddedComponent:
    """The unique label-preserving extension of g_vertex -> b_vertex,
    truncated (and flagged partial) where it would leave the ball."""
    vmap = {g_vertex: b_vertex}
    stack = [g_vertex]
    partial = False
    while stack:
        u = stack.pop()
        bu = vmap[u]
        for (_, x, lab) in graph.incident(u):
            y = ball.step(bu, lab)
            if y < 0:
                partial = True
                continue
            if x in vmap:
                if vmap[x] != y:
                    # cannot happen over a consistent ball; guard anyway
                    raise ValidationError("inconsistent component extension")
            else:
                vmap[x] = y
                stack.append(x)
    return EmbeddedComponent(-1, (g_vertex, b_vertex), vmap, partial)


def locate_components(ball: Ball, family: GraphFamily, size_bound: int,
                      anchors: Optional[Sequence[int]] = None,
                      max_anchor_pairs: int = 5_000_000) -> list:
    """All embedded copies of family members with <= size_bound edges that
    meet the anchor set (default: the whole ball), deduplicated by image.

    Partial images at the ball boundary are flagged, not dropped: for large
    components only a neighbourhood of the anchor fits in any feasible
    ball, and the callers that need full components filter on the flag.
    """
    if anchors is None:
        anchors = range(ball.n_vertices)
    out = []
    seen = set()
    for idx, graph in family.components_up_to(size_bound):
        if len(anchors) * graph.n_vertices > max_anchor_pairs:
            raise BudgetError(
                "anchor search too large; pass an explicit anchor list")
        for b in anchors:
            for gv in range(graph.n_vertices):
                emb = extend_component_map(graph, ball, gv, int(b))
                emb.family_index = idx
                key = (idx, emb.image_edge_key(graph))
                if key in seen:
                    continue
                seen.add(key)
                out.append(emb)
    return out


def verify_isometric_embedding(ball: Ball, graph: LabelledGraph,
                               emb: EmbeddedComponent) -> bool:
    """Exhaustively check that graph distances equal ball distances on the
    image (only meaningful for full components within the certified radius)."""
    verts = sorted(emb.vertex_map)
    gdist = {}
    for s in verts:
        seen = {s: 0}
        frontier = [s]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for (_, w, _) in graph.incident(u):
                    if w not in seen:
                        seen[w] = d
                        nxt.append(w)
            frontier = nxt
        gdist[s] = seen
    for a in verts:
        for b in verts:
            if a < b:
                d, _ = distance_and_geodesics(ball, emb.vertex_map[a],
                                              emb.vertex_map[b],
                                              max_geodesics=1)
                if d != gdist[a][b]:
                    return False
    return True


# -- export -------------------------------------------------------------------


def ball_to_json(ball: Ball, max_vertices: int = 100_000) -> dict:
    """JSON form: per-vertex {id, word, distance} plus adjacency triples."""
    if ball.n_vertices > max_vertices:
        raise BudgetError(
            f"ball with {ball.n_vertices} vertices exceeds export cap")
    alphabet = ball.alphabet
    verts = [{"id": v, "word": alphabet.word_str(ball.word(v)),
              "distance": ball.dist(v)} for v in range(ball.n_vertices)]
    edges = []
    for v in range(ball.n_vertices):
        for s, w in ball.neighbors(v):
            if s > 0:
                edges.append([v, w, alphabet.letter_name(s)])
    return {"kind": ball.kind, "radius": ball.radius,
            "certified_pair_radius": ball.certified_pair_radius,
            "vertices": verts, "edges": edges}
