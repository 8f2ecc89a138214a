"""Directed, generator-labelled graphs and their basic geometry.

The defining graphs live here: reduced labellings, paths and the words they
read, embedded (simple) cycles, girth, and label-preserving automorphisms.
Labelled graphs are immutable after construction; all operations are pure.

A reduced labelling makes the graph a partial deterministic automaton over
the signed alphabet: from any vertex there is at most one way to read a
given letter.  Everything downstream (piece search, automorphisms, locating
components in Cayley balls) exploits that determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import BudgetError, ValidationError
from .words import (
    Alphabet,
    WordTuple,
    canonical_rotation,
    free_reduce,
    inverse,
    is_freely_reduced,
)


@dataclass(frozen=True)
class ReducednessReport:
    ok: bool
    witness_vertex: Optional[int] = None
    witness_letter: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


class LabelledGraph:
    """A finite directed graph with edges labelled by alphabet generators.

    Edges are stored once, in positive orientation, as ``(src, dst, gen)``
    with ``gen`` a 1-based generator index.  Traversal against the arrow
    reads the formal inverse.
    """

    def __init__(self, alphabet: Alphabet, n_vertices: int,
                 edges: Sequence[tuple], check: bool = True):
        self.alphabet = alphabet
        self.n_vertices = int(n_vertices)
        es = []
        for (u, v, g) in edges:
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValidationError(f"edge ({u},{v}) out of vertex range")
            if not (1 <= g <= len(alphabet)):
                raise ValidationError(f"edge label index {g} out of range")
            es.append((int(u), int(v), int(g)))
        self.edges = tuple(es)
        self._build_adjacency()
        if check:
            rep = self.check_reduced()
            if not rep.ok:
                raise ValidationError(f"labelling not reduced: {rep.reason}")

    # -- construction helpers ---------------------------------------------

    @staticmethod
    def from_cycle(alphabet: Alphabet, word: Sequence[int],
                   check: bool = True) -> "LabelledGraph":
        """Cycle graph reading ``word`` along its positive traversal."""
        w = tuple(word)
        if not w:
            raise ValidationError("cannot build a cycle on the empty word")
        m = len(w)
        edges = []
        for i, x in enumerate(w):
            u, v = i, (i + 1) % m
            if x > 0:
                edges.append((u, v, x))
            else:
                edges.append((v, u, -x))
        return LabelledGraph(alphabet, m, edges, check=check)

    @staticmethod
    def disjoint_union(graphs: Sequence["LabelledGraph"]) -> "LabelledGraph":
        if not graphs:
            raise ValidationError("empty union")
        alphabet = graphs[0].alphabet
        if any(g.alphabet != alphabet for g in graphs):
            raise ValidationError("disjoint union needs a common alphabet")
        edges = []
        offset = 0
        for g in graphs:
            edges.extend((u + offset, v + offset, lab) for (u, v, lab) in g.edges)
            offset += g.n_vertices
        return LabelledGraph(alphabet, offset, edges, check=False)

    def _build_adjacency(self):
        # deterministic step map: (vertex, signed letter) -> (vertex, edge id)
        step: dict = {}
        incid: list = [[] for _ in range(self.n_vertices)]
        self._clash = None
        for eid, (u, v, g) in enumerate(self.edges):
            if (u, g) in step and self._clash is None:
                self._clash = (u, g, "two outgoing edges")
            if (v, -g) in step and self._clash is None:
                self._clash = (v, g, "two incoming edges")
            if u == v and self._clash is None:
                self._clash = (u, g, "loop edge (its ends collide)")
            step[(u, g)] = (v, eid)
            step[(v, -g)] = (u, eid)
            incid[u].append((eid, v, g))
            incid[v].append((eid, u, -g))
        self._step = step
        self._incid = incid

    # -- basic queries ------------------------------------------------------

    def step(self, vertex: int, letter: int) -> Optional[int]:
        """Endpoint of the unique ``letter``-edge at ``vertex``, if any."""
        hit = self._step.get((vertex, letter))
        return None if hit is None else hit[0]

    def step_edge(self, vertex: int, letter: int):
        return self._step.get((vertex, letter))

    def degree(self, vertex: int) -> int:
        return len(self._incid[vertex])

    def incident(self, vertex: int):
        """Triples ``(edge_id, other_end, signed_letter_read_when_leaving)``."""
        return self._incid[vertex]

    def check_reduced(self) -> ReducednessReport:
        """Verify the reduced-labelling invariant, with a concrete witness.

        Loops are rejected as well: a loop presents both ends of the same
        labelled edge at one vertex, which breaks deterministic traversal
        bookkeeping and would make its single edge an embedded cycle whose
        label is one letter.
        """
        if self._clash is None:
            return ReducednessReport(True)
        v, g, why = self._clash
        name = self.alphabet.generators[g - 1]
        return ReducednessReport(False, v, g,
                                 f"vertex {v}: {why} labelled {name!r}")

    def walk(self, vertex: int, word: Iterable[int]) -> Optional[int]:
        """Read ``word`` from ``vertex``; None if it cannot be read."""
        v = vertex
        for x in word:
            v = self.step(v, x)
            if v is None:
                return None
        return v

    def walk_vertices(self, vertex: int, word: Iterable[int]) -> Optional[list]:
        out = [vertex]
        v = vertex
        for x in word:
            v = self.step(v, x)
            if v is None:
                return None
            out.append(v)
        return out

    # -- components ----------------------------------------------------------

    def component_ids(self) -> np.ndarray:
        """Array mapping vertex -> 0-based component id (cached)."""
        cached = getattr(self, "_comp_ids", None)
        if cached is not None:
            return cached
        comp = np.full(self.n_vertices, -1, dtype=np.int32)
        nid = 0
        for s in range(self.n_vertices):
            if comp[s] >= 0:
                continue
            stack = [s]
            comp[s] = nid
            while stack:
                u = stack.pop()
                for (_, w, _) in self._incid[u]:
                    if comp[w] < 0:
                        comp[w] = nid
                        stack.append(w)
            nid += 1
        self._comp_ids = comp
        self._n_components = nid
        return comp

    @property
    def n_components(self) -> int:
        self.component_ids()
        return self._n_components

    def component_vertices(self, cid: int) -> list:
        comp = self.component_ids()
        return [int(v) for v in np.flatnonzero(comp == cid)]

    def component_subgraph(self, cid: int) -> tuple:
        """``(subgraph, vertex_map)`` where ``vertex_map[old] = new``."""
        verts = self.component_vertices(cid)
        vmap = {v: i for i, v in enumerate(verts)}
        edges = [(vmap[u], vmap[v], g) for (u, v, g) in self.edges
                 if u in vmap]
        sub = LabelledGraph(self.alphabet, len(verts), edges, check=False)
        return sub, vmap

    # -- words on paths --------------------------------------------------------

    def read_word(self, path: Sequence[tuple]) -> WordTuple:
        """Word read along ``path``, a list of ``(edge_id, direction)``.

        ``direction`` is +1 to follow the arrow, -1 against it.  Consecutive
        edges must share endpoints respecting the traversal orientation.
        """
        word = []
        at = None
        for (eid, direction) in path:
            if not (0 <= eid < len(self.edges)) or direction not in (1, -1):
                raise ValidationError(f"malformed path step ({eid},{direction})")
            u, v, g = self.edges[eid]
            start, end = (u, v) if direction == 1 else (v, u)
            if at is not None and at != start:
                raise ValidationError(
                    f"path not incident: edge {eid} starts at {start}, previous ended at {at}")
            at = end
            word.append(g * direction)
        return tuple(word)

    # -- embedded cycles ---------------------------------------------------------

    def embedded_cycles(self, max_length: Optional[int] = None,
                        budget: int = 2_000_000) -> list:
        """All simple (embedded) cycles of length <= max_length.

        Returns :class:`EmbeddedCycle` objects, one per rotation/inversion
        class (a simple cycle is determined by its edge set).  When the
        cycle space has small rank every cycle is an xor of fundamental
        cycles, so subsets of non-tree edges are enumerated; otherwise a
        budgeted backtracking search over simple paths is used.  Exceeding
        the budget raises :class:`BudgetError`, never silent truncation.
        """
        if max_length is None:
            max_length = max(len(self.edges), 1)
        comp = self.component_ids()
        out = []
        for cid in range(self.n_components):
            out.extend(self._component_cycles(cid, comp, max_length, budget))
        return sorted(out, key=lambda c: (len(c), c.word))

    def _component_cycles(self, cid, comp, max_length, budget):
        verts = [int(v) for v in np.flatnonzero(comp == cid)]
        eids = [i for i, (u, _, _) in enumerate(self.edges) if comp[u] == cid]
        rank = len(eids) - len(verts) + 1
        if rank <= 0:
            return []
        if 2 ** rank <= budget and rank <= 20:
            return self._cycles_by_cycle_space(verts[0], eids, max_length)
        return self._cycles_by_backtracking(verts, max_length, budget)

    def _cycles_by_cycle_space(self, root, eids, max_length):
        # BFS spanning tree; fundamental cycle of each non-tree edge as an
        # edge-id bitmask; xor over Gray-coded subsets hits every element of
        # the cycle space once.
        parent: dict = {root: (None, None)}
        order = [root]
        qi = 0
        tree_edges = set()
        while qi < len(order):
            u = order[qi]
            qi += 1
            for (eid, w, _) in self._incid[u]:
                if w not in parent:
                    parent[w] = (u, eid)
                    tree_edges.add(eid)
                    order.append(w)
        nontree = [e for e in eids if e not in tree_edges]

        def tree_path_mask(v):
            mask = 0
            while parent[v][0] is not None:
                v, eid = parent[v][0], parent[v][1]
                mask ^= 1 << eid
            return mask

        fund = []
        for eid in nontree:
            u, v, _ = self.edges[eid]
            fund.append((1 << eid) ^ tree_path_mask(u) ^ tree_path_mask(v))

        cycles = []
        mask = 0
        prev_gray = 0
        for k in range(1, 2 ** len(fund)):
            gray = k ^ (k >> 1)
            mask ^= fund[(gray ^ prev_gray).bit_length() - 1]
            prev_gray = gray
            cyc = self._trace_cycle(mask, max_length)
            if cyc is not None:
                cycles.append(cyc)
        return cycles

    def _trace_cycle(self, mask, max_length):
        """Decode an edge bitmask; return an EmbeddedCycle if it is one."""
        edge_ids = []
        m = mask
        while m:
            lsb = m & -m
            edge_ids.append(lsb.bit_length() - 1)
            m ^= lsb
        if not (1 <= len(edge_ids) <= max_length):
            return None
        touch: dict = {}
        for eid in edge_ids:
            u, v, _ = self.edges[eid]
            touch.setdefault(u, []).append(eid)
            touch.setdefault(v, []).append(eid)
        if any(len(es) != 2 for es in touch.values()):
            return None
        if len(touch) != len(edge_ids):
            return None
        start = min(touch)
        path_edges = []
        path_verts = [start]
        at = start
        used = set()
        while True:
            eid = next(e for e in touch[at] if e not in used)
            used.add(eid)
            u, v, _ = self.edges[eid]
            direction = 1 if u == at else -1
            path_edges.append((eid, direction))
            at = v if direction == 1 else u
            if at == start:
                break
            path_verts.append(at)
        if len(used) != len(edge_ids):
            return None  # two or more disjoint cycles, not a simple one
        return EmbeddedCycle(self, tuple(path_verts), tuple(path_edges),
                             self.read_word(path_edges))

    def _cycles_by_backtracking(self, verts, max_length, budget):
        cycles: dict = {}
        steps = 0
        on_path = {v: False for v in verts}

        def dfs(start, v, path_edges, path_verts):
            nonlocal steps
            for (eid, w, lab) in self._incid[v]:
                steps += 1
                if steps > budget:
                    raise BudgetError(
                        f"embedded_cycles budget of {budget} steps exhausted",
                        explored=steps)
                if path_edges and eid == path_edges[-1][0]:
                    continue  # no immediate backtrack over the same edge
                if w == start and len(path_edges) >= 1:
                    key = frozenset(e for (e, _) in path_edges) | {eid}
                    if len(key) == len(path_edges) + 1 and key not in cycles:
                        edges = path_edges + [(eid, 1 if lab > 0 else -1)]
                        cycles[key] = EmbeddedCycle(
                            self, tuple(path_verts),
                            tuple(edges), self.read_word(edges))
                    continue
                if w <= start or on_path[w]:
                    continue
                if len(path_edges) + 1 >= max_length:
                    continue
                on_path[w] = True
                dfs(start, w, path_edges + [(eid, 1 if lab > 0 else -1)],
                    path_verts + [w])
                on_path[w] = False

        for s in verts:
            on_path[s] = True
            dfs(s, s, [], [s])
            on_path[s] = False
        return list(cycles.values())

    def girth(self) -> float:
        """Length of the shortest embedded cycle; ``inf`` for forests."""
        comp = self.component_ids()
        best = float("inf")
        # fast path: a component that is a single cycle
        import collections
        deg = collections.Counter()
        for (u, v, _) in self.edges:
            deg[u] += 1
            deg[v] += 1
        comp_sizes = collections.Counter(int(c) for c in comp)
        comp_edges = collections.Counter(int(comp[u]) for (u, _, _) in self.edges)
        pure_cycle = set()
        for cid, nv in comp_sizes.items():
            if comp_edges.get(cid, 0) == nv:
                verts = np.flatnonzero(comp == cid)
                if all(deg[int(v)] == 2 for v in verts):
                    pure_cycle.add(cid)
                    best = min(best, nv)
        for s in range(self.n_vertices):
            if int(comp[s]) in pure_cycle:
                continue
            dist = {s: 0}
            parent_edge = {s: -1}
            frontier = [s]
            while frontier:
                nxt = []
                for u in frontier:
                    if dist[u] * 2 >= best:
                        continue
                    for (eid, w, _) in self._incid[u]:
                        if eid == parent_edge[u]:
                            continue
                        if w in dist:
                            cand = dist[u] + dist[w] + 1
                            if cand < best:
                                best = cand
                        else:
                            dist[w] = dist[u] + 1
                            parent_edge[w] = eid
                            nxt.append(w)
                frontier = nxt
        return best

    # -- automorphisms -----------------------------------------------------------

    def label_preserving_maps(self, target: "LabelledGraph",
                              source_base: int, candidates=None) -> list:
        """All label-preserving graph maps of this (connected!) graph into
        ``target`` sending ``source_base`` to a candidate vertex, as dicts.
        Determinism of reduced labellings makes each candidate extend in at
        most one way."""
        if candidates is None:
            candidates = range(target.n_vertices)
        maps = []
        for w0 in candidates:
            m = {source_base: w0}
            stack = [source_base]
            ok = True
            while stack and ok:
                u = stack.pop()
                mu = m[u]
                for (_, x, lab) in self._incid[u]:
                    y = target.step(mu, lab)
                    if y is None:
                        ok = False
                        break
                    if x in m:
                        if m[x] != y:
                            ok = False
                            break
                    else:
                        m[x] = y
                        stack.append(x)
            if ok:
                maps.append(m)
        return maps

    def label_automorphisms(self, budget: int = 100_000) -> "AutomorphismGroup":
        """All label-preserving automorphisms, as explicit permutations."""
        comp = self.component_ids()
        ncomp = self.n_components
        comp_data = []
        for cid in range(ncomp):
            verts = self.component_vertices(cid)
            nedges = sum(1 for (u, _, _) in self.edges if comp[u] == cid)
            labmul = tuple(sorted(
                (g for (u, _, g) in self.edges if comp[u] == cid)))
            comp_data.append((verts, nedges, labmul))

        # component-to-component isomorphisms via the deterministic extension
        iso: dict = {}
        for i in range(ncomp):
            vi, ei, li = comp_data[i]
            for j in range(ncomp):
                vj, ej, lj = comp_data[j]
                if (len(vi), ei, li) != (len(vj), ej, lj):
                    continue
                base = vi[0]
                found = []
                for m in self.label_preserving_maps(self, base, candidates=vj):
                    if set(m) != set(vi):
                        continue
                    img = set(m.values())
                    if img == set(vj) and len(img) == len(vi):
                        found.append(m)
                if found:
                    iso[(i, j)] = found

        perms: list = []

        def assemble(next_comp, used, partial):
            if len(perms) * max(1, self.n_vertices) > budget:
                raise BudgetError("automorphism enumeration budget exhausted",
                                  explored=len(perms))
            if next_comp == ncomp:
                p = list(range(self.n_vertices))
                for m in partial:
                    for a, b in m.items():
                        p[a] = b
                perms.append(tuple(p))
                return
            for j in range(ncomp):
                if j in used or (next_comp, j) not in iso:
                    continue
                for m in iso[(next_comp, j)]:
                    assemble(next_comp + 1, used | {j}, partial + [m])

        assemble(0, frozenset(), [])
        return AutomorphismGroup(self, perms)

    def __repr__(self):
        return (f"LabelledGraph({self.n_vertices} vertices, "
                f"{len(self.edges)} edges, alphabet={list(self.alphabet.generators)})")


@dataclass(frozen=True)
class EmbeddedCycle:
    """A simple cycle, stored as one concrete traversal.

    ``vertices`` lists the distinct vertices in traversal order; ``edges``
    is the matching ``(edge_id, direction)`` sequence; ``word`` the label
    read along it.  The canonical member of the rotation/inversion class is
    available via :meth:`canonical_word`.
    """
    graph: LabelledGraph
    vertices: tuple
    edges: tuple
    word: WordTuple

    def __len__(self):
        return len(self.edges)

    def canonical_word(self) -> WordTuple:
        return canonical_rotation(self.word)

    def letter_at(self, i: int) -> int:
        return self.word[i % len(self.word)]

    def vertex_at(self, i: int) -> int:
        return self.vertices[i % len(self.vertices)]


class AutomorphismGroup:
    """Explicit list of vertex permutations preserving labels and arrows."""

    def __init__(self, graph: LabelledGraph, perms: list):
        self.graph = graph
        ident = tuple(range(graph.n_vertices))
        if ident not in perms:
            perms = [ident] + perms
        self.permutations = sorted(set(perms))

    def __len__(self):
        return len(self.permutations)

    @property
    def is_trivial(self) -> bool:
        return len(self.permutations) == 1

    def vertex_orbits(self) -> np.ndarray:
        """Array: vertex -> orbit id under the group."""
        n = self.graph.n_vertices
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for p in self.permutations:
            for a in range(n):
                ra, rb = find(a), find(p[a])
                if ra != rb:
                    parent[ra] = rb
        roots = {}
        out = np.empty(n, dtype=np.int32)
        for v in range(n):
            r = find(v)
            out[v] = roots.setdefault(r, len(roots))
        return out

    def fixes_essential_components(self) -> bool:
        """True iff every automorphism restricts to the identity on each
        component with non-trivial fundamental group (the extra clause that
        separates the C'(lambda) condition from Gr'(lambda))."""
        g = self.graph
        comp = g.component_ids()
        nv = np.bincount(comp, minlength=g.n_components)
        ne = np.zeros(g.n_components, dtype=int)
        for (u, _, _) in g.edges:
            ne[comp[u]] += 1
        essential = {cid for cid in range(g.n_components)
                     if ne[cid] >= nv[cid]}  # connected: E > V-1 <=> has a cycle
        for p in self.permutations:
            for v in range(g.n_vertices):
                if p[v] != v and int(comp[v]) in essential:
                    return False
        return True


class GraphFamily:
    """A lazily generated, deterministically indexed family of graphs.

    ``indices`` need not be contiguous (some constructions only certify a
    sparse index set); generation is deterministic per index and the
    declared ``size`` function must agree with the generated edge count.
    """

    def __init__(self, name: str, indices: Sequence[int],
                 generator: Callable[[int], LabelledGraph],
                 size: Callable[[int], int],
                 alphabet: Alphabet,
                 metadata: Optional[dict] = None):
        self.name = name
        self.indices = tuple(indices)
        self._generator = generator
        self.size = size
        self.alphabet = alphabet
        self.metadata = dict(metadata or {})
        self._cache: dict = {}

    def graph(self, index: int) -> LabelledGraph:
        if index not in self.indices:
            raise ValidationError(f"index {index} not in family {self.name}")
        if index not in self._cache:
            g = self._generator(index)
            if len(g.edges) != self.size(index):
                raise ValidationError(
                    f"family {self.name}: size({index})={self.size(index)} "
                    f"but generated graph has {len(g.edges)} edges")
            self._cache[index] = g
        return self._cache[index]

    def graphs(self):
        return [self.graph(i) for i in self.indices]

    def components_up_to(self, max_edges: int) -> list:
        """``(index, graph)`` for all members with at most ``max_edges`` edges."""
        return [(i, self.graph(i)) for i in self.indices
                if self.size(i) <= max_edges]

    def union_graph(self) -> tuple:
        """Disjoint union of all members plus ``(index, vertex_offset)`` list."""
        gs = self.graphs()
        union = LabelledGraph.disjoint_union(gs)
        offsets = []
        off = 0
        for idx, g in zip(self.indices, gs):
            offsets.append((idx, off))
            off += g.n_vertices
        return union, offsets

    def __repr__(self):
        return f"GraphFamily({self.name!r}, indices={list(self.indices)})"


# -- plain text interchange format ---------------------------------------


def graph_to_text(graph: LabelledGraph) -> str:
    """Serialize to the one-edge-per-line text format.

    Header line ``alphabet: a b c``; one ``<source> <target> <label>`` line
    per edge; components separated by blank lines with vertex ids local to
    their component block.
    """
    lines = ["alphabet: " + " ".join(graph.alphabet.generators)]
    comp = graph.component_ids()
    for cid in range(graph.n_components):
        verts = graph.component_vertices(cid)
        local = {v: i for i, v in enumerate(verts)}
        lines.append("")
        for (u, v, g) in graph.edges:
            if int(comp[u]) == cid:
                lines.append(f"{local[u]} {local[v]} {graph.alphabet.generators[g-1]}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> LabelledGraph:
    lines = text.splitlines()
    alphabet = None
    blocks: list = [[]]
    for ln in lines:
        s = ln.strip()
        if s.startswith("alphabet:"):
            alphabet = Alphabet(s[len("alphabet:"):].split())
            continue
        if not s:
            if blocks[-1]:
                blocks.append([])
            continue
        parts = s.split()
        if len(parts) != 3:
            raise ValidationError(f"bad edge line {ln!r}")
        blocks[-1].append((int(parts[0]), int(parts[1]), parts[2]))
    if alphabet is None:
        raise ValidationError("missing 'alphabet:' header line")
    edges = []
    offset = 0
    total = 0
    for block in blocks:
        if not block:
            continue
        hi = max(max(u, v) for (u, v, _) in block) + 1
        for (u, v, name) in block:
            edges.append((u + offset, v + offset, alphabet.letter(name)))
        offset += hi
        total = offset
    return LabelledGraph(alphabet, total, edges, check=False)
