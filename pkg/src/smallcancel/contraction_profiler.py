"""Empirical contraction measurements on constructed groups.

Three instruments: the intersection profile of a geodesic with located
embedded components (how much of the defining graph the geodesic runs
along, per component size and per radius scale), the direct two-point
contraction measurement gated by an input gauge, and translation length
sampling.  Verdicts about growth are desk-scale trend calls over dyadic
scales, never proofs.

Large components never fit inside a buildable ball, so in-component
measurements are provided too: a located component is isometrically
embedded with convex image, and closest point projection to the geodesic
agrees with in-component projection to the intersection, so distances and
projection diameters of component points can be read off the abstract
component once the intersection is anchored in a ball.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import PreconditionError, UncertifiedRegionError, ValidationError
from .group_engine import (
    Ball,
    RelatorOracle,
    build_ball,
    distance_and_geodesics,
    locate_components,
    project,
)
from .labelled_graph import GraphFamily, LabelledGraph
from .words import WordTuple, free_reduce, power


# -- profiles -----------------------------------------------------------------


@dataclass
class Profile:
    """Sampled map r -> value with witnesses and a monotone envelope view."""

    samples: dict = field(default_factory=dict)   # r -> (value, witness)
    excluded_boundary: int = 0

    def add(self, r: int, value: int, witness=None):
        cur = self.samples.get(r)
        if cur is None or value > cur[0]:
            self.samples[r] = (value, witness)

    def envelope(self, r) -> int:
        vals = [v for (key, (v, _)) in self.samples.items() if key <= r]
        return max(vals, default=0)

    def envelope_points(self):
        out = []
        best = 0
        for r in sorted(self.samples):
            best = max(best, self.samples[r][0])
            out.append((r, best))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["r", "value", "witness"])
        for r in sorted(self.samples):
            value, witness = self.samples[r]
            w.writerow([r, value, witness if witness is not None else ""])
        return buf.getvalue()


def _alpha_edge_set(alpha: Sequence[int]):
    edges = set()
    for a, b in zip(alpha, alpha[1:]):
        edges.add((a, b))
        edges.add((b, a))
    return edges


def _image_alpha_edges(graph: LabelledGraph, emb, alpha_edges) -> list:
    hits = []
    for (u, v, g) in graph.edges:
        bu, bv = emb.vertex_map.get(u), emb.vertex_map.get(v)
        if bu is not None and bv is not None and (bu, bv) in alpha_edges:
            hits.append((u, v))
    return hits


def _intersection_certified(graph: LabelledGraph, emb, hits, ball) -> bool:
    """The run of alpha-edges is complete iff every endpoint of the hit set
    has all its component neighbours materialized (margin one inside the
    ball), so nothing more of the component can lie on the geodesic beyond
    what we see."""
    endpoint_vertices = set()
    for (u, v) in hits:
        endpoint_vertices.add(u)
        endpoint_vertices.add(v)
    for u in endpoint_vertices:
        for (_, w, _) in graph.incident(u):
            if w not in emb.vertex_map:
                return False
    return True


def intersection_profile(ball: Ball, alpha: Sequence[int],
                         family: GraphFamily, size_bound: int,
                         anchors: Optional[Sequence[int]] = None) -> Profile:
    """rho(r) = max over located components with |Γ_i| <= r of |Γ_i ∩ alpha|.

    Components are located anchored along alpha (they are the only ones
    that can meet it).  Partial images whose intersection with alpha is
    cut by the ball boundary are excluded and counted in
    ``excluded_boundary``; partial images whose intersection is interior
    are exact and kept.
    """
    alpha = list(alpha)
    alpha_edges = _alpha_edge_set(alpha)
    prof = Profile()
    embs = locate_components(ball, family, size_bound,
                             anchors=list(alpha) if anchors is None else anchors)
    for emb in embs:
        graph = family.graph(emb.family_index)
        hits = _image_alpha_edges(graph, emb, alpha_edges)
        if not hits:
            continue
        if not _intersection_certified(graph, emb, hits, ball):
            prof.excluded_boundary += 1
            continue
        prof.add(len(graph.edges), len(hits),
                 witness=f"component {emb.family_index} anchored at "
                         f"{emb.anchor[1]}")
    return prof


def scale_profile(ball: Ball, alpha: Sequence[int], family: GraphFamily,
                  size_bound: int, radii: Sequence[int]) -> Profile:
    """Radius-scale view: value at r counts the alpha-edges of a located
    component image whose endpoints lie in the ball of radius r around the
    basepoint.  Used for same-radii comparisons across generating sets."""
    alpha = list(alpha)
    alpha_edges = _alpha_edge_set(alpha)
    embs = locate_components(ball, family, size_bound, anchors=list(alpha))
    prof = Profile()
    for r in sorted(radii):
        best, wit = 0, None
        for emb in embs:
            graph = family.graph(emb.family_index)
            hits = _image_alpha_edges(graph, emb, alpha_edges)
            inside = [
                (u, v) for (u, v) in hits
                if ball.dist(emb.vertex_map[u]) <= r
                and ball.dist(emb.vertex_map[v]) <= r]
            if len(inside) > best:
                best, wit = len(inside), f"component {emb.family_index}"
        prof.add(r, best, wit)
    return prof


# -- two-point contraction measurement ------------------------------------------


@dataclass
class ContractionMeasurement:
    gauge_name: str
    samples: dict = field(default_factory=dict)  # d(x, alpha) -> (diam, witness)

    def add(self, d: int, diam: int, witness):
        cur = self.samples.get(d)
        if cur is None or diam > cur[0]:
            self.samples[d] = (diam, witness)

    def envelope(self, r) -> int:
        return max([v for (d, (v, _)) in self.samples.items() if d <= r],
                   default=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["r", "value", "witness"])
        for d in sorted(self.samples):
            v, wit = self.samples[d]
            w.writerow([d, v, wit])
        return buf.getvalue()


def _alpha_positions(alpha: Sequence[int]):
    return {v: i for i, v in enumerate(alpha)}


def empirical_contraction(ball: Ball, alpha: Sequence[int], rho1,
                          rho1_name: str = "custom",
                          xs: Optional[Sequence[int]] = None,
                          max_pair_span: int = 4) -> ContractionMeasurement:
    """Exhaustively measure diam π(x) ∪ π(x') over gated pairs.

    Pairs (x, x') with d(x, x') <= rho1(d(x, alpha)) are sampled with both
    projections computed in the ball; the diameter is the index span along
    alpha.  Points whose projection could leave the certified region are
    excluded: we demand d(1,x) + rho1(d) + d within the sharp budget used
    by :func:`project`.
    """
    alpha = list(alpha)
    pos = _alpha_positions(alpha)
    meas = ContractionMeasurement(rho1_name)
    if xs is None:
        xs = range(ball.n_vertices)
    from .group_engine import _bfs_from
    dist_alpha = _bfs_from(ball, alpha, max_depth=ball.radius)
    max_dy = max(ball.dist(v) for v in alpha)
    for x in xs:
        x = int(x)
        dxa = dist_alpha.get(x)
        if dxa is None or dxa == 0:
            continue
        gate = rho1(dxa)
        # margin: x's projection and that of any gated partner must stay
        # certified; the partner can be rho1(d) further out
        if ball.dist(x) + max_dy + dxa + 2 * gate > 2 * ball.radius:
            continue
        try:
            px = project(ball, x, alpha)
        except UncertifiedRegionError:
            continue
        # partners within the gate, found by bounded BFS around x
        around = _bfs_from(ball, [x], max_depth=gate)
        for xp, dxxp in around.items():
            if dxxp > gate or dist_alpha.get(xp, 10 ** 9) < dxa:
                continue  # key the sample by the farther point
            try:
                pxp = project(ball, xp, alpha)
            except UncertifiedRegionError:
                continue
            ids = [pos[p] for p in px + pxp if p in pos]
            diam = max(ids) - min(ids)
            meas.add(dxa, diam, witness=(x, xp))
    return meas


# -- verdicts ----------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    verdict: str                      # growing | bounded-so-far | inconclusive
    scales: tuple
    values: tuple

    def to_json(self):
        return {"verdict": self.verdict, "scales": list(self.scales),
                "values": list(self.values)}


def contraction_verdict(data, scale: int) -> Verdict:
    """Trend call over dyadic scales scale, scale/2, scale/4, ...

    'growing' needs strict increase across the top three dyadic scales;
    'bounded-so-far' needs a plateau over the top half of the scales;
    otherwise, or with fewer than 3 scales, 'inconclusive'.
    """
    scales = []
    r = int(scale)
    while r >= 1:
        scales.append(r)
        r //= 2
    scales = tuple(sorted(set(scales)))
    if len(scales) < 3:
        return Verdict("inconclusive", scales, tuple(
            data.envelope(r) for r in scales))
    values = tuple(data.envelope(r) for r in scales)
    top3 = values[-3:]
    if top3[0] < top3[1] < top3[2]:
        return Verdict("growing", scales, values)
    half = values[len(values) // 2:]
    if len(set(half)) == 1:
        return Verdict("bounded-so-far", scales, values)
    return Verdict("inconclusive", scales, values)


# -- translation lengths -----------------------------------------------------------


@dataclass
class TranslationEstimate:
    element: WordTuple
    ns: tuple
    values: tuple
    estimate: Fraction
    slope: int
    subadditive: bool
    tau_lower_bound_ok: bool
    eventually_arithmetic: bool

    def to_json(self, alphabet=None):
        return {
            "element": list(self.element),
            "n": list(self.ns),
            "lengths": list(self.values),
            "estimate": [self.estimate.numerator, self.estimate.denominator],
            "final_slope": self.slope,
            "subadditive": self.subadditive,
            "tau_ge_one_third": self.tau_lower_bound_ok,
            "eventually_arithmetic": self.eventually_arithmetic,
        }


def translation_length(oracle: RelatorOracle, alphabet, g: WordTuple, n_max: int,
                       ball: Optional[Ball] = None) -> TranslationEstimate:
    """Sample |g^n| for n <= n_max and estimate tau(g) = lim |g^n|/n.

    Needs a ball of radius >= n_max * |g| (built on demand).  The estimate
    is min over sampled n of |g^n|/n, an upper bound for tau by
    subadditivity; rationality is reported only as 'the sampled lengths
    are eventually an arithmetic progression'.
    """
    g = free_reduce(tuple(g))
    if not g:
        raise ValidationError("translation length of the empty word")
    radius = n_max * len(g)
    if ball is None:
        ball = build_ball(oracle, alphabet, radius)
    elif ball.radius < radius:
        raise PreconditionError(
            f"ball radius {ball.radius} below required {radius}")
    ns = tuple(range(1, n_max + 1))
    values = []
    for n in ns:
        v = ball.vertex_of_word(power(g, n))
        values.append(ball.dist(v))
    values = tuple(values)
    lengths = {0: 0}
    lengths.update(dict(zip(ns, values)))
    subadd = all(lengths[m + n] <= lengths[m] + lengths[n]
                 for m in ns for n in ns if m + n in lengths)
    estimate = min(Fraction(v, n) for n, v in zip(ns, values))
    slope = values[-1] - values[-2] if len(values) >= 2 else values[-1]
    diffs = [values[i + 1] - values[i] for i in range(len(values) - 1)]
    arithmetic = len(diffs) >= 3 and len(set(diffs[-3:])) == 1
    return TranslationEstimate(
        element=g, ns=ns, values=values, estimate=estimate, slope=slope,
        subadditive=subadd,
        tau_lower_bound_ok=estimate >= Fraction(1, 3),
        eventually_arithmetic=arithmetic)


# -- in-component measurements -------------------------------------------------------


def maximal_letter_run(graph: LabelledGraph, letter: int) -> list:
    """Vertex path of a maximal run of ``letter``-edges (the candidate
    intersection of the component with the axis labelled by that letter)."""
    best: list = []
    for v in range(graph.n_vertices):
        if graph.step(v, -letter) is not None:
            continue
        run = [v]
        at = v
        while True:
            nxt = graph.step(at, letter)
            if nxt is None:
                break
            run.append(nxt)
            at = nxt
        if len(run) > len(best):
            best = run
    return best


@dataclass
class LocalContractionData:
    run: list
    distances: dict          # vertex -> d(vertex, run) inside the component
    projections: dict        # vertex -> list of run positions attaining it

    def witness_max(self):
        """(vertex, distance, diam π) for the farthest vertex."""
        v = max(self.distances, key=lambda u: (self.distances[u], u))
        ids = self.projections[v]
        return v, self.distances[v], max(ids) - min(ids)


def local_axis_contraction(graph: LabelledGraph, run: Sequence[int]
                           ) -> LocalContractionData:
    """In-component distances to the run and full projection sets.

    Justified as a stand-in for ambient measurements by the isometric,
    convex embedding of components and the agreement of in-component and
    ambient closest point projection; the ambient anchoring of the run is
    verified separately against a ball.
    """
    run = list(run)
    run_pos = {v: i for i, v in enumerate(run)}
    dist: dict = {v: 0 for v in run}
    best_proj: dict = {v: [run_pos[v]] for v in run}
    frontier = list(run)
    while frontier:
        nxt = []
        for u in frontier:
            for (_, w, _) in graph.incident(u):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    # full projection sets by reverse propagation (all geodesics to the run)
    order = sorted(dist, key=dist.get)
    proj: dict = {}
    for v in order:
        if dist[v] == 0:
            proj[v] = set(best_proj[v])
            continue
        acc = set()
        for (_, w, _) in graph.incident(v):
            if dist.get(w) == dist[v] - 1:
                acc |= proj[w]
        proj[v] = acc
    return LocalContractionData(
        run=run, distances=dist,
        projections={v: sorted(p) for v, p in proj.items()})


def anchored_run_on_axis(ball: Ball, graph: LabelledGraph,
                         run: Sequence[int], axis: Sequence[int]) -> bool:
    """Check that anchoring the run start on the axis maps the whole run
    onto consecutive axis vertices (the ambient side of the local
    measurements)."""
    from .group_engine import extend_component_map
    axis = list(axis)
    start = axis[0]
    emb = extend_component_map(graph, ball, run[0], start)
    image = [emb.vertex_map.get(v) for v in run]
    if any(v is None for v in image):
        return False
    return image == axis[:len(image)]


# -- SVG emission ------------------------------------------------------------------


def profile_svg(csv_text: str, title: str = "profile") -> str:
    """Minimal deterministic log-log SVG polyline derived from a CSV."""
    import math
    rows = list(csv.reader(io.StringIO(csv_text)))[1:]
    pts = [(int(r), int(v)) for r, v, *_ in rows]
    if not pts:
        pts = [(1, 0)]
    w, h, pad = 480, 320, 40

    def tx(r):
        lo = math.log(max(1, min(p[0] for p in pts)))
        hi = math.log(max(2, max(p[0] for p in pts)))
        return pad + (w - 2 * pad) * (math.log(max(1, r)) - lo) / max(hi - lo, 1e-9)

    def ty(v):
        hi = max(1, max(p[1] for p in pts))
        return h - pad - (h - 2 * pad) * math.log(1 + v) / math.log(1 + hi)

    path = " ".join(f"{tx(r):.1f},{ty(v):.1f}" for r, v in pts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">'
        f'<rect width="{w}" height="{h}" fill="white"/>'
        f'<text x="{pad}" y="20" font-size="13">{title}</text>'
        f'<polyline fill="none" stroke="black" points="{path}"/>'
        "</svg>\n")
