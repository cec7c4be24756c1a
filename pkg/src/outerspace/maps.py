"""Linear maps between marked graphs in the homotopy class of the markings.

A map G -> H is stored by lifts: each vertex v of G gets a point x_v in the
universal cover of H.  The edge e = (u -> w) then maps to the tree geodesic
from x_u to c(e).x_w, where c is the comarking of G; this is equivariant for
any choice of lifts, so the homotopy class is fixed and only the lifts vary.
The optimal map minimizes the largest edge slope; its value is certified
against the candidate ratio from the Lipschitz distance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List

from .errors import OptimalityGap
from .graphs import MarkedGraph, OEdge, lipschitz_distance, natural_key
from .tree import CoverTree, TreePoint

MAX_SWEEPS = 25
JOINT_AFTER = 3


@dataclass
class DifferenceOfMarkings:
    source: MarkedGraph
    target: MarkedGraph
    lifts: Dict[str, TreePoint]
    tree: CoverTree = field(repr=False)

    def image_endpoints(self, oe: OEdge):
        G = self.source
        u, w = G.origin(oe), G.terminus(oe)
        return self.lifts[u], self.tree.act(G.co(oe), self.lifts[w])

    def image(self, oe: OEdge):
        """Image path of an oriented edge as pieces (H-edge, a, b)."""
        return self.tree.geodesic(*self.image_endpoints(oe))

    def image_length(self, eid: str) -> Fraction:
        return self.tree.dist(*self.image_endpoints((eid, 1)))

    def slope(self, eid: str) -> Fraction:
        return self.image_length(eid) / self.source.length(eid)

    def slopes(self) -> Dict[str, Fraction]:
        return {eid: self.slope(eid) for eid in self.source.edge_ids()}

    def lipschitz(self) -> Fraction:
        return max(self.slopes().values())

    def tension_graph(self) -> List[str]:
        s = self.slopes()
        top = max(s.values())
        return [eid for eid in self.source.edge_ids() if s[eid] == top]

    def vertex_image(self, v):
        return self.tree.project(self.lifts[v])

    def germ(self, oe: OEdge):
        """The direction at f(origin) in which the image of oe leaves, or None if degenerate."""
        pieces = self.image(oe)
        return pieces[0][0] if pieces else None

    def gates(self, v, edges=None) -> List[List[OEdge]]:
        """Directions at v grouped by image germ, restricted to ``edges`` if given."""
        groups: Dict = {}
        for oe in self.source.directions(v):
            if edges is not None and oe[0] not in edges:
                continue
            groups.setdefault(self.germ(oe), []).append(oe)
        return [groups[k] for k in sorted(groups, key=lambda g: (g is None, str(g)))]

    def train_track(self) -> Dict[str, List[List[OEdge]]]:
        return {v: self.gates(v) for v in self.source.vertices}


# one-vertex min-max

def _lines_for(tree: CoverTree, A: TreePoint, B: TreePoint, L: Fraction, terms):
    """Each term becomes lines a + b t on the segment [A, B] of length L."""
    lines = []
    for kind, data, scale in terms:
        if kind == "pt":
            v0, vL = tree.dist(A, data), tree.dist(B, data)
            t0 = (v0 - vL + L) / 2
            h = v0 - t0
            lines.append(((h + t0) / scale, Fraction(-1) / scale))
            lines.append(((h - t0) / scale, Fraction(1) / scale))
        else:
            v0 = tree.dist(A, tree.act(data, A))
            vL = tree.dist(B, tree.act(data, B))
            lines.append((v0 / scale, (vL - v0) / L / scale))
    return lines


def _minmax_on_segment(lines, L):
    cands = {Fraction(0), L}
    for (a1, b1), (a2, b2) in itertools.combinations(lines, 2):
        if b1 != b2:
            t = (a2 - a1) / (b1 - b2)
            if 0 < t < L:
                cands.add(t)
    best = None
    for t in sorted(cands):
        val = max(a + b * t for a, b in lines)
        if best is None or val < best[0]:
            best = (val, t)
    return best


def _value(tree, X, terms):
    vals = []
    for kind, data, scale in terms:
        if kind == "pt":
            vals.append(tree.dist(X, data) / scale)
        else:
            vals.append(tree.dist(X, tree.act(data, X)) / scale)
    return max(vals)


def _descend(tree: CoverTree, X: TreePoint, terms, cap=10_000):
    """Minimize a convex max of distance terms over the tree, starting at X."""
    cur = _value(tree, X, terms)
    for _ in range(cap):
        moves = []
        if X.d is not None:
            A, B = tree.closed_edge(X)
            L = tree.length(X.d)
            moves.append((A, X.d, L))
        else:
            moves = [(X, oe, L) for oe, _, L in tree.directions(X)]
        best = None
        for A, oe, L in moves:
            B = tree.point(A.V + (oe,))
            val, t = _minmax_on_segment(_lines_for(tree, A, B, L, terms), L)
            if val < cur and (best is None or val < best[0]):
                best = (val, tree.point(A.V, oe, t))
        if best is None:
            return X, cur
        cur, X = best
    raise OptimalityGap(cur, None)


def _terms_for_vertex(G: MarkedGraph, tree, lifts, v):
    terms = []
    for eid in G.edge_ids():
        e = G.edges[eid]
        c = G.comarking[eid]
        L = e.length
        if e.src == v and e.dst == v:
            terms.append(("disp", c, L))
        elif e.src == v:
            terms.append(("pt", tree.act(c, lifts[e.dst]), L))
        elif e.dst == v:
            terms.append(("pt", tree.act(c.inverse(), lifts[e.src]), L))
    return terms


def initial_lifts(G: MarkedGraph, tree: CoverTree) -> Dict[str, TreePoint]:
    """Collapse a spanning tree onto the root: x_w = c(e)^-1 x_u along tree edges."""
    lifts = {G.base: tree.root}
    stack = [G.base]
    while stack:
        u = stack.pop()
        for oe in G.directions(u):
            w = G.terminus(oe)
            if w not in lifts:
                lifts[w] = tree.act(G.co(oe).inverse(), lifts[u])
                stack.append(w)
    return lifts


def _max_slope(G, tree, lifts):
    best = Fraction(0)
    for eid in G.edge_ids():
        e = G.edges[eid]
        d = tree.dist(lifts[e.src], tree.act(G.comarking[eid], lifts[e.dst]))
        best = max(best, d / e.length)
    return best


def coordinate_descent(G: MarkedGraph, tree: CoverTree, lifts, target=None, sweeps=MAX_SWEEPS):
    lifts = dict(lifts)
    order = sorted(G.vertices, key=natural_key)
    for _ in range(sweeps):
        moved = False
        for v in order:
            terms = _terms_for_vertex(G, tree, lifts, v)
            X, val = _descend(tree, lifts[v], terms)
            if X != lifts[v]:
                lifts[v] = X
                moved = True
        new = _max_slope(G, tree, lifts)
        if target is not None and new == target:
            return lifts, new
        if not moved:
            return lifts, new
    return lifts, _max_slope(G, tree, lifts)


def optimal_map(G: MarkedGraph, H: MarkedGraph, lifts=None) -> DifferenceOfMarkings:
    """A linear map G -> H whose Lipschitz constant equals the candidate ratio."""
    if G.rank != H.rank:
        raise ValueError("rank mismatch")
    target = lipschitz_distance(G, H).ratio
    tree = CoverTree(H)
    if lifts is None:
        lifts = initial_lifts(G, tree)
    sweeps = MAX_SWEEPS if len(G.vertices) == 1 else JOINT_AFTER
    lifts, value = coordinate_descent(G, tree, lifts, target, sweeps)
    if value != target and len(G.vertices) > 1:
        from .lp import joint_descent
        lifts, value = joint_descent(G, tree, lifts, target)
    if value != target:
        raise OptimalityGap(value, target)
    return DifferenceOfMarkings(G, H, lifts, tree)
