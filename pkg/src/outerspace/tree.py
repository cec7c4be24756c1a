"""Points of the universal cover of a marked graph.

A point is ``(V, d, s)``: a reduced edge path ``V`` from the base vertex, then
``s`` units along the oriented edge ``d`` (``d is None`` and ``s == 0`` at a
vertex).  ``V + [d]`` is always reduced, so each point has one representation.
The free group acts by prepending the marking path of a word.
"""

from fractions import Fraction
from typing import NamedTuple, Optional, Tuple

from .graphs import MarkedGraph, OEdge, inv_edge, tighten
from .words import Word


class TreePoint(NamedTuple):
    V: Tuple[OEdge, ...]
    d: Optional[OEdge]
    s: Fraction


class CoverTree:
    def __init__(self, H: MarkedGraph):
        self.H = H
        self._paths = {}

    def length(self, oe) -> Fraction:
        return self.H.edges[oe[0]].length

    def point(self, V=(), d=None, s=Fraction(0)) -> TreePoint:
        V = tuple(tighten(V))
        s = Fraction(s)
        if d is None or s == 0:
            return TreePoint(V, None, Fraction(0))
        L = self.length(d)
        if s == L:
            return TreePoint(tuple(tighten(V + (d,))), None, Fraction(0))
        if not 0 < s < L:
            raise ValueError("offset outside the edge")
        if V and V[-1] == inv_edge(d):
            return TreePoint(V[:-1], V[-1], L - s)
        return TreePoint(V, d, s)

    root = property(lambda self: TreePoint((), None, Fraction(0)))

    def word_path(self, w: Word):
        p = self._paths.get(w)
        if p is None:
            p = tuple(self.H.marking_path(w))
            self._paths[w] = p
        return p

    def act(self, w: Word, P: TreePoint) -> TreePoint:
        if not w:
            return P
        return self.point(self.word_path(w) + P.V, P.d, P.s)

    def vertex_of(self, V) -> str:
        return self.H.terminus(V[-1]) if V else self.H.base

    def _extents(self, P):
        seq = [(oe, self.length(oe)) for oe in P.V]
        if P.d is not None:
            seq.append((P.d, P.s))
        return seq

    def norm(self, P) -> Fraction:
        return sum((x for _, x in self._extents(P)), Fraction(0))

    def dist(self, P: TreePoint, Q: TreePoint) -> Fraction:
        a, b = self._extents(P), self._extents(Q)
        overlap = Fraction(0)
        for (oa, xa), (ob, xb) in zip(a, b):
            if oa != ob:
                break
            overlap += min(xa, xb)
            if xa != xb:
                break
        return sum((x for _, x in a), Fraction(0)) + sum((x for _, x in b), Fraction(0)) - 2 * overlap

    def geodesic(self, P: TreePoint, Q: TreePoint):
        """Pieces ``(oe, a, b)`` in H: traverse ``oe`` from offset a to offset b."""
        a, b = self._extents(P), self._extents(Q)
        i = 0
        while i < min(len(a), len(b)) and a[i][0] == b[i][0] and a[i][1] == b[i][1] == self.length(a[i][0]):
            i += 1
        out = []
        if i < len(a) and i < len(b) and a[i][0] == b[i][0]:
            oe = a[i][0]
            L = self.length(oe)
            xa, xb = a[i][1], b[i][1]
            if xa < xb:
                # P stops on this edge, Q continues along it
                out.append((oe, xa, xb))
                out.extend((o, Fraction(0), x) for o, x in b[i + 1:])
                return out
            if xa > xb:
                for o, x in reversed(a[i + 1:]):
                    Lo = self.length(o)
                    out.append((inv_edge(o), Lo - x, Lo))
                out.append((inv_edge(oe), L - xa, L - xb))
                return out
            i += 1
        for o, x in reversed(a[i:]):
            Lo = self.length(o)
            out.append((inv_edge(o), Lo - x, Lo))
        out.extend((o, Fraction(0), x) for o, x in b[i:])
        return out

    def along(self, P: TreePoint, Q: TreePoint, t: Fraction) -> TreePoint:
        """The point at distance t from P on the geodesic to Q."""
        t = Fraction(t)
        if t == 0:
            return P
        cur = P
        for oe, a, b in self.geodesic(P, Q):
            seg = b - a
            if t <= seg:
                return self._step(cur, oe, a, t)
            cur = self._step(cur, oe, a, seg)
            t -= seg
        if t == 0:
            return cur
        raise ValueError("distance exceeds the geodesic")

    def _step(self, cur: TreePoint, oe, a, t) -> TreePoint:
        # cur sits at offset a on oe (a == 0 means at the origin vertex)
        if cur.d is None:
            return self.point(cur.V, oe, a + t)
        if cur.d == oe:
            return self.point(cur.V, oe, cur.s + t)
        # moving backwards along cur.d
        return self.point(cur.V, cur.d, cur.s - t)

    def directions(self, P: TreePoint):
        """(segment end, length) for each tree edge at a vertex point."""
        out = []
        for oe in self.H.directions(self.vertex_of(P.V)):
            end = self.point(P.V + (oe,))
            out.append((oe, end, self.length(oe)))
        return out

    def closed_edge(self, P: TreePoint):
        """Endpoints (A, B) of the tree edge containing an interior point."""
        return self.point(P.V), self.point(P.V + (P.d,))

    def project(self, P: TreePoint):
        """The image in H: a vertex name, or (edge id, offset along its orientation)."""
        if P.d is None:
            return self.vertex_of(P.V)
        eid, sgn = P.d
        return (eid, P.s if sgn > 0 else self.length(P.d) - P.s)
