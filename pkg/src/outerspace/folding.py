"""Standard geodesics and greedy folding paths.

The engine folds every illegal turn at unit speed.  All gates at all
vertices fold by the same amount delta, and each step jumps straight to the
next combinatorial event:

* two directions of a gate stop having a common image;
* an edge folded at one end is used up (delta = its length);
* an edge folded at both ends is used up from both sides (delta = half its length).

Each step identifies the initial delta-segments of each gate, drops the
valence-two vertices this leaves behind, and rescales to volume one.  The
time of a snapshot is stored as the exact ratio exp(t), the product of the
volume ratios so far.  The map to the target is carried as vertex lifts into
the universal cover of the target, exactly as in ``maps``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (EventCapExceeded, NotIllegalEndpoint, NotTense, NotTrainTrack,
                     OptimalityGap, TrivialClass)
from .graphs import (LogScalar, MarkedGraph, OEdge, inv_edge, natural_key, reverse_path, tighten)
from .maps import DifferenceOfMarkings, optimal_map
from .tree import CoverTree, TreePoint
from .words import CyclicWord, Word

DEFAULT_EVENT_CAP = 5000
LEGAL_THRESHOLD = 3


def m_breve(rank: int) -> int:
    """Upper bound for the illegality count of any train track structure."""
    return (2 * rank - 1) * (2 * rank - 2) // 2


def illegal_length_threshold(rank: int) -> int:
    mb = m_breve(rank)
    return (18 * mb * (3 * rank - 3) + 6) * (2 * rank - 1)


Piece = Tuple[OEdge, Fraction, Fraction]


def _merge_pieces(pieces: List[Piece]) -> List[Piece]:
    out: List[Piece] = []
    for oe, a, b in pieces:
        if b == a:
            continue
        if out and out[-1][0] == oe and out[-1][2] == a:
            out[-1] = (oe, out[-1][1], b)
        else:
            out.append((oe, a, b))
    return out


class _State:
    """Mutable working copy of a graph with its map to the target."""

    def __init__(self, G: MarkedGraph, lifts: Dict[str, TreePoint], tree: CoverTree, lam: Fraction):
        self.tree = tree
        self.rank = G.rank
        self.base = G.base
        self.vertices = set(G.vertices)
        self.edges = {eid: [e.src, e.dst, e.length, G.comarking[eid]] for eid, e in G.edges.items()}
        self.marking = [list(p) for p in G.marking]
        self.lifts = dict(lifts)
        self.lam = Fraction(lam)
        self._counter = 1 + max([int(x[1:]) for x in list(self.edges) + list(self.vertices)
                                 if x[1:].isdigit()] + [0])
        self.trace: Dict[str, List[Piece]] = {}

    # structure

    def fresh(self, prefix):
        while True:
            name = f"{prefix}{self._counter}"
            self._counter += 1
            if name not in self.edges and name not in self.vertices:
                return name

    def origin(self, oe):
        e = self.edges[oe[0]]
        return e[0] if oe[1] > 0 else e[1]

    def terminus(self, oe):
        e = self.edges[oe[0]]
        return e[1] if oe[1] > 0 else e[0]

    def length(self, oe):
        eid = oe[0] if isinstance(oe, tuple) else oe
        return self.edges[eid][2]

    def co(self, oe) -> Word:
        w = self.edges[oe[0]][3]
        return w if oe[1] > 0 else w.inverse()

    def directions(self, v):
        out = []
        for eid in sorted(self.edges, key=natural_key):
            e = self.edges[eid]
            if e[0] == v:
                out.append((eid, 1))
            if e[1] == v:
                out.append((eid, -1))
        return out

    def volume(self):
        return sum((e[2] for e in self.edges.values()), Fraction(0))

    def rank_check(self):
        if len(self.edges) - len(self.vertices) + 1 != self.rank:
            raise AssertionError("folding changed the rank of the graph")

    # map data

    def image_end(self, oe):
        return self.tree.act(self.co(oe), self.lifts[self.terminus(oe)])

    def image(self, oe):
        return self.tree.geodesic(self.lifts[self.origin(oe)], self.image_end(oe))

    def image_length(self, eid):
        return self.tree.dist(self.lifts[self.edges[eid][0]], self.image_end((eid, 1)))

    def germ(self, oe):
        p = self.image(oe)
        return p[0][0] if p else None

    def gates(self, v) -> List[List[OEdge]]:
        groups: Dict = {}
        for oe in self.directions(v):
            groups.setdefault(self.germ(oe), []).append(oe)
        return [groups[k] for k in sorted(groups, key=lambda g: str(g))]

    def all_gates(self):
        return {v: self.gates(v) for v in sorted(self.vertices, key=natural_key)}

    def agreement(self, o1, o2) -> Fraction:
        p1, p2 = self.image(o1), self.image(o2)
        total = Fraction(0)
        for (e1, a1, b1), (e2, a2, b2) in zip(p1, p2):
            if e1 != e2 or a1 != a2:
                break
            total += min(b1, b2) - a1
            if b1 != b2:
                break
        return total

    # bookkeeping of the fold map

    def start_trace(self):
        self.trace = {eid: [((eid, 1), Fraction(0), e[2])] for eid, e in self.edges.items()}

    def _replace_in_trace(self, eid, forward: List[Piece], old_len):
        def sub(piece):
            (pe, ps), a, b = piece
            if pe != eid:
                return [piece]
            fa, fb = (a, b) if ps > 0 else (old_len - b, old_len - a)
            out = []
            pos = Fraction(0)
            for noe, na, nb in forward:
                seg = nb - na
                x, y = max(fa, pos), min(fb, pos + seg)
                if x < y:
                    out.append((noe, na + (x - pos), na + (y - pos)))
                pos += seg
            if ps < 0:
                out = [(inv_edge(noe), self.length(noe) - y, self.length(noe) - x)
                       for noe, x, y in reversed(out)]
            return out

        for k, pieces in self.trace.items():
            self.trace[k] = [q for p in pieces for q in sub(p)]

    def _replace_in_marking(self, eid, forward: List[OEdge]):
        backward = reverse_path(forward)
        for i, p in enumerate(self.marking):
            out = []
            for oe in p:
                if oe[0] == eid:
                    out.extend(forward if oe[1] > 0 else backward)
                else:
                    out.append(oe)
            self.marking[i] = out

    # elementary operations

    def split(self, oe, delta) -> OEdge:
        """Cut oe at distance delta from its origin; return the initial segment."""
        L = self.length(oe)
        if delta == L:
            return oe
        eid = oe[0]
        v, w = self.origin(oe), self.terminus(oe)
        c = self.co(oe)
        p = self.fresh("v")
        s1, s2 = self.fresh("e"), self.fresh("e")
        self.lifts[p] = self.tree.along(self.lifts[v], self.image_end(oe), self.lam * delta)
        self.vertices.add(p)
        self.edges[s1] = [v, p, delta, Word()]
        self.edges[s2] = [p, w, L - delta, c]
        if oe[1] > 0:
            forward = [((s1, 1), Fraction(0), delta), ((s2, 1), Fraction(0), L - delta)]
        else:
            forward = [((s2, -1), Fraction(0), L - delta), ((s1, -1), Fraction(0), delta)]
        del self.edges[eid]
        self._replace_in_trace(eid, forward, L)
        self._replace_in_marking(eid, [f[0] for f in forward])
        return (s1, 1)

    def gauge(self, y, g: Word):
        if y == self.base:
            raise AssertionError("the base vertex is never gauged")
        ginv = g.inverse()
        for e in self.edges.values():
            w = e[3]
            if e[1] == y:
                w = w * g
            if e[0] == y:
                w = ginv * w
            e[3] = w
        self.lifts[y] = self.tree.act(ginv, self.lifts[y])

    def rebase(self, d: OEdge):
        """Move the base vertex across the edge d."""
        p = self.terminus(d)
        if p == self.base:
            return
        g = self.co(d).inverse()
        if g:
            self.gauge(p, g)
        self.marking = [tighten([inv_edge(d)] + path + [d]) for path in self.marking]
        self.base = p

    def _rename_vertex(self, old, new):
        for e in self.edges.values():
            if e[0] == old:
                e[0] = new
            if e[1] == old:
                e[1] = new
        self.vertices.discard(old)
        del self.lifts[old]

    def identify(self, seg_y: OEdge, seg_z: OEdge):
        """Identify two segments leaving the same vertex with the same image."""
        if seg_y[0] == seg_z[0]:
            return seg_z, None
        v = self.origin(seg_y)
        y, z = self.terminus(seg_y), self.terminus(seg_z)
        if y != z:
            if y == self.base or (y == v and z != self.base):
                seg_y, seg_z, y, z = seg_z, seg_y, z, y
            g = self.co(seg_y).inverse() * self.co(seg_z)
            if g:
                self.gauge(y, g)
            if self.lifts[y] != self.lifts[z]:
                raise AssertionError("identified vertices have different lifts")
            self._rename_vertex(y, z)
        elif self.co(seg_y) != self.co(seg_z):
            raise AssertionError("parallel segments with different comarkings")
        eid_y, sy = seg_y
        eid_z, sz = seg_z
        L = self.length(seg_y)
        del self.edges[eid_y]
        self._replace_in_trace(eid_y, [((eid_z, sy * sz), Fraction(0), L)], L)
        self._replace_in_marking(eid_y, [(eid_z, sy * sz)])
        return seg_z, seg_y

    def unsubdivide(self, strict=True):
        changed = True
        while changed:
            changed = False
            if len(self.directions(self.base)) == 2 and len(self.vertices) > 1:
                self.rebase(self.directions(self.base)[0])
            for v in sorted(self.vertices, key=natural_key):
                if v == self.base:
                    continue
                ds = self.directions(v)
                if len(ds) != 2 or ds[0][0] == ds[1][0]:
                    continue
                d1, d2 = ds
                if self.germ(d1) == self.germ(d2):
                    if strict:
                        raise AssertionError("illegal turn at a valence-two vertex")
                    continue
                a, b = self.terminus(d1), self.terminus(d2)
                l1, l2 = self.length(d1), self.length(d2)
                word = self.co(inv_edge(d1)) * self.co(d2)
                e = self.fresh("e")
                self.edges[e] = [a, b, l1 + l2, word]
                e1, e2 = d1[0], d2[0]
                f1 = [((e, -1), l2, l1 + l2)] if d1[1] > 0 else [((e, 1), Fraction(0), l1)]
                f2 = [((e, 1), l1, l1 + l2)] if d2[1] > 0 else [((e, -1), Fraction(0), l2)]
                del self.edges[e1]
                del self.edges[e2]
                self._replace_in_trace(e1, f1, l1)
                self._replace_in_trace(e2, f2, l2)
                self._collapse_marking(d1, d2, e)
                del self.lifts[v]
                self.vertices.discard(v)
                if self.image_length(e) != self.lam * (l1 + l2):
                    raise AssertionError("illegal turn at a valence-two vertex")
                changed = True
                break

    def _collapse_marking(self, d1, d2, e):
        a_in, b_out = inv_edge(d1), d2
        for i, p in enumerate(self.marking):
            out = []
            j = 0
            while j < len(p):
                if j + 1 < len(p) and p[j] == a_in and p[j + 1] == b_out:
                    out.append((e, 1))
                    j += 2
                elif j + 1 < len(p) and p[j] == inv_edge(b_out) and p[j + 1] == inv_edge(a_in):
                    out.append((e, -1))
                    j += 2
                elif p[j][0] in (d1[0], d2[0]):
                    raise AssertionError("marking path ends at a non-base vertex")
                else:
                    out.append(p[j])
                    j += 1
            self.marking[i] = out

    def tighten_marking(self):
        self.marking = [tighten(p) for p in self.marking]

    def normalize(self) -> Fraction:
        vol = self.volume()
        for e in self.edges.values():
            e[2] = e[2] / vol
        self.lam = self.lam * vol
        self.trace = {k: [(oe, a / vol, b / vol) for oe, a, b in pieces]
                      for k, pieces in self.trace.items()}
        return vol

    def snapshot(self) -> MarkedGraph:
        verts = sorted(self.vertices, key=natural_key)
        edges = {eid: (e[0], e[1], e[2]) for eid, e in self.edges.items()}
        comarking = {eid: e[3] for eid, e in self.edges.items()}
        return MarkedGraph(self.rank, verts, edges, self.marking, comarking, self.base)

    # folding

    def check_tense(self):
        for eid, e in self.edges.items():
            if self.image_length(eid) != self.lam * e[2]:
                raise NotTense(f"edge {eid} is not stretched by the maximal slope {self.lam}")

    def check_train_track(self, gates):
        for v, gs in gates.items():
            if len(gs) < 2:
                raise NotTrainTrack(f"vertex {v} has a single gate")

    def event_distance(self, gates) -> Optional[Fraction]:
        best = None
        ends: Dict[str, int] = {}
        for v, gs in gates.items():
            for g in gs:
                if len(g) < 2:
                    continue
                for o1, o2 in itertools.combinations(g, 2):
                    d = self.agreement(o1, o2) / self.lam
                    best = d if best is None else min(best, d)
                for oe in g:
                    ends[oe[0]] = ends.get(oe[0], 0) + 1
        if best is None:
            return None
        for eid, k in ends.items():
            best = min(best, self.length(eid) / k)
        return best

    def fold(self, delta, gates):
        """Identify the initial delta-segments of every gate of size at least two."""
        todo = [(v, list(g)) for v, gs in gates.items() for g in gs if len(g) >= 2]
        alias: Dict[OEdge, OEdge] = {}

        def current(oe):
            while oe in alias:
                oe = alias[oe]
            return oe

        segments = []
        for v, g in todo:
            segs = []
            for oe in g:
                oe = current(oe)
                far = inv_edge(oe)
                seg = self.split(oe, delta)
                if seg != oe:
                    # the far direction now belongs to the second half
                    alias[far] = self._far_after_split(seg)
                    alias[oe] = seg
                segs.append(seg)
            segments.append(segs)
        for segs in segments:
            segs = [current(s) for s in segs]
            z = segs[0]
            for y in segs[1:]:
                y, z = current(y), current(z)
                if y[0] == z[0]:
                    continue
                kept, gone = self.identify(y, z)
                if gone is not None:
                    alias[gone] = kept
                    alias[inv_edge(gone)] = inv_edge(kept)
                z = kept
        self.tighten_marking()
        self.rank_check()

    def _far_after_split(self, seg):
        # the second half leaves the split point p and ends at the old far vertex
        p = self.terminus(seg)
        for oe in self.directions(p):
            if oe[0] != seg[0]:
                return inv_edge(oe)
        raise AssertionError("split vertex has no second half")


@dataclass
class FoldEvent:
    ratio: Fraction
    graph: MarkedGraph
    residual: Fraction
    gates: Dict[str, List[List[OEdge]]]
    lifts: Dict[str, TreePoint] = field(repr=False)
    fold_map: Optional[Dict[str, List[Piece]]] = field(default=None, repr=False)
    is_event: bool = True

    @property
    def time(self) -> LogScalar:
        return LogScalar(self.ratio)

    @property
    def illegality(self) -> int:
        return illegality(self.gates)


def illegality(gates) -> int:
    return sum(len(g) - 1 for gs in gates.values() for g in gs)


@dataclass
class FoldingPath:
    target: MarkedGraph
    events: List[FoldEvent]
    tree: CoverTree = field(repr=False)

    def __len__(self):
        return len(self.events)

    @property
    def graphs(self):
        return [e.graph for e in self.events]

    @property
    def ratios(self):
        return [e.ratio for e in self.events]

    @property
    def total_ratio(self) -> Fraction:
        return self.events[-1].ratio

    def ratio_between(self, i, j) -> Fraction:
        return self.events[j].ratio / self.events[i].ratio

    def state(self, i) -> _State:
        ev = self.events[i]
        return _State(ev.graph, ev.lifts, self.tree, ev.residual)

    def sample(self, i, delta) -> Tuple[Fraction, MarkedGraph, Dict]:
        """The graph reached by folding event i partway, by delta (before rescaling)."""
        st = self.state(i)
        gates = st.all_gates()
        full = st.event_distance(gates)
        if full is None or not 0 <= delta <= full:
            raise ValueError("delta must lie between 0 and the distance to the next event")
        if delta == 0:
            return self.events[i].ratio, self.events[i].graph, gates
        st.fold(delta, gates)
        st.unsubdivide()
        vol = st.normalize()
        return self.events[i].ratio / vol, st.snapshot(), st.all_gates()

    def fold_map(self, i, j) -> Dict[str, List[Piece]]:
        """The composite fold map from snapshot i to snapshot j, edge by edge."""
        if j < i:
            raise ValueError("fold maps go forward in time")
        G = self.events[i].graph
        current = {eid: [((eid, 1), Fraction(0), G.length(eid))] for eid in G.edges}
        for k in range(i, j):
            step = self.events[k].fold_map
            src, dst = self.events[k].graph, self.events[k + 1].graph
            sigma = self.events[k + 1].ratio / self.events[k].ratio
            current = {eid: _merge_pieces([q for p in pieces for q in _push_piece(p, step, src, dst, sigma)])
                       for eid, pieces in current.items()}
        return current


def _push_piece(piece, step, src: MarkedGraph, dst: MarkedGraph, sigma):
    (eid, s), a, b = piece
    L = src.length(eid)
    fa, fb = (a, b) if s > 0 else (L - b, L - a)
    fa, fb = fa * sigma, fb * sigma
    out = []
    pos = Fraction(0)
    for noe, na, nb in step[eid]:
        seg = nb - na
        x, y = max(fa, pos), min(fb, pos + seg)
        if x < y:
            out.append((noe, na + (x - pos), na + (y - pos)))
        pos += seg
    if s < 0:
        out = [(inv_edge(noe), dst.length(noe[0]) - y, dst.length(noe[0]) - x)
               for noe, x, y in reversed(out)]
    return out


def fold_path(phi: DifferenceOfMarkings, substeps: int = 1, event_cap: Optional[int] = None) -> FoldingPath:
    """Fold a fully tense train-track map until it becomes an isometry."""
    from ._validation import budget
    cap = budget(event_cap, DEFAULT_EVENT_CAP)
    G = phi.source
    lam = phi.lipschitz()
    st = _State(G, phi.lifts, phi.tree, lam)
    st.check_tense()
    gates = st.all_gates()
    st.check_train_track(gates)
    ratio = Fraction(1)
    events = []
    while True:
        if len(events) > cap:
            raise EventCapExceeded(f"more than {cap} folding events")
        snap = st.snapshot()
        gates = st.all_gates()
        st.check_train_track(gates)
        ev = FoldEvent(ratio, snap, st.lam, gates, dict(st.lifts))
        events.append(ev)
        delta = st.event_distance(gates)
        if delta is None:
            break
        pieces = substeps if substeps > 1 else 1
        step_delta = delta / pieces
        for k in range(pieces):
            st.start_trace()
            cur_gates = st.all_gates() if k else gates
            st.fold(step_delta, cur_gates)
            st.unsubdivide()
            vol = st.normalize()
            ratio = ratio / vol
            st.check_tense()
            events[-1].fold_map = {k2: _merge_pieces(v) for k2, v in st.trace.items()}
            if k < pieces - 1:
                gates_k = st.all_gates()
                events.append(FoldEvent(ratio, st.snapshot(), st.lam, gates_k, dict(st.lifts),
                                        is_event=False))
            step_delta = step_delta / vol
    if st.lam != 1:
        raise OptimalityGap(st.lam, Fraction(1))
    return FoldingPath(phi.target, events, phi.tree)


# standard geodesics

@dataclass
class StandardGeodesic:
    start: MarkedGraph
    rescaled: MarkedGraph
    rescale: LogScalar
    path: FoldingPath
    optimal: DifferenceOfMarkings = field(repr=False)

    @property
    def total_ratio(self) -> Fraction:
        return self.rescale.ratio * self.path.total_ratio

    @property
    def rescaling_empty(self) -> bool:
        return self.rescale.ratio == 1 and self.start == self.rescaled


def standard_geodesic(G: MarkedGraph, H: MarkedGraph, substeps: int = 1,
                      event_cap: Optional[int] = None) -> StandardGeodesic:
    phi = optimal_map(G, H)
    lam = phi.lipschitz()
    st = _State(G, phi.lifts, phi.tree, lam)
    shrunk = False
    for eid in list(st.edges):
        img = st.image_length(eid)
        new = img / lam
        if new != st.edges[eid][2]:
            shrunk = True
        st.edges[eid][2] = new
    for eid in sorted(list(st.edges), key=natural_key):
        if eid in st.edges and st.edges[eid][2] == 0:
            _collapse(st, eid)
    st.rank_check()
    shrunk = _slide_single_gates(st) or shrunk
    vol = st.normalize()
    rescaled = st.snapshot() if shrunk else G
    if not shrunk:
        st = _State(G, phi.lifts, phi.tree, lam)
    tense = DifferenceOfMarkings(rescaled, H, dict(st.lifts), phi.tree)
    path = fold_path(tense, substeps=substeps, event_cap=event_cap)
    return StandardGeodesic(G, rescaled, LogScalar(1 / vol if shrunk else Fraction(1)), path, phi)


def _slide_single_gates(st: _State, cap=10_000) -> bool:
    """Fold away vertices whose directions all share one gate.

    Folding every direction at a vertex slides the vertex; slopes stay equal
    to the Lipschitz constant, so the result is still on a geodesic to H.
    """
    moved = False
    for _ in range(cap):
        single = None
        for v in sorted(st.vertices, key=natural_key):
            gs = st.gates(v)
            if len(gs) == 1:
                single = {v: gs}
                break
        if single is None:
            return moved
        moved = True
        delta = st.event_distance(single)
        st.start_trace()
        st.fold(delta, single)
        _prune(st)
        st.unsubdivide(strict=False)
        st.rank_check()
    raise EventCapExceeded("vertex sliding did not terminate")


def _prune(st: _State):
    while True:
        leaf = next((v for v in sorted(st.vertices, key=natural_key)
                     if len(st.directions(v)) == 1), None)
        if leaf is None:
            return
        d = st.directions(leaf)[0]
        p = st.terminus(d)
        if leaf == st.base:
            g = st.co(d).inverse()
            if g:
                st.gauge(p, g)
            st.base = p
        del st.edges[d[0]]
        st.vertices.discard(leaf)
        del st.lifts[leaf]
        st.marking = [tighten([oe for oe in path if oe[0] != d[0]]) for path in st.marking]


def _collapse(st: _State, eid):
    u, w, _, c = st.edges[eid]
    if u == w:
        raise AssertionError("a loop cannot have a degenerate image")
    if w == st.base:
        st.gauge(u, c)
        u, w = w, u
        keep, gone = u, w
    else:
        st.gauge(w, c.inverse())
        keep, gone = u, w
    if st.edges[eid][3]:
        raise AssertionError("collapsed edge still carries a word")
    del st.edges[eid]
    st._rename_vertex(gone, keep)
    for i, p in enumerate(st.marking):
        st.marking[i] = tighten([oe for oe in p if oe[0] != eid])


# loops along a path

def turns(G: MarkedGraph, loop: Sequence[OEdge]):
    """(incoming direction, outgoing direction) at each vertex of a cyclic edge loop."""
    n = len(loop)
    return [(inv_edge(loop[i]), loop[(i + 1) % n]) for i in range(n)]


def gate_index(gates, v):
    return {oe: k for k, g in enumerate(gates.get(v, [])) for oe in g}


def illegal_turns(G: MarkedGraph, gates, loop) -> List[int]:
    """Positions i such that the turn after loop[i] is illegal."""
    out = []
    for i, (a, b) in enumerate(turns(G, loop)):
        v = G.origin(b)
        idx = gate_index(gates, v)
        if idx.get(a) is not None and idx.get(a) == idx.get(b):
            out.append(i)
    return out


@dataclass(frozen=True)
class LoopRecord:
    ratio: Fraction
    length: Fraction
    k: int
    leg: Fraction
    ilg: Fraction
    ntr: Fraction
    m: int


def decompose(G: MarkedGraph, gates, alpha, rank=None):
    """Length, illegal-turn count and the leg/ilg/ntr split of alpha in G."""
    loop = G.loop(alpha)
    rank = rank or G.rank
    mb = m_breve(rank)
    total = G.path_length(loop)
    cuts = illegal_turns(G, gates, loop)
    k = len(cuts)
    if k == 0:
        if total >= LEGAL_THRESHOLD:
            return total, 0, total, Fraction(0), Fraction(0)
        return total, 0, Fraction(0), Fraction(0), total
    # legal segments between consecutive illegal turns, cyclically
    segs = []
    n = len(loop)
    for j in range(k):
        start = cuts[j] + 1
        end = cuts[(j + 1) % k] + 1 if j + 1 < k else cuts[0] + 1 + n
        seg = [loop[t % n] for t in range(start, end)]
        segs.append(G.path_length(seg))
    long = [s >= LEGAL_THRESHOLD for s in segs]
    leg = sum((s for s, lg in zip(segs, long) if lg), Fraction(0))
    ilg = ntr = Fraction(0)
    if not any(long):
        if k >= mb + 1:
            ilg = total
        else:
            ntr = total
        return total, k, leg, ilg, ntr
    # rotate so that a long segment comes first, then collect runs of short ones
    first = long.index(True)
    order = list(range(first, k)) + list(range(first))
    run: List[int] = []
    for idx in order + [first]:
        if long[idx]:
            if run:
                piece = sum((segs[t] for t in run), Fraction(0))
                if len(run) + 1 >= mb + 1:
                    ilg += piece
                else:
                    ntr += piece
                run = []
        else:
            run.append(idx)
    return total, k, leg, ilg, ntr


def loop_profile(alpha, path: FoldingPath) -> List[LoopRecord]:
    if isinstance(alpha, str):
        alpha = CyclicWord(alpha)
    if not alpha:
        raise TrivialClass("the trivial class has no profile")
    out = []
    for ev in path.events:
        total, k, leg, ilg, ntr = decompose(ev.graph, ev.gates, alpha)
        out.append(LoopRecord(ev.ratio, total, k, leg, ilg, ntr, ev.illegality))
    return out


def _backtracks(top, cur):
    return top[0] == inv_edge(cur[0])


def image_loop(path: FoldingPath, i: int, j: int, alpha):
    """Push alpha|G_i through the fold map and tighten it in G_j.

    Returns the tightened loop as full edges of G_j, and for each turn of it
    (the turn after edge t) the list of turns of alpha|G_i that landed there.
    """
    Gi, Gj = path.events[i].graph, path.events[j].graph
    loop_i = Gi.loop(alpha)
    fm = path.fold_map(i, j)
    stack: List[list] = []
    start: List[int] = []
    for t, oe in enumerate(loop_i):
        img = fm[oe[0]]
        if oe[1] < 0:
            img = [(inv_edge(q), Gj.length(q[0]) - y, Gj.length(q[0]) - x) for q, x, y in reversed(img)]
        for n, (q, a, b) in enumerate(img):
            cur = [q, a, b, [t] if n == len(img) - 1 else []]
            while True:
                if not stack or not _backtracks(stack[-1], cur):
                    stack.append(cur)
                    break
                top = stack[-1]
                ov = min(top[2] - top[1], cur[2] - cur[1])
                top[2] -= ov
                cur[1] += ov
                junction = top[3]
                top[3] = []
                if top[2] == top[1]:
                    stack.pop()
                    prev = stack[-1][3] if stack else start
                    prev.extend(junction)
                    if cur[2] == cur[1]:
                        prev.extend(cur[3])
                        break
                    continue
                top[3] = junction + cur[3]
                break
    # cyclic tightening across the seam
    while len(stack) >= 2 and _backtracks(stack[-1], stack[0]):
        last, first = stack[-1], stack[0]
        ov = min(last[2] - last[1], first[2] - first[1])
        last[2] -= ov
        first[1] += ov
        seam = last[3] + start
        last[3] = []
        if last[2] == last[1]:
            stack.pop()
            seam = stack[-1][3] + seam
            stack[-1][3] = []
        if first[2] == first[1]:
            stack.pop(0)
            seam = seam + first[3]
        start = seam
    # the seam markers belong to the turn before the first piece
    stack[-1][3] = stack[-1][3] + start
    k = next((k for k, piece in enumerate(stack) if piece[1] == 0), None)
    if k is None:
        raise AssertionError("tightened image never passes a vertex")
    stack = stack[k:] + stack[:k]
    # merge pieces that continue along the same edge
    edges: List[OEdge] = []
    junctions: List[List[int]] = []
    for q, a, b, marks in stack:
        if edges and edges[-1] == q and a != 0:
            junctions[-1].extend(marks)
        else:
            if a != 0:
                raise AssertionError("tightened image does not start at a vertex")
            edges.append(q)
            junctions.append(list(marks))
    return edges, junctions


def _align(edges, junctions, target):
    n = len(target)
    if len(edges) != n:
        raise AssertionError("image loop has the wrong length")
    for r in range(n):
        if all(edges[(r + t) % n] == target[t] for t in range(n)):
            return [junctions[(r + t) % n] for t in range(n)]
    raise AssertionError("image loop does not match the loop in the later graph")


def turn_preimages(path: FoldingPath, i: int, j: int, alpha) -> List[List[int]]:
    """For each turn of alpha|G_j, the turns of alpha|G_i that fold onto it."""
    if isinstance(alpha, str):
        alpha = CyclicWord(alpha)
    edges, junctions = image_loop(path, i, j, alpha)
    return _align(edges, junctions, path.events[j].graph.loop(alpha))


def unfold_subpath(path: FoldingPath, i: int, j: int, alpha, start: int, end: int):
    """Lift the subpath of alpha|G_j between two illegal turns back to alpha|G_i.

    Turn t of a loop sits after its edge t.  The subpath runs from turn
    ``start`` forward to turn ``end`` (all the way round when they are equal).
    Returns (first turn, last turn, edges) in alpha|G_i; the edges include the
    germs leaving and entering those turns.
    """
    if isinstance(alpha, str):
        alpha = CyclicWord(alpha)
    if not i <= j:
        raise ValueError("unfolding goes backwards in time")
    Gj = path.events[j].graph
    loop_j = Gj.loop(alpha)
    bad = illegal_turns(Gj, path.events[j].gates, loop_j)
    if start not in bad or end not in bad:
        raise NotIllegalEndpoint("subpath endpoints must be illegal turns")
    pre = turn_preimages(path, i, j, alpha)
    loop_i = path.events[i].graph.loop(alpha)
    n = len(loop_i)
    a = _last_in_cyclic_order(pre[start], n)
    b = _first_in_cyclic_order(pre[end], n, a)
    span = (b - a) % n or n
    return a, b, [loop_i[(a + 1 + t) % n] for t in range(span)]


def _last_in_cyclic_order(turns, n):
    # turns sharing a junction are consecutive along the loop (cyclically)
    ts = sorted(turns)
    if len(ts) == 1:
        return ts[0]
    gaps = [((ts[(k + 1) % len(ts)] - ts[k]) % n, k) for k in range(len(ts))]
    _, k = max(gaps)
    return ts[k]


def _first_in_cyclic_order(turns, n, after):
    return min(turns, key=lambda t: (t - after - 1) % n)
