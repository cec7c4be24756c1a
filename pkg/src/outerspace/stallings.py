"""Labeled graphs and Stallings folding.

Labels are nonzero ints; an edge ``u --x--> v`` is read backwards as
``v --(-x)--> u``.  The same folder serves three purposes: basis-labeled
subgroup graphs, graphs labeled by the edges of a target graph (cover cores),
and tagged folding used to invert automorphisms.  A tag is a Word carried by
an edge; reading the edge backwards reads the inverse tag.
"""

from collections import defaultdict

from .words import Word


class FoldConflict(Exception):
    """Two parallel edges with the same label carry different tags."""


class LabeledGraph:
    def __init__(self, base=0):
        self.base = base
        self.vertices = {base}
        self.edges = {}
        self._adj = defaultdict(set)
        self._next_edge = 0
        self._next_vertex = base + 1 if isinstance(base, int) else 0

    def new_vertex(self):
        while self._next_vertex in self.vertices:
            self._next_vertex += 1
        v = self._next_vertex
        self.vertices.add(v)
        return v

    def add_edge(self, u, label, v, tag=None):
        if label == 0:
            raise ValueError("label 0 is reserved")
        self.vertices.add(u)
        self.vertices.add(v)
        eid = self._next_edge
        self._next_edge += 1
        self.edges[eid] = [u, label, v, tag]
        self._adj[u].add(eid)
        self._adj[v].add(eid)
        return eid

    def add_loop(self, labels, first_tag=None, at=None):
        """Attach a closed path spelling ``labels`` at ``at`` (default: base)."""
        start = self.base if at is None else at
        labels = list(labels)
        if not labels:
            return
        cur = start
        empty = Word() if first_tag is not None else None
        for i, x in enumerate(labels):
            nxt = start if i == len(labels) - 1 else self.new_vertex()
            self.add_edge(cur, x, nxt, first_tag if i == 0 else empty)
            cur = nxt

    def remove_edge(self, eid):
        u, _, v, _ = self.edges.pop(eid)
        self._adj[u].discard(eid)
        self._adj[v].discard(eid)

    def half_edges(self, u):
        """Yield (eid, direction, label, far vertex, tag) for edges leaving u."""
        for eid in sorted(self._adj[u]):
            a, x, b, t = self.edges[eid]
            if a == u:
                yield eid, 1, x, b, t
            if b == u:
                yield eid, -1, -x, a, (t.inverse() if t is not None else None)

    def degree(self, u):
        return sum(1 for _ in self.half_edges(u))

    def _gauge(self, w, g):
        # in-edges of w get tag*g, out-edges get g^-1*tag
        ginv = g.inverse()
        for eid in self._adj[w]:
            e = self.edges[eid]
            t = e[3]
            if e[2] == w:
                t = t * g
            if e[0] == w:
                t = ginv * t
            e[3] = t

    def _merge(self, keep, gone):
        for eid in list(self._adj[gone]):
            e = self.edges[eid]
            if e[0] == gone:
                e[0] = keep
            if e[2] == gone:
                e[2] = keep
            self._adj[keep].add(eid)
        del self._adj[gone]
        self.vertices.discard(gone)

    def fold(self, tagged=False):
        """Fold until no vertex has two outgoing half-edges with one label."""
        work = list(self.vertices)
        while work:
            u = work.pop()
            if u not in self.vertices:
                continue
            seen = {}
            hit = None
            for h in self.half_edges(u):
                if h[2] in seen:
                    hit = (seen[h[2]], h)
                    break
                seen[h[2]] = h
            if hit is None:
                continue
            (e1, _, _, w1, t1), (e2, _, _, w2, t2) = hit
            if w1 == w2:
                if tagged and t1 != t2:
                    raise FoldConflict(f"conflicting tags {t1} and {t2}")
                self.remove_edge(e2)
            else:
                if w2 == self.base:
                    e1, w1, t1, e2, w2, t2 = e2, w2, t2, e1, w1, t1
                if tagged:
                    self._gauge(w2, t2.inverse() * t1)
                self.remove_edge(e2)
                self._merge(w1, w2)
                work.append(w1)
            work.append(u)
        return self

    def prune(self, keep_base=False):
        """Delete valence-1 and isolated vertices until none remain (the core)."""
        changed = True
        while changed:
            changed = False
            for v in list(self.vertices):
                if keep_base and v == self.base:
                    continue
                d = self.degree(v)
                if d <= 1:
                    for eid in list(self._adj[v]):
                        self.remove_edge(eid)
                    self.vertices.discard(v)
                    self._adj.pop(v, None)
                    changed = True
        if self.base not in self.vertices and self.vertices:
            self.base = min(self.vertices)
        return self

    def rank(self):
        return len(self.edges) - len(self.vertices) + 1

    def read(self, labels, start=None):
        """Follow a label sequence from start in a folded graph; None if stuck."""
        v = self.base if start is None else start
        for x in labels:
            for _, _, y, w, _ in self.half_edges(v):
                if y == x:
                    v = w
                    break
            else:
                return None
        return v

    def contains(self, word):
        return self.read(word.letters) == self.base

    def out_labels(self, u):
        return {h[2]: h[3] for h in self.half_edges(u)}

    def copy(self):
        g = LabeledGraph(self.base)
        g.vertices = set(self.vertices)
        g.edges = {k: list(v) for k, v in self.edges.items()}
        g._adj = defaultdict(set, {k: set(v) for k, v in self._adj.items()})
        g._next_edge = self._next_edge
        g._next_vertex = self._next_vertex
        return g


def subgroup_graph(generators, keep_base=True):
    g = LabeledGraph()
    for w in generators:
        g.add_loop(w.letters)
    g.fold()
    return g.prune(keep_base=keep_base)
