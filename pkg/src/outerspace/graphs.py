"""Marked metric graphs: points of Outer space.

A MarkedGraph carries two maps to the standard rose.  The marking sends each
basis generator to a closed edge path at the base vertex; the comarking sends
each edge to a Word.  Reading a marking path through the comarking returns
the generator exactly, which together with the rank certifies the pair is a
homotopy equivalence.

Oriented edges are pairs ``(eid, +1)`` or ``(eid, -1)``.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ._validation import as_fraction, check_positive_int
from .automorphisms import Automorphism, out_equal
from .errors import EmptySet, InvalidGraph, NotAnAutomorphism, TrivialClass
from .words import Basis, CyclicWord, Word

OEdge = Tuple[str, int]


def natural_key(s):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", str(s))]


def inv_edge(oe: OEdge) -> OEdge:
    return (oe[0], -oe[1])


def reverse_path(path: Sequence[OEdge]) -> list:
    return [inv_edge(oe) for oe in reversed(path)]


def tighten(path: Iterable[OEdge]) -> list:
    out: list = []
    for oe in path:
        if out and out[-1][0] == oe[0] and out[-1][1] == -oe[1]:
            out.pop()
        else:
            out.append(oe)
    return out


def tighten_cyclic(path: Iterable[OEdge]) -> list:
    p = tighten(path)
    i, j = 0, len(p) - 1
    while i < j and p[i][0] == p[j][0] and p[i][1] == -p[j][1]:
        i += 1
        j -= 1
    return p[i:j + 1]


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    length: Fraction


@dataclass(frozen=True)
class LogScalar:
    """A distance stored as the exact ratio; the log is only taken for display."""

    ratio: Fraction
    witness: Optional[CyclicWord] = None

    def __post_init__(self):
        if self.ratio <= 0:
            raise ValueError("ratio must be positive")

    @property
    def log(self) -> float:
        return math.log(self.ratio.numerator) - math.log(self.ratio.denominator)

    def __mul__(self, other):
        return LogScalar(self.ratio * other.ratio)


class MarkedGraph:
    """A core metric graph with marking and comarking against the rose."""

    def __init__(self, rank, vertices, edges, marking, comarking, base=None, *, check=True):
        self.rank = check_positive_int(rank, "rank")
        self.basis = Basis(self.rank)
        self.vertices = tuple(str(v) for v in vertices)
        self.edges: Dict[str, Edge] = {}
        for eid, e in edges.items():
            if isinstance(e, Edge):
                self.edges[str(eid)] = e
            else:
                src, dst, length = e
                self.edges[str(eid)] = Edge(str(src), str(dst), as_fraction(length, f"length of {eid}"))
        self.marking: Tuple[Tuple[OEdge, ...], ...] = tuple(tuple((str(e), int(s)) for e, s in p)
                                                            for p in marking)
        self.comarking: Dict[str, Word] = {str(k): (v if isinstance(v, Word) else Word(v))
                                           for k, v in comarking.items()}
        if base is None:
            first = next((p for p in self.marking if p), None)
            base = self.origin(first[0]) if first else self.vertices[0]
        self.base = str(base)
        self._incidence = None
        if check:
            self.validate(require_unit_volume=False)

    # basic structure

    def origin(self, oe: OEdge) -> str:
        e = self.edges[oe[0]]
        return e.src if oe[1] > 0 else e.dst

    def terminus(self, oe: OEdge) -> str:
        e = self.edges[oe[0]]
        return e.dst if oe[1] > 0 else e.src

    def length(self, oe) -> Fraction:
        eid = oe[0] if isinstance(oe, tuple) else oe
        return self.edges[eid].length

    def edge_ids(self) -> List[str]:
        return sorted(self.edges, key=natural_key)

    def directions(self, v) -> List[OEdge]:
        """Oriented edges leaving v (a loop contributes both orientations)."""
        if self._incidence is None:
            inc: Dict[str, list] = {u: [] for u in self.vertices}
            for eid in self.edge_ids():
                e = self.edges[eid]
                inc[e.src].append((eid, 1))
                inc[e.dst].append((eid, -1))
            self._incidence = inc
        return list(self._incidence[v])

    def valence(self, v) -> int:
        return len(self.directions(v))

    def volume(self) -> Fraction:
        return sum((e.length for e in self.edges.values()), Fraction(0))

    def graph_rank(self) -> int:
        return len(self.edges) - len(self.vertices) + 1

    def co(self, oe: OEdge) -> Word:
        w = self.comarking[oe[0]]
        return w if oe[1] > 0 else w.inverse()

    def read(self, path: Sequence[OEdge]) -> Word:
        out: list = []
        for oe in path:
            out.extend(self.co(oe).letters)
        return Word(out)

    def path_length(self, path: Sequence[OEdge]) -> Fraction:
        return sum((self.edges[e].length for e, _ in path), Fraction(0))

    # validation

    def validate(self, require_unit_volume=True):
        if not self.vertices:
            raise InvalidGraph("graph has no vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise InvalidGraph("duplicate vertex names")
        vs = set(self.vertices)
        for eid, e in self.edges.items():
            if e.src not in vs or e.dst not in vs:
                raise InvalidGraph(f"edge {eid} has an unknown endpoint")
            if e.length <= 0:
                raise InvalidGraph(f"edge {eid} has non-positive length")
        if self.base not in vs:
            raise InvalidGraph(f"base vertex {self.base} is not a vertex")
        for v in self.vertices:
            d = self.valence(v)
            if d <= 1:
                raise InvalidGraph(f"valence-{d} vertex {v}: graph is not a core graph")
        if not self._connected():
            raise InvalidGraph("graph is not connected")
        if self.graph_rank() != self.rank:
            raise InvalidGraph(f"graph has rank {self.graph_rank()}, basis has rank {self.rank}")
        if set(self.comarking) != set(self.edges):
            raise InvalidGraph("comarking must assign a word to every edge")
        if len(self.marking) != self.rank:
            raise InvalidGraph("marking must give a path for every generator")
        for i, p in enumerate(self.marking):
            name = self.basis.names[i]
            if not p:
                raise InvalidGraph(f"marking path of {name} is empty")
            for oe in p:
                if oe[0] not in self.edges or oe[1] not in (1, -1):
                    raise InvalidGraph(f"marking path of {name} uses unknown edge {oe}")
            at = self.base
            for oe in p:
                if self.origin(oe) != at:
                    raise InvalidGraph(f"marking path of {name} is not contiguous")
                at = self.terminus(oe)
            if at != self.base:
                raise InvalidGraph(f"marking path of {name} is not closed at the base vertex")
            if self.read(p) != Word((i + 1,)):
                raise InvalidGraph(
                    f"comarking of the marking path of {name} reads {self.read(p)}, not {name}")
        if require_unit_volume and self.volume() != 1:
            raise InvalidGraph(f"volume is {self.volume()}, not 1")
        return self

    def _connected(self) -> bool:
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for oe in self.directions(v):
                w = self.terminus(oe)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    # transformations

    def with_lengths(self, lengths: Dict[str, Fraction]) -> "MarkedGraph":
        edges = {eid: Edge(e.src, e.dst, as_fraction(lengths.get(eid, e.length)))
                 for eid, e in self.edges.items()}
        return MarkedGraph(self.rank, self.vertices, edges, self.marking, self.comarking,
                           self.base, check=False)

    def scaled(self, factor) -> "MarkedGraph":
        factor = as_fraction(factor)
        return self.with_lengths({eid: e.length * factor for eid, e in self.edges.items()})

    def normalized(self) -> "MarkedGraph":
        return self.scaled(1 / self.volume())

    def act(self, phi: Automorphism) -> "MarkedGraph":
        return act(phi, self)

    # loops

    def marking_path(self, w: Word) -> list:
        out: list = []
        for x in w.letters:
            p = self.marking[abs(x) - 1]
            out.extend(p if x > 0 else reverse_path(p))
        return tighten(out)

    def loop(self, alpha) -> list:
        """The immersed edge loop realizing a conjugacy class."""
        if not isinstance(alpha, (Word, CyclicWord)):
            alpha = Word(alpha)
        w = alpha.word() if isinstance(alpha, CyclicWord) else alpha
        if not w:
            raise TrivialClass("the trivial class has no loop")
        return tighten_cyclic(self.marking_path(w))

    def loop_length(self, alpha) -> Fraction:
        return self.path_length(self.loop(alpha))

    # equality and serialization

    def key(self):
        return (self.rank, self.vertices, tuple(sorted(self.edges.items())), self.marking,
                tuple(sorted(self.comarking.items(), key=lambda kv: kv[0])), self.base)

    def __eq__(self, other):
        if not isinstance(other, MarkedGraph):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_dict(self) -> dict:
        return {
            "basis": self.rank,
            "base": self.base,
            "vertices": list(self.vertices),
            "edges": [{"id": eid, "from": self.edges[eid].src, "to": self.edges[eid].dst,
                       "len": str(self.edges[eid].length)} for eid in self.edge_ids()],
            "marking": {self.basis.names[i]: [f"{e}{'+' if s > 0 else '-'}" for e, s in p]
                        for i, p in enumerate(self.marking)},
            "comarking": {eid: str(self.comarking[eid]) for eid in self.edge_ids()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict, normalize=False) -> "MarkedGraph":
        try:
            rank = int(data["basis"])
            basis = Basis(rank)
            edges = {}
            for e in data["edges"]:
                eid = str(e["id"])
                if eid in edges:
                    raise InvalidGraph(f"duplicate edge id {eid}")
                edges[eid] = (e["from"], e["to"], as_fraction(str(e["len"]), f"length of {eid}"))
            marking = []
            for name in basis.names:
                path = []
                for tok in data["marking"][name]:
                    tok = str(tok)
                    if tok[-1] not in "+-":
                        raise InvalidGraph(f"oriented edge {tok!r} must end in + or -")
                    path.append((tok[:-1], 1 if tok[-1] == "+" else -1))
                marking.append(path)
            comarking = {str(k): Word.parse(v, basis) for k, v in data["comarking"].items()}
            vertices = [str(v) for v in data["vertices"]]
        except (KeyError, TypeError) as exc:
            raise InvalidGraph(f"malformed graph description: missing or bad field {exc}") from None
        except ValueError as exc:
            raise InvalidGraph(str(exc)) from None
        g = cls(rank, vertices, edges, marking, comarking, data.get("base"))
        if normalize:
            g = g.normalized()
        g.validate(require_unit_volume=True)
        return g

    @classmethod
    def from_json(cls, text: str, normalize=False) -> "MarkedGraph":
        return cls.from_dict(json.loads(text), normalize=normalize)

    def __repr__(self):
        lens = ", ".join(f"{eid}:{self.edges[eid].length}" for eid in self.edge_ids())
        return f"MarkedGraph(rank={self.rank}, {lens})"


# constructors

def rose(lengths: Sequence, normalize=False) -> MarkedGraph:
    lengths = [as_fraction(x) for x in lengths]
    r = len(lengths)
    edges = {f"e{i + 1}": ("v", "v", lengths[i]) for i in range(r)}
    marking = [[(f"e{i + 1}", 1)] for i in range(r)]
    comarking = {f"e{i + 1}": Word((i + 1,)) for i in range(r)}
    g = MarkedGraph(r, ["v"], edges, marking, comarking, "v")
    return g.normalized() if normalize else g


def theta(lengths=(Fraction(1, 3),) * 3) -> MarkedGraph:
    """Two vertices u, v joined by three edges u->v; a = e1 e2^-1, b = e2 e3^-1."""
    l1, l2, l3 = (as_fraction(x) for x in lengths)
    edges = {"e1": ("u", "v", l1), "e2": ("u", "v", l2), "e3": ("u", "v", l3)}
    marking = [[("e1", 1), ("e2", -1)], [("e2", 1), ("e3", -1)]]
    comarking = {"e1": Word("a"), "e2": Word(), "e3": Word("B")}
    return MarkedGraph(2, ["u", "v"], edges, marking, comarking, "u")


def act(phi: Automorphism, G: MarkedGraph) -> MarkedGraph:
    """Change of marking: x -> path of phi^-1(x), e -> phi(c(e))."""
    if phi.rank != G.rank:
        raise ValueError("rank mismatch")
    inv = phi.invert()
    marking = [G.marking_path(inv.images[i]) for i in range(G.rank)]
    comarking = {eid: phi.apply(w) for eid, w in G.comarking.items()}
    return MarkedGraph(G.rank, G.vertices, G.edges, marking, comarking, G.base, check=False)


# candidates

def embedded_circles(G: MarkedGraph) -> List[List[OEdge]]:
    """Every embedded circle once, as an oriented edge cycle starting at its least vertex."""
    found = {}
    order = {v: i for i, v in enumerate(G.vertices)}

    def dfs(start, v, path, used_v, used_e):
        for oe in G.directions(v):
            if oe[0] in used_e:
                continue
            w = G.terminus(oe)
            if w == start:
                cyc = path + [oe]
                key = frozenset(e for e, _ in cyc)
                if key not in found:
                    found[key] = cyc
            elif w not in used_v and order[w] > order[start]:
                used_v.add(w)
                used_e.add(oe[0])
                dfs(start, w, path + [oe], used_v, used_e)
                used_v.discard(w)
                used_e.discard(oe[0])

    for s in G.vertices:
        dfs(s, s, [], {s}, set())
    return [found[k] for k in sorted(found, key=lambda k: sorted(k, key=natural_key))]


def _rotate_to(cycle, v, G):
    for i, oe in enumerate(cycle):
        if G.origin(oe) == v:
            return cycle[i:] + cycle[:i]
    raise ValueError("vertex not on cycle")


def _cycle_vertices(cycle, G):
    return {G.origin(oe) for oe in cycle}


def _simple_paths(G, sources, targets, avoid):
    """Simple edge paths from a vertex of sources to a vertex of targets, interior avoiding ``avoid``."""
    out = []

    def dfs(v, path, seen):
        for oe in G.directions(v):
            if any(oe[0] == e for e, _ in path):
                continue
            w = G.terminus(oe)
            if w in targets:
                out.append(path + [oe])
            elif w not in seen and w not in avoid:
                seen.add(w)
                dfs(w, path + [oe], seen)
                seen.discard(w)

    for s in sorted(sources, key=natural_key):
        dfs(s, [], {s})
    return out


def candidate_loops(G: MarkedGraph) -> List[List[OEdge]]:
    """Embedded circles, figure-eights and barbells as immersed edge loops."""
    circles = embedded_circles(G)
    loops = [list(c) for c in circles]
    cverts = [_cycle_vertices(c, G) for c in circles]
    for i, j in itertools.combinations(range(len(circles)), 2):
        ci, cj = circles[i], circles[j]
        if {e for e, _ in ci} & {e for e, _ in cj}:
            continue
        shared = cverts[i] & cverts[j]
        if len(shared) == 1:
            v = next(iter(shared))
            a = _rotate_to(ci, v, G)
            b = _rotate_to(cj, v, G)
            loops.append(a + b)
            loops.append(a + reverse_path(b))
        elif not shared:
            for p in _simple_paths(G, cverts[i], cverts[j], cverts[i] | cverts[j]):
                a = _rotate_to(ci, G.origin(p[0]), G)
                b = _rotate_to(cj, G.terminus(p[-1]), G)
                for bb in (b, reverse_path(b)):
                    loops.append(a + p + bb + reverse_path(p))
    return loops


def candidates(G: MarkedGraph) -> List[CyclicWord]:
    """Candidate conjugacy classes up to inversion, sorted by (length, letters)."""
    seen = set()
    for loop in candidate_loops(G):
        seen.add(CyclicWord(G.read(loop)).unoriented())
    return sorted(seen, key=lambda c: c.sort_key())


def candidate_table(G: MarkedGraph):
    """(class, length in G) for each candidate, in canonical order."""
    table = {}
    for loop in candidate_loops(G):
        c = CyclicWord(G.read(loop)).unoriented()
        table.setdefault(c, G.path_length(loop))
    return sorted(table.items(), key=lambda kv: kv[0].sort_key())


def loop_length(alpha, G: MarkedGraph) -> Fraction:
    return G.loop_length(alpha)


def lipschitz_distance(G: MarkedGraph, H: MarkedGraph) -> LogScalar:
    """Max over candidates of G of l(alpha|H)/l(alpha|G), with the first maximizer."""
    if G.rank != H.rank:
        raise ValueError("rank mismatch")
    best, witness = None, None
    for c, lg in candidate_table(G):
        ratio = H.loop_length(c) / lg
        if best is None or ratio > best:
            best, witness = ratio, c
    return LogScalar(best, witness)


def symmetrized_distance(G: MarkedGraph, H: MarkedGraph) -> LogScalar:
    return LogScalar(lipschitz_distance(G, H).ratio * lipschitz_distance(H, G).ratio)


def hausdorff(A, B) -> LogScalar:
    A, B = list(A), list(B)
    if not A or not B:
        raise EmptySet("Hausdorff distance needs nonempty sets")
    d = {(i, j): symmetrized_distance(a, b).ratio for i, a in enumerate(A) for j, b in enumerate(B)}
    one = max(min(d[i, j] for j in range(len(B))) for i in range(len(A)))
    two = max(min(d[i, j] for i in range(len(A))) for j in range(len(B)))
    return LogScalar(max(one, two))


def injectivity_radius(G: MarkedGraph) -> Fraction:
    return min(G.path_length(c) for c in embedded_circles(G))


def in_thick_part(G: MarkedGraph, eps) -> bool:
    return injectivity_radius(G) >= as_fraction(eps)


# marked isometry

def graph_isomorphisms(G: MarkedGraph, H: MarkedGraph):
    """Yield length-preserving isomorphisms as (vertex map, oriented-edge map)."""
    if len(G.vertices) != len(H.vertices) or len(G.edges) != len(H.edges):
        return
    if sorted(e.length for e in G.edges.values()) != sorted(e.length for e in H.edges.values()):
        return
    gv = sorted(G.vertices, key=natural_key)

    def extend(i, vmap, used):
        if i == len(gv):
            emap = _match_edges(G, H, vmap)
            if emap is not None:
                yield from emap
            return
        v = gv[i]
        for w in H.vertices:
            if w in used or G.valence(v) != H.valence(w):
                continue
            vmap[v] = w
            used.add(w)
            yield from extend(i + 1, vmap, used)
            del vmap[v]
            used.discard(w)

    yield from extend(0, {}, set())


def _match_edges(G, H, vmap):
    gids = G.edge_ids()
    hfree = set(H.edges)

    def go(i, emap):
        if i == len(gids):
            yield dict(vmap), dict(emap)
            return
        e = G.edges[gids[i]]
        for hid in sorted(hfree, key=natural_key):
            h = H.edges[hid]
            if h.length != e.length:
                continue
            for s in (1, -1):
                hs, hd = (h.src, h.dst) if s > 0 else (h.dst, h.src)
                if hs == vmap[e.src] and hd == vmap[e.dst]:
                    hfree.discard(hid)
                    emap[gids[i]] = (hid, s)
                    yield from go(i + 1, emap)
                    del emap[gids[i]]
                    hfree.add(hid)

    yield from go(0, {})


def marked_isometry(G: MarkedGraph, H: MarkedGraph):
    """A length-preserving isomorphism G -> H compatible with the markings, or None."""
    ident = Automorphism.identity(G.rank)
    for vmap, emap in graph_isomorphisms(G, H):
        images = []
        for p in G.marking:
            hp = [(emap[e][0], emap[e][1] * s) for e, s in p]
            images.append(H.read(hp))
        try:
            phi = Automorphism(images, G.rank)
        except NotAnAutomorphism:
            continue
        if out_equal(ident, phi)[0]:
            return vmap, emap
    return None


def is_marked_isometric(G: MarkedGraph, H: MarkedGraph) -> bool:
    return marked_isometry(G, H) is not None


def from_topology(vertices, edges, base=None) -> MarkedGraph:
    """Mark a metric graph by a spanning tree.

    ``edges`` maps edge ids to ``(src, dst, length)``.  Tree edges get the empty
    word; the remaining edges, in sorted order, become the basis generators.
    """
    vertices = [str(v) for v in vertices]
    base = str(base) if base is not None else vertices[0]
    edges = {str(k): (str(a), str(b), as_fraction(x)) for k, (a, b, x) in edges.items()}
    tmp = MarkedGraph(1, vertices, edges, [], {}, base, check=False)
    parent: Dict[str, list] = {base: []}
    tree_edges = set()
    queue = [base]
    while queue:
        u = queue.pop(0)
        for oe in tmp.directions(u):
            w = tmp.terminus(oe)
            if w not in parent:
                parent[w] = parent[u] + [oe]
                tree_edges.add(oe[0])
                queue.append(w)
    if len(parent) != len(vertices):
        raise InvalidGraph("graph is not connected")
    others = [eid for eid in tmp.edge_ids() if eid not in tree_edges]
    comarking = {eid: Word() for eid in tree_edges}
    marking = []
    for i, eid in enumerate(others):
        comarking[eid] = Word((i + 1,))
        e = tmp.edges[eid]
        marking.append(parent[e.src] + [(eid, 1)] + reverse_path(parent[e.dst]))
    return MarkedGraph(len(others), vertices, edges, marking, comarking, base)
