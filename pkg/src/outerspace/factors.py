"""Subgroup cores, free factor projections and projections to folding paths."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ._validation import budget
from .errors import BudgetExceeded, RankTooSmall, TrivialSubgroup
from .graphs import MarkedGraph, OEdge, inv_edge, natural_key, tighten
from .stallings import LabeledGraph
from .words import CyclicWord, Word

DEFAULT_SUBSET_CAP = 1 << 20
DEFAULT_STATE_CAP = 200_000


class StallingsGraph:
    """A folded core graph with basis labels and no basepoint."""

    def __init__(self, graph: LabeledGraph):
        self.graph = graph
        self._canon = None

    @property
    def vertices(self):
        return sorted(self.graph.vertices)

    @property
    def edges(self):
        return [tuple(e[:3]) for _, e in sorted(self.graph.edges.items())]

    @property
    def rank(self) -> int:
        return self.graph.rank()

    def out(self, v) -> Dict[int, int]:
        return {x: w for _, _, x, w, _ in self.graph.half_edges(v)}

    def canonical_form(self):
        """Edge list renumbered by a breadth-first walk, minimized over start vertices."""
        if self._canon is None:
            best = None
            for s in self.vertices:
                num = {s: 0}
                queue = [s]
                for v in queue:
                    for x, w in sorted(self.out(v).items(), key=lambda t: (abs(t[0]), t[0] < 0)):
                        if w not in num:
                            num[w] = len(num)
                            queue.append(w)
                # orient every edge along its positive label
                code = tuple(sorted((num[u], x, num[w]) if x > 0 else (num[w], -x, num[u])
                                    for u, x, w in self.edges))
                if best is None or code < best:
                    best = code
            self._canon = (len(self.graph.vertices), best)
        return self._canon

    def hash(self) -> str:
        return hashlib.sha256(repr(self.canonical_form()).encode()).hexdigest()[:16]

    def morphism_to(self, other: "StallingsGraph") -> Optional[Dict]:
        """A label-preserving graph map into other, if one exists."""
        if not self.vertices:
            return {}
        s = self.vertices[0]
        for t in other.vertices:
            vmap = {s: t}
            stack = [s]
            ok = True
            while stack and ok:
                v = stack.pop()
                target_out = other.out(vmap[v])
                for x, w in self.out(v).items():
                    img = target_out.get(x)
                    if img is None or vmap.get(w, img) != img:
                        ok = False
                        break
                    if w not in vmap:
                        vmap[w] = img
                        stack.append(w)
            if ok:
                return vmap
        return None

    def isomorphic(self, other: "StallingsGraph") -> bool:
        return self.canonical_form() == other.canonical_form()

    def __repr__(self):
        return f"StallingsGraph(rank={self.rank}, vertices={len(self.graph.vertices)})"


def stallings_core(generators) -> StallingsGraph:
    gens = [w if isinstance(w, Word) else Word.parse(w) for w in generators]
    gens = [w for w in gens if w]
    if not gens:
        raise TrivialSubgroup("the subgroup is trivial")
    g = LabeledGraph()
    for w in gens:
        g.add_loop(w.letters)
    g.fold()
    g.prune(keep_base=False)
    return StallingsGraph(g)


class FactorClass:
    """Conjugacy class of a finitely generated subgroup, given by generators."""

    def __init__(self, generators, rank: Optional[int] = None):
        self.generators = tuple(w if isinstance(w, Word) else Word.parse(w) for w in generators)
        self.core = stallings_core(self.generators)
        self.ambient_rank = rank

    @property
    def rank(self) -> int:
        return self.core.rank

    def key(self):
        return self.core.canonical_form()

    def hash(self) -> str:
        return self.core.hash()

    def __eq__(self, other):
        return isinstance(other, FactorClass) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def apply(self, phi) -> "FactorClass":
        return FactorClass([phi.apply(w) for w in self.generators], self.ambient_rank)

    def to_dict(self):
        return {"generators": [str(w) for w in self.generators], "rank": self.rank, "hash": self.hash()}

    def __repr__(self):
        return f"FactorClass({[str(w) for w in self.generators]})"


def _as_class(A) -> FactorClass:
    if isinstance(A, FactorClass):
        return A
    if isinstance(A, (Word, str, CyclicWord)):
        w = A.word() if isinstance(A, CyclicWord) else A
        return FactorClass([w])
    return FactorClass(A)


def conjugate_into(A, B) -> bool:
    """Whether some conjugate of A lies in B."""
    return _as_class(A).core.morphism_to(_as_class(B).core) is not None


def conjugate_equal(A, B) -> bool:
    return _as_class(A).core.isomorphic(_as_class(B).core)


# cover cores

@dataclass
class CoverCore:
    """Core of the cover of G for a subgroup, with its immersion into G."""
    G: MarkedGraph
    vertex_map: Dict[int, str]
    edges: Dict[int, Tuple[int, int, OEdge]]
    gates: Optional[Dict] = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        vs = {v for e in self.edges.values() for v in e[:2]}
        return len(self.edges) - len(vs) + 1

    def length(self, eid) -> Fraction:
        return self.G.length(self.edges[eid][2][0])

    def volume(self) -> Fraction:
        return sum((self.length(e) for e in self.edges), Fraction(0))

    def directions(self, v):
        out = []
        for eid in sorted(self.edges):
            a, b, _ = self.edges[eid]
            if a == v:
                out.append((eid, 1))
            if b == v:
                out.append((eid, -1))
        return out

    def origin(self, d):
        a, b, _ = self.edges[d[0]]
        return a if d[1] > 0 else b

    def terminus(self, d):
        a, b, _ = self.edges[d[0]]
        return b if d[1] > 0 else a

    def image(self, d) -> OEdge:
        oe = self.edges[d[0]][2]
        return oe if d[1] > 0 else inv_edge(oe)

    def gate(self, d):
        """Gate index of the image direction, when the target carries gates."""
        if self.gates is None:
            return None
        v = self.vertex_map[self.origin(d)]
        oe = self.image(d)
        for k, g in enumerate(self.gates.get(v, [])):
            if oe in g:
                return k
        return None

    def legal_turn(self, d_in, d_out) -> bool:
        """Turn from arriving along d_in (as a direction at the vertex) to leaving along d_out."""
        if self.gates is None:
            return True
        return self.gate(d_in) != self.gate(d_out)


def _edge_codes(G: MarkedGraph):
    ids = sorted(G.edges, key=natural_key)
    code = {eid: k + 1 for k, eid in enumerate(ids)}
    back = {k + 1: eid for k, eid in enumerate(ids)}
    return code, back


def cover_core(A, G: MarkedGraph, gates=None) -> CoverCore:
    A = _as_class(A)
    code, back = _edge_codes(G)
    g = LabeledGraph()
    for w in A.generators:
        path = tighten(G.marking_path(w))
        if path:
            g.add_loop([code[e] * s for e, s in path])
    if not g.edges:
        raise TrivialSubgroup("the subgroup is trivial")
    g.fold()
    vmap = {g.base: G.base}
    stack = [g.base]
    while stack:
        u = stack.pop()
        for _, _, x, w, _ in g.half_edges(u):
            if w not in vmap:
                oe = (back[abs(x)], 1 if x > 0 else -1)
                vmap[w] = G.terminus(oe)
                stack.append(w)
    g.prune(keep_base=False)
    edges = {eid: (u, w, (back[abs(x)], 1 if x > 0 else -1)) for eid, (u, x, w, _) in g.edges.items()}
    return CoverCore(G, {v: vmap[v] for v in g.vertices}, edges, gates)


# factor projection

def _subgraph_factor(G: MarkedGraph, eids: Sequence[str]) -> Optional[List[Word]]:
    verts = sorted({G.edges[e].src for e in eids} | {G.edges[e].dst for e in eids}, key=natural_key)
    if len(eids) - len(verts) + 1 < 1:
        return None
    root = verts[0]
    to = {root: Word()}
    tree = set()
    stack = [root]
    adj = {v: [] for v in verts}
    for e in eids:
        adj[G.edges[e].src].append((e, 1))
        adj[G.edges[e].dst].append((e, -1))
    while stack:
        u = stack.pop()
        for oe in sorted(adj[u], key=lambda t: (natural_key(t[0]), -t[1])):
            w = G.terminus(oe)
            if w not in to:
                to[w] = to[u] * G.co(oe)
                tree.add(oe[0])
                stack.append(w)
    if len(to) != len(verts):
        return None
    gens = []
    for e in sorted(eids, key=natural_key):
        if e in tree:
            continue
        edge = G.edges[e]
        gens.append(to[edge.src] * G.comarking[e] * to[edge.dst].inverse())
    return gens


def _cyclic_generator(fc: FactorClass) -> Word:
    # a rank-one class is generated by a root read around its core circle
    core = fc.core
    v = core.vertices[0]
    letters = []
    prev = None
    while True:
        for eid, d, x, w, _ in core.graph.half_edges(v):
            if (eid, -d) != prev:
                letters.append(x)
                prev = (eid, d)
                v = w
                break
        if v == core.vertices[0] and len(letters) == len(core.graph.edges):
            break
    return CyclicWord(Word(tuple(letters))).unoriented().word()


def project_factors(G: MarkedGraph, cap: Optional[int] = None) -> List[FactorClass]:
    """Factor classes carried by proper connected noncontractible subgraphs."""
    if G.rank < 2:
        raise RankTooSmall("rank one has no proper free factors")
    ids = sorted(G.edges, key=natural_key)
    limit = budget(cap, DEFAULT_SUBSET_CAP)
    if (1 << len(ids)) > limit:
        raise BudgetExceeded(f"{1 << len(ids)} edge subsets exceed the cap {limit}")
    seen = {}
    for k in range(1, len(ids)):
        for sub in itertools.combinations(ids, k):
            gens = _subgraph_factor(G, sub)
            if gens is None:
                continue
            fc = FactorClass(gens, G.rank)
            if fc.rank == 1:
                fc = FactorClass([_cyclic_generator(fc)], G.rank)
            if not 1 <= fc.rank < G.rank:
                continue
            seen.setdefault(fc.key(), fc)
    return sorted(seen.values(), key=lambda f: (f.rank, f.key()))


# projections to folding paths

def _core_transitions(core: CoverCore, legal_only: bool):
    dirs = [(eid, s) for eid in sorted(core.edges) for s in (1, -1)]
    nxt = {}
    for d in dirs:
        v = core.terminus(d)
        arrive = inv_edge(d)
        opts = []
        for d2 in core.directions(v):
            if d2 == arrive:
                continue
            legal = core.legal_turn(arrive, d2)
            if legal_only and not legal:
                continue
            opts.append((d2, legal))
        nxt[d] = opts
    return dirs, nxt


INF = float("inf")


def longest_legal_segment(core: CoverCore):
    """Supremum of lengths of immersed legal paths (inf if a legal loop exists)."""
    dirs, nxt = _core_transitions(core, legal_only=True)
    memo: Dict = {}
    onstack = set()

    def go(d):
        if d in memo:
            return memo[d]
        if d in onstack:
            return INF
        onstack.add(d)
        best = Fraction(0)
        for d2, _ in nxt[d]:
            val = go(d2)
            if val == INF:
                best = INF
                break
            best = max(best, val)
        onstack.discard(d)
        res = INF if best == INF else core.length(d[0]) + best
        memo[d] = res
        return res

    return max((go(d) for d in dirs), default=Fraction(0))


def longest_illegal_segment(core: CoverCore, threshold=3, cap: Optional[int] = None):
    """Supremum of lengths of immersed paths whose legal runs all stay below threshold."""
    dirs, nxt = _core_transitions(core, legal_only=False)
    limit = budget(cap, DEFAULT_STATE_CAP)
    threshold = Fraction(threshold)
    memo: Dict = {}
    onstack = set()

    def go(d, run):
        key = (d, run)
        if key in memo:
            return memo[key]
        if key in onstack:
            return INF
        if len(memo) > limit:
            raise BudgetExceeded("illegal segment search exceeded its state cap")
        onstack.add(key)
        best = Fraction(0)
        for d2, legal in nxt[d]:
            run2 = (run if legal else Fraction(0)) + core.length(d2[0])
            if run2 >= threshold:
                continue
            val = go(d2, run2)
            if val == INF:
                best = INF
                break
            best = max(best, val)
        onstack.discard(key)
        res = INF if best == INF else core.length(d[0]) + best
        memo[key] = res
        return res

    out = Fraction(0)
    for d in dirs:
        L = core.length(d[0])
        if L < threshold:
            out = max(out, go(d, L))
            if out == INF:
                return INF
    return out


@dataclass(frozen=True)
class Projection:
    left: int
    right: int
    left_ratio: Fraction
    right_ratio: Fraction
    left_empty: bool
    right_empty: bool

    def to_dict(self):
        return {"left": self.left, "right": self.right,
                "left_ratio": str(self.left_ratio), "right_ratio": str(self.right_ratio),
                "left_empty": self.left_empty, "right_empty": self.right_empty}


def left_right_projection(A, path, legal_length=3, illegal_length=None) -> Projection:
    """Event indices bounding where A is legal-looking and illegal-looking along path."""
    from .folding import illegal_length_threshold
    A = _as_class(A)
    n = len(path.events)
    if n == 0:
        raise ValueError("empty folding path")
    I = illegal_length if illegal_length is not None else illegal_length_threshold(path.events[0].graph.rank)
    has_legal, has_illegal = [], []
    for ev in path.events:
        core = cover_core(A, ev.graph, ev.gates)
        has_legal.append(longest_legal_segment(core) >= legal_length)
        has_illegal.append(longest_illegal_segment(core) >= I)
    lefts = [i for i, h in enumerate(has_legal) if h]
    rights = [i for i, h in enumerate(has_illegal) if h]
    left = lefts[0] if lefts else n - 1
    right = rights[-1] if rights else 0
    return Projection(left, right, path.events[left].ratio, path.events[right].ratio,
                      not lefts, not rights)


def pr(H: MarkedGraph, path) -> Tuple[int, MarkedGraph]:
    """The snapshot at the earliest left projection over the factors of H."""
    best = min(left_right_projection(A, path).left for A in project_factors(H))
    return best, path.events[best].graph
