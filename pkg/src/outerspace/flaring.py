"""Word metric on subgroups of Out(F_r) and conjugacy-flaring experiments.

Conjugacy lengths are measured in the fixed basis: ||alpha|| is the length
of the cyclically reduced representative.  All checks are exact; the screens
for atoroidal elements are heuristic and say so in their output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._validation import as_fraction, budget, check_positive_int
from .automorphisms import Automorphism, abelianize, determinant, inner, invariant_key, matmul, out_equal
from .errors import (BudgetExceeded, InvalidSubgroup, NonUnimodular, NotFiniteOrder, SpanTooShort,
                     TrivialClass)
from .words import Basis, CyclicWord, Word, enumerate_cyclic_words

DEFAULT_BALL_CAP = 20_000
NON_CERTIFYING = "NON-CERTIFYING heuristic screen: absence of short periodic classes does not prove atoroidality"


def norm(alpha) -> int:
    """Conjugacy length of a word or cyclic word."""
    if isinstance(alpha, CyclicWord):
        return len(alpha)
    if isinstance(alpha, str):
        alpha = Word.parse(alpha)
    return len(alpha.cyclic_reduction())


def act_on_class(phi: Automorphism, alpha: CyclicWord) -> CyclicWord:
    return CyclicWord(phi.apply(alpha.word()))


def shorten(phi: Automorphism) -> Automorphism:
    """Greedily twist by inner automorphisms to shorten the images (same outer class)."""
    best = phi
    size = sum(len(w) for w in phi.images)
    improved = True
    while improved:
        improved = False
        for x in range(1, phi.rank + 1):
            for s in (x, -x):
                cand = inner(Word((s,)), phi.basis).compose(best)
                n = sum(len(w) for w in cand.images)
                if n < size:
                    best, size, improved = cand, n, True
    return best


class SubgroupSpec:
    """A symmetric finite generating set of a subgroup of Out(F_r)."""

    def __init__(self, generators: Sequence[Automorphism], names: Optional[Sequence[str]] = None):
        gens = list(generators)
        if not gens:
            raise InvalidSubgroup("empty generating set")
        rank = gens[0].rank
        names = list(names) if names is not None else [f"g{i}" for i in range(len(gens))]
        ident = Automorphism.identity(rank)
        out: List[Automorphism] = []
        out_names: List[str] = []
        for g, n in zip(gens, names):
            if g.rank != rank:
                raise InvalidSubgroup("generators over different ranks")
            if out_equal(g, ident)[0]:
                raise InvalidSubgroup(f"generator {n} is trivial in Out")
            for h, hn in ((g, n), (g.invert(), _inverse_name(n))):
                if not any(out_equal(h, k)[0] for k in out):
                    out.append(shorten(h))
                    out_names.append(hn)
        self.generators = out
        self.names = out_names
        self.rank = rank

    def __len__(self):
        return len(self.generators)

    def to_dict(self):
        return {"generators": {n: g.to_dict() for n, g in zip(self.names, self.generators)}}


def _inverse_name(n: str) -> str:
    return n[:-3] if n.endswith("^-1") else n + "^-1"


@dataclass
class BallNode:
    index: int
    rep: Automorphism
    dist: int
    word: Tuple[int, ...]


@dataclass
class CayleyBall:
    spec: SubgroupSpec
    radius: int
    nodes: List[BallNode]
    edges: List[Tuple[int, int, int]] = field(default_factory=list)
    _buckets: Dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.nodes)

    def find(self, phi: Automorphism) -> Optional[BallNode]:
        for k in self._buckets.get(invariant_key(phi), []):
            if out_equal(self.nodes[k].rep, phi)[0]:
                return self.nodes[k]
        return None

    def word_name(self, node: BallNode) -> str:
        return " ".join(self.spec.names[i] for i in node.word) or "id"

    def sphere(self, n):
        return [v for v in self.nodes if v.dist == n]


def cayley_ball(spec: SubgroupSpec, radius: int, cap: Optional[int] = None) -> CayleyBall:
    """Breadth-first ball around the identity, with outer classes as nodes."""
    check_positive_int(radius, "radius", minimum=0)
    limit = budget(cap, DEFAULT_BALL_CAP)
    ident = Automorphism.identity(spec.rank)
    ball = CayleyBall(spec, radius, [BallNode(0, ident, 0, ())])
    ball._buckets[invariant_key(ident)] = [0]
    frontier = [0]
    for d in range(radius):
        nxt = []
        for k in frontier:
            node = ball.nodes[k]
            for gi, g in enumerate(spec.generators):
                phi = shorten(node.rep.compose(g))
                hit = ball.find(phi)
                if hit is None:
                    if len(ball.nodes) >= limit:
                        raise BudgetExceeded(f"Cayley ball exceeds {limit} nodes")
                    hit = BallNode(len(ball.nodes), phi, d + 1, node.word + (gi,))
                    ball.nodes.append(hit)
                    ball._buckets.setdefault(invariant_key(phi), []).append(hit.index)
                    nxt.append(hit.index)
                ball.edges.append((node.index, gi, hit.index))
        frontier = nxt
    return ball


@dataclass
class FlaringReport:
    lam: Fraction
    M: int
    word_radius: int
    alpha_len: int
    census: Dict[str, int]
    verdict: str
    witness: Optional[Dict] = None
    constants: Dict = field(default_factory=dict)

    def to_dict(self):
        return {"lambda": str(self.lam), "M": self.M, "word_radius": self.word_radius,
                "alpha_len": self.alpha_len, "census": self.census, "verdict": self.verdict,
                "witness": self.witness, "constants": self.constants}


def default_alphas(rank: int, alpha_len: int) -> List[CyclicWord]:
    seen = set()
    out = []
    for w in enumerate_cyclic_words(Basis(rank), alpha_len):
        u = w.unoriented()
        if u not in seen:
            seen.add(u)
            out.append(u)
    return out


def geodesic_pairs(ball: CayleyBall, M: int):
    """Pairs (g1, g2) with |g1|, |g2| >= M and |g1 g2| = |g1| + |g2| inside the ball."""
    for n1 in ball.nodes:
        if n1.dist < M:
            continue
        for n2 in ball.nodes:
            if n2.dist < M or n1.dist + n2.dist > ball.radius:
                continue
            prod = ball.find(n1.rep.compose(n2.rep))
            if prod is not None and prod.dist == n1.dist + n2.dist:
                yield n1, n2


def conjugacy_flaring_check(spec: SubgroupSpec, lam, M: int, word_radius: int, alpha_len: int,
                            alphas: Optional[Iterable[CyclicWord]] = None,
                            ball: Optional[CayleyBall] = None) -> FlaringReport:
    """Search for (g1, g2, alpha) violating lam ||alpha|| <= max(||g1 alpha||, ||g2^-1 alpha||)."""
    from .folding import illegal_length_threshold, m_breve
    lam = as_fraction(lam, "lambda")
    if lam <= 1:
        raise ValueError("lambda must exceed 1")
    check_positive_int(M, "M")
    if ball is None or ball.radius < word_radius:
        ball = cayley_ball(spec, word_radius)
    pairs = list(geodesic_pairs(ball, M))
    if alphas is not None:
        alist = [a if isinstance(a, CyclicWord) else CyclicWord(a) for a in alphas]
    else:
        alist = default_alphas(spec.rank, alpha_len)
    constants = {"m_breve": m_breve(spec.rank), "I": illegal_length_threshold(spec.rank),
                 "e_r": torsion_bound(spec.rank)}
    census = {"ball": len(ball), "pairs": len(pairs), "alphas": len(alist), "checks": 0}
    inverses = {}
    for alpha in alist:
        a = norm(alpha)
        for n1, n2 in pairs:
            census["checks"] += 1
            inv2 = inverses.get(n2.index)
            if inv2 is None:
                inv2 = inverses[n2.index] = n2.rep.invert()
            l1 = norm(act_on_class(n1.rep, alpha))
            l2 = norm(act_on_class(inv2, alpha))
            if lam * a > max(l1, l2):
                witness = {"g1": ball.word_name(n1), "g2": ball.word_name(n2),
                           "g1_map": n1.rep.to_dict(), "g2_map": n2.rep.to_dict(),
                           "alpha": str(alpha), "norm_alpha": a, "norm_g1_alpha": l1,
                           "norm_g2inv_alpha": l2}
                return FlaringReport(lam, M, word_radius, alpha_len, census, "counterexample",
                                     witness, constants)
    return FlaringReport(lam, M, word_radius, alpha_len, census, "holds-on-sample", None, constants)


def reverify(report: FlaringReport) -> bool:
    """Recompute the three lengths of a stored counterexample."""
    w = report.witness
    g1 = Automorphism(w["g1_map"])
    g2 = Automorphism(w["g2_map"])
    alpha = CyclicWord(w["alpha"])
    a = norm(alpha)
    l1 = norm(act_on_class(g1, alpha))
    l2 = norm(act_on_class(g2.invert(), alpha))
    return (a, l1, l2) == (w["norm_alpha"], w["norm_g1_alpha"], w["norm_g2inv_alpha"]) \
        and report.lam * a > max(l1, l2)


# screens and growth

@dataclass
class ScreenResult:
    periodic: Optional[str]
    power: Optional[int]
    degenerate: bool
    len_cap: int
    pow_cap: int
    banner: str = NON_CERTIFYING

    @property
    def verdict(self) -> str:
        if self.degenerate:
            return "degenerate"
        return "periodic-class-found" if self.periodic else "no-short-periodic-class"

    def to_dict(self):
        return {"verdict": self.verdict, "periodic": self.periodic, "power": self.power,
                "len_cap": self.len_cap, "pow_cap": self.pow_cap, "banner": self.banner}


def screen_atoroidal(phi: Automorphism, len_cap: int, pow_cap: int) -> ScreenResult:
    check_positive_int(len_cap, "len_cap")
    check_positive_int(pow_cap, "pow_cap")
    degenerate = out_equal(phi, Automorphism.identity(phi.rank))[0]
    powers = []
    cur = Automorphism.identity(phi.rank)
    for _ in range(pow_cap):
        cur = cur.compose(phi)
        powers.append(cur)
    for alpha in default_alphas(phi.rank, len_cap):
        for k, p in enumerate(powers, 1):
            if act_on_class(p, alpha) == alpha:
                return ScreenResult(str(alpha), k, degenerate, len_cap, pow_cap)
    return ScreenResult(None, None, degenerate, len_cap, pow_cap)


@dataclass
class GrowthFit:
    slope: float
    lengths: List[int]
    min_stretch: Fraction
    max_stretch: Fraction


def growth_fit(phi: Automorphism, alpha, n_max: int) -> GrowthFit:
    check_positive_int(n_max, "n_max", minimum=4)
    alpha = alpha if isinstance(alpha, CyclicWord) else CyclicWord(alpha)
    if not alpha:
        raise TrivialClass("growth of the trivial class is undefined")
    lengths = []
    cur = alpha
    for _ in range(n_max):
        cur = act_on_class(phi, cur)
        lengths.append(len(cur))
    n = np.arange(1, n_max + 1)
    slope = float(np.polyfit(n, np.log(np.array(lengths, dtype=float)), 1)[0])
    ratios = [Fraction(b, a) for a, b in zip([len(alpha)] + lengths, lengths)]
    return GrowthFit(slope, lengths, min(ratios), max(ratios))


# finite subgroups and the ping-pong construction

def torsion_bound(r: int) -> int:
    """Order of GL_r(Z/3Z)."""
    check_positive_int(r, "r")
    out = 1
    for k in range(r):
        out *= 3 ** r - 3 ** k
    return out


def out_order(phi: Automorphism, cap: int = 64) -> int:
    ident = Automorphism.identity(phi.rank)
    cur = phi
    for k in range(1, cap + 1):
        if out_equal(cur, ident)[0]:
            return k
        cur = shorten(cur.compose(phi))
    raise NotFiniteOrder(f"no power up to {cap} is inner")


def _mat_key(m):
    return tuple(tuple(row) for row in m)


def projectively_good(H: Sequence[Automorphism], cap: int = 64) -> bool:
    """False if the abelianized group generated by H contains -I."""
    if not H:
        return True
    r = H[0].rank
    mats = []
    for h in H:
        out_order(h, cap)
        m = abelianize(h)
        if abs(determinant(m)) != 1:
            raise NonUnimodular("abelianization is not invertible over Z")
        mats.append(m)
    ident = [[int(i == j) for j in range(r)] for i in range(r)]
    minus = _mat_key([[-x for x in row] for row in ident])
    seen = {_mat_key(ident)}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for m in mats:
                b = matmul(a, m)
                k = _mat_key(b)
                if k not in seen:
                    if len(seen) > torsion_bound(r) * 8:
                        raise NotFiniteOrder("abelianized group is not finite")
                    seen.add(k)
                    nxt.append(b)
        frontier = nxt
    return minus not in seen


def pingpong_spec(H: Sequence[Automorphism], f: Automorphism, N: int) -> SubgroupSpec:
    check_positive_int(N, "N")
    ident = Automorphism.identity(f.rank)
    gens, names = [], []
    for i, h in enumerate(H):
        out_order(h)
        if out_equal(h, ident)[0]:
            continue
        gens.append(h)
        names.append(f"h{i}")
    gens.append(f ** N)
    names.append(f"f^{N}")
    return SubgroupSpec(gens, names)


# flaring along folding paths

@dataclass
class FlareTable:
    rows: List[Dict]
    min_ratio: Optional[Fraction]
    short_intervals: Dict[str, float]


def folding_flare_probe(path, alphas, d, short_length=None) -> FlareTable:
    """max(l(a|G_{t-d}), l(a|G_{t+d})) / l(a|G_t) at events, matching t +- d to the nearest event."""
    times = [math.log(r) for r in path.ratios]
    d = float(as_fraction(d, "d")) if isinstance(d, str) else float(d)
    if times[-1] - times[0] < 2 * d:
        raise SpanTooShort(f"path spans {times[-1] - times[0]:.4g}, need {2 * d:.4g}")
    alphas = [a if isinstance(a, CyclicWord) else CyclicWord(a) for a in alphas]
    lengths = {str(a): [ev.graph.loop_length(a) for ev in path.events] for a in alphas}

    def nearest(t):
        return min(range(len(times)), key=lambda j: (abs(times[j] - t), j))

    rows = []
    best = None
    for i, t in enumerate(times):
        if t - d < times[0] - 1e-12 or t + d > times[-1] + 1e-12:
            continue
        lo, hi = nearest(t - d), nearest(t + d)
        for a in alphas:
            L = lengths[str(a)]
            ratio = max(L[lo], L[hi]) / L[i]
            rows.append({"alpha": str(a), "event": i, "before": lo, "after": hi, "ratio": ratio})
            best = ratio if best is None else min(best, ratio)
    short = {}
    if short_length is not None:
        bound = as_fraction(short_length, "short_length")
        for a in alphas:
            L = lengths[str(a)]
            run_best, start = 0.0, None
            for i, x in enumerate(L):
                if x <= bound:
                    start = i if start is None else start
                    run_best = max(run_best, times[i] - times[start])
                else:
                    start = None
            short[str(a)] = run_best
    return FlareTable(rows, best, short)
