"""The Cayley-graph bundle of a free-group extension over a subgroup of Out(F_r).

Bundle elements are automorphisms.  A point is stored as (base node, w):
the section lift of the base composed with the inner automorphism i_w.
Fiber distances are then plain word lengths of w1^-1 w2.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._validation import as_fraction, budget, check_positive_int
from .automorphisms import Automorphism, inner, out_equal
from .errors import (BallTooSmall, BudgetExceeded, DifferentFibers, NoGeodesicOfLength,
                     NotGeodesic)
from .flaring import CayleyBall, SubgroupSpec, cayley_ball
from .words import Word

DEFAULT_BUNDLE_CAP = 200_000
OPEN_QUESTION = ("only canonical lifts are sampled; whether other quasi-isometric lifts give "
                 "worse constants on this example is open")


def inner_word(g: Automorphism) -> Word:
    """w with g = i_w; raises ValueError if g is not inner."""
    ok, w = out_equal(Automorphism.identity(g.basis), g)
    if not ok:
        raise ValueError("automorphism is not inner")
    return w


@dataclass(frozen=True)
class FiberPoint:
    base: int
    coord: Word

    def to_dict(self):
        return {"base": self.base, "coord": str(self.coord)}


class BundleSpec:
    """Lifts t_i of the generators of Gamma together with the inner generators i_x."""

    def __init__(self, gamma: SubgroupSpec, radius: int = 4, cap: Optional[int] = None):
        self.gamma = gamma
        self.rank = gamma.rank
        self.basis = gamma.generators[0].basis
        self.lifts: List[Automorphism] = list(gamma.generators)
        self.ball: CayleyBall = cayley_ball(gamma, radius, cap)
        self._step: Dict[Tuple[int, int], int] = {(u, g): v for u, g, v in self.ball.edges}
        self._section: Dict[int, Automorphism] = {}
        self._shift: Dict[Tuple[int, int], Word] = {}
        for node in self.ball.nodes:
            s = Automorphism.identity(self.basis)
            for gi in node.word:
                s = s.compose(self.lifts[gi])
            self._section[node.index] = s

    @property
    def radius(self):
        return self.ball.radius

    def generators(self) -> List[Tuple[str, Automorphism]]:
        """The symmetric generating set W of the bundle group."""
        out = []
        for x in range(1, self.rank + 1):
            for s in (x, -x):
                out.append((Word((s,)).to_string(self.basis), inner(Word((s,)), self.basis)))
        out.extend(zip(self.gamma.names, self.lifts))
        return out

    def section(self, base: int) -> Automorphism:
        return self._section[base]

    def element(self, p: FiberPoint) -> Automorphism:
        return self._section[p.base].compose(inner(p.coord, self.basis))

    def step(self, base: int, gi: int) -> int:
        try:
            return self._step[(base, gi)]
        except KeyError:
            raise BallTooSmall(f"base node {base} lies on the boundary of the radius-{self.radius} ball")

    def shift(self, base: int, gi: int) -> Word:
        """c with section(base) t_gi = section(base') i_c."""
        key = (base, gi)
        if key not in self._shift:
            nxt = self.step(base, gi)
            target = self._section[base].compose(self.lifts[gi])
            ok, w = out_equal(self._section[nxt], target)
            assert ok
            self._shift[key] = self._section[nxt].invert().apply(w)
        return self._shift[key]

    def times_inner(self, p: FiberPoint, w) -> FiberPoint:
        w = w if isinstance(w, Word) else Word.parse(w, self.basis)
        return FiberPoint(p.base, p.coord * w)

    def times_lift(self, p: FiberPoint, gi: int) -> FiberPoint:
        # b i_w t = b t i_{t^-1(w)} = b' i_c i_{t^-1(w)}
        t_inv = self.lifts[gi].invert()
        return FiberPoint(self.step(p.base, gi), self.shift(p.base, gi) * t_inv.apply(p.coord))

    def times_lift_inverse(self, p: FiberPoint, gi: int) -> FiberPoint:
        """p t_gi^-1, for moving backwards along an edge labelled gi."""
        prev = None
        for u, g, v in self.ball.edges:
            if g == gi and v == p.base:
                prev = u
                break
        if prev is None:
            raise BallTooSmall("no predecessor inside the ball")
        # b' i_w t^-1 = b i_x with b t = b' i_c, so x = t(c^-1 w)
        c = self.shift(prev, gi)
        return FiberPoint(prev, self.lifts[gi].apply(c.inverse() * p.coord))

    def point_of(self, g: Automorphism) -> FiberPoint:
        node = self.ball.find(g)
        if node is None:
            raise BallTooSmall("base of the element lies outside the ball")
        return FiberPoint(node.index, inner_word(self._section[node.index].invert().compose(g)))

    def to_dict(self):
        return {"gamma": self.gamma.to_dict(), "radius": self.radius,
                "lifts": {n: t.to_dict() for n, t in zip(self.gamma.names, self.lifts)}}


def fiber_distance(u: FiberPoint, v: FiberPoint) -> int:
    if u.base != v.base:
        raise DifferentFibers(f"points lie over base nodes {u.base} and {v.base}")
    return len(u.coord.inverse() * v.coord)


def fiber_bfs_distance(B: BundleSpec, g1: Automorphism, g2: Automorphism, cap: int = 2_000_000) -> int:
    """Distance from g1 to g2 along inner-generator edges, searched from both ends."""
    if g1 == g2:
        return 0
    steps = [inner(Word((s,)), B.basis) for x in range(1, B.rank + 1) for s in (x, -x)]
    seen = [{g1: 0}, {g2: 0}]
    frontier = [[g1], [g2]]
    size = 2
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        nxt = []
        for g in frontier[side]:
            d = seen[side][g]
            for s in steps:
                h = g.compose(s)
                if h in seen[side]:
                    continue
                if h in seen[1 - side]:
                    return d + 1 + seen[1 - side][h]
                seen[side][h] = d + 1
                nxt.append(h)
                size += 1
        if size > cap:
            raise BudgetExceeded("fiber search exceeded its budget")
        frontier[side] = nxt
    raise ValueError("points lie in different fibers")


@dataclass
class BundleBall:
    """Breadth-first ball of Cay(E, W) around the identity."""
    radius: int
    points: Dict[FiberPoint, int]
    elements: Dict[FiberPoint, Automorphism] = field(repr=False)

    def fiber(self, base: int) -> List[FiberPoint]:
        return [p for p in self.points if p.base == base]

    def properness(self) -> List[int]:
        """f(n) = max fiber length of an inner element of W-length <= n, for n up to the radius."""
        best = [0] * (self.radius + 1)
        for p, d in self.points.items():
            if p.base == 0:
                best[d] = max(best[d], len(p.coord))
        for n in range(1, len(best)):
            best[n] = max(best[n], best[n - 1])
        return best


def bundle_ball(B: BundleSpec, radius: int, cap: Optional[int] = None, with_elements: bool = False) -> BundleBall:
    check_positive_int(radius, "radius", minimum=0)
    if radius > B.radius:
        raise BallTooSmall(f"bundle ball of radius {radius} needs a base ball of radius {radius}")
    limit = budget(cap, DEFAULT_BUNDLE_CAP)
    ident = FiberPoint(0, Word())
    points = {ident: 0}
    elements = {ident: Automorphism.identity(B.basis)} if with_elements else {}
    moves = [("i", Word((s,))) for x in range(1, B.rank + 1) for s in (x, -x)]
    moves += [("t", gi) for gi in range(len(B.lifts))]
    frontier = [ident]
    for d in range(radius):
        nxt = []
        for p in frontier:
            for kind, m in moves:
                q = B.times_inner(p, m) if kind == "i" else B.times_lift(p, m)
                if q in points:
                    continue
                if len(points) >= limit:
                    raise BudgetExceeded(f"bundle ball exceeds {limit} points")
                points[q] = d + 1
                if with_elements:
                    g = inner(m, B.basis) if kind == "i" else B.lifts[m]
                    elements[q] = elements[p].compose(g)
                nxt.append(q)
        frontier = nxt
    return BundleBall(radius, points, elements)


def check_geodesic(B: BundleSpec, gamma: Sequence[int], start: int = 0) -> List[int]:
    """Base nodes along the edge path; raises NotGeodesic unless certified by the ball."""
    nodes = [start]
    for gi in gamma:
        nodes.append(B.step(nodes[-1], gi))
    end = B.ball.nodes[nodes[-1]].rep
    rel = B.ball.nodes[start].rep.invert().compose(end)
    found = B.ball.find(rel)
    if found is None:
        raise BallTooSmall("path endpoints are not certified by the ball")
    if found.dist != len(gamma):
        raise NotGeodesic(f"path of length {len(gamma)} joins points at distance {found.dist}")
    return nodes


def canonical_lift(B: BundleSpec, gamma: Sequence[int], start: FiberPoint) -> List[FiberPoint]:
    """gamma~(j) = start t_0 ... t_(j-1)."""
    check_geodesic(B, gamma, start.base)
    out = [start]
    for gi in gamma:
        out.append(B.times_lift(out[-1], gi))
    return out


@dataclass
class BundleReport:
    k: int
    n_k: int
    M_k: int
    samples: int
    seed: int
    lambda_target: Fraction
    min_lambda: Fraction
    per_n_min: List[Fraction]
    fit_slope: Optional[float]
    witnesses: List[Dict]
    properness: Optional[List[int]] = None
    note: str = OPEN_QUESTION

    def to_dict(self):
        return {"k": self.k, "n_k": self.n_k, "M_k": self.M_k, "samples": self.samples,
                "seed": self.seed, "lambda_target": str(self.lambda_target),
                "min_lambda": str(self.min_lambda), "min_lambda_float": round(float(self.min_lambda), 9),
                "per_n_min": [str(x) for x in self.per_n_min],
                "fit_slope": None if self.fit_slope is None else round(self.fit_slope, 9),
                "witnesses": self.witnesses, "properness": self.properness, "note": self.note}


def random_geodesic(B: BundleSpec, length: int, rng: random.Random) -> List[int]:
    """Generator labels of a random geodesic of the given length from the identity."""
    dist = {v.index: v.dist for v in B.ball.nodes}
    here, out = 0, []
    for _ in range(length):
        options = [gi for gi in range(len(B.lifts))
                   if (here, gi) in B._step and dist[B._step[(here, gi)]] == dist[here] + 1]
        if not options:
            raise NoGeodesicOfLength(f"no geodesic of length {length} inside the ball")
        gi = rng.choice(options)
        out.append(gi)
        here = B._step[(here, gi)]
    return out


def _random_word(rank: int, length: int, rng: random.Random) -> Word:
    letters: List[int] = []
    while len(letters) < length:
        x = rng.randint(1, rank) * rng.choice((1, -1))
        if letters and letters[-1] == -x:
            continue
        letters.append(x)
    return Word(letters)


def flaring_sampler(B: BundleSpec, k: int, n_k: int, M_k: int, samples: int, seed: int,
                      lambda_target=2, family: Optional[Sequence] = None,
                      properness: Optional[List[int]] = None) -> BundleReport:
    """Empirical flaring of pairs of canonical lifts along random geodesics of length 2 n_k.

    The central fiber difference is i_alpha with |alpha| >= M_k, drawn from `family`
    when given and otherwise as a random reduced word of length M_k..2 M_k.
    """
    check_positive_int(k, "k")
    check_positive_int(n_k, "n_k")
    check_positive_int(M_k, "M_k")
    check_positive_int(samples, "samples")
    target = as_fraction(lambda_target, "lambda_target")
    if B.radius < 2 * n_k:
        raise NoGeodesicOfLength(f"base ball radius {B.radius} is below 2 n_k = {2 * n_k}")
    rng = random.Random(seed)
    pool = None
    if family is not None:
        pool = [w if isinstance(w, Word) else Word.parse(w, B.basis) for w in family]
        pool = [w for w in pool if len(w) >= M_k]
        if not pool:
            raise ValueError(f"no family member has length >= {M_k}")
    per_n = [None] * n_k
    witnesses = []
    for s in range(samples):
        gamma = random_geodesic(B, 2 * n_k, rng)
        alpha = rng.choice(pool) if pool else _random_word(B.rank, rng.randint(M_k, 2 * M_k), rng)
        center = B.step(0, gamma[0])
        for gi in gamma[1:n_k]:
            center = B.step(center, gi)
        z1 = FiberPoint(center, Word())
        z2 = B.times_inner(z1, alpha)
        fwd = [(z1, z2)]
        back = [(z1, z2)]
        for j in range(n_k):
            a, b = fwd[-1]
            g = gamma[n_k + j]
            fwd.append((B.times_lift(a, g), B.times_lift(b, g)))
            a, b = back[-1]
            g = gamma[n_k - 1 - j]
            back.append((B.times_lift_inverse(a, g), B.times_lift_inverse(b, g)))
        d0 = len(alpha)
        for n in range(1, n_k + 1):
            lam = Fraction(max(fiber_distance(*fwd[n]), fiber_distance(*back[n])), d0)
            if per_n[n - 1] is None or lam < per_n[n - 1]:
                per_n[n - 1] = lam
            if n == n_k and lam < target:
                witnesses.append({"sample": s, "gamma": [B.gamma.names[g] for g in gamma],
                                  "alpha": alpha.to_string(B.basis), "lambda": str(lam)})
    slope = None
    if n_k >= 2:
        ys = np.log(np.array([float(x) for x in per_n]))
        slope = float(np.polyfit(np.arange(1, n_k + 1), ys, 1)[0])
    return BundleReport(k, n_k, M_k, samples, seed, target, per_n[-1], per_n, slope, witnesses,
                        properness)


@dataclass
class BundleConstants:
    lambda_k: Fraction
    n_k: int
    M_k: int
    e_k: int
    radius: int
    properness: List[int]

    def to_dict(self):
        return {"lambda_k": str(self.lambda_k), "n_k": self.n_k, "M_k": self.M_k, "e_k": self.e_k,
                "radius": self.radius, "properness": self.properness}


def transfer_constants(lam, N: int, k: int, properness: Sequence[int]) -> BundleConstants:
    """Bundle flaring constants from conjugacy flaring data and a measured properness table."""
    lam = as_fraction(lam, "lambda")
    if lam <= 1:
        raise ValueError("lambda must exceed 1")
    check_positive_int(N, "N")
    check_positive_int(k, "k")
    radius = N + 1 + k * N + k
    if len(properness) <= radius:
        raise BallTooSmall(f"properness measured up to {len(properness) - 1}, need {radius}")
    e = properness[radius]
    M = math.ceil(2 * (lam + 2 * e) / (lam - 1))
    return BundleConstants((lam + 1) / 2, N, M, e, radius, list(properness[:radius + 1]))


def bundle_constants(lam, N: int, k: int, B: BundleSpec, cap: Optional[int] = None) -> BundleConstants:
    radius = N + 1 + k * N + k
    if radius > B.radius:
        raise BallTooSmall(f"properness needed at radius {radius}, base ball has radius {B.radius}")
    try:
        ball = bundle_ball(B, radius, cap)
    except BudgetExceeded as exc:
        raise BallTooSmall(f"properness at radius {radius} not determined: {exc}") from exc
    return transfer_constants(lam, N, k, ball.properness())
