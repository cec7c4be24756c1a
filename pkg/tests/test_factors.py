import random
from fractions import Fraction as F

import pytest

from helpers import engine_paths, random_automorphism, random_graph, random_word
from oracles import brute_conjugate_into
from outerspace.errors import RankTooSmall, TrivialSubgroup
from outerspace.factors import (FactorClass, conjugate_equal, conjugate_into, cover_core,
                                left_right_projection, longest_illegal_segment,
                                longest_legal_segment, pr,
                                project_factors, stallings_core)
from outerspace.folding import illegal_length_threshold
from outerspace.graphs import act, candidate_loops, rose, theta
from outerspace.words import Word

ROSE = rose([F(1, 2), F(1, 2)])


def random_subgroup_pair(rng):
    r = rng.choice([2, 2, 3])

    def gens():
        out = [random_word(r, rng.randint(1, 3), rng) for _ in range(rng.randint(1, 2))]
        return [w for w in out if w.cyclic_reduction()] or [Word((rng.randint(1, r),))]
    return r, gens(), gens()


def test_core_examples():
    assert stallings_core(["a"]).edges == [(0, 1, 0)]
    assert stallings_core(["abA"]).isomorphic(stallings_core(["b"]))
    c = stallings_core(["aa", "ab"])
    assert c.rank == 2 == len(c.edges) - len(c.vertices) + 1
    with pytest.raises(TrivialSubgroup):
        stallings_core(["aA"])


def test_inverse_generator_gives_same_class():
    assert FactorClass(["ab"]) == FactorClass(["BA"])
    assert conjugate_equal(["ab"], ["BBAb"])


def test_conjugate_into_examples():
    assert conjugate_into(["abA"], ["b"])
    assert not conjugate_into(["a"], ["b"])
    assert conjugate_into(["aa"], ["a"]) and not conjugate_into(["a"], ["aa"])


def test_conjugate_into_agrees_with_search():
    rng = random.Random(21)
    yes = 0
    for _ in range(60):
        r, A, B = random_subgroup_pair(rng)
        got = conjugate_into(A, B)
        assert got == brute_conjugate_into(A, B, r)
        yes += got
    assert 0 < yes < 60


def test_cover_core_examples():
    cc = cover_core(["a"], ROSE)
    assert cc.rank == 1 and cc.volume() == F(1, 2)
    cc = cover_core(["ab"], ROSE)
    assert cc.rank == 1 and cc.volume() == 1
    whole = cover_core(["a", "b"], ROSE)
    assert whole.rank == 2 and whole.volume() == 1


def test_projection_examples():
    assert set(project_factors(ROSE)) == {FactorClass(["a"]), FactorClass(["b"])}
    assert set(project_factors(theta())) == {FactorClass(["a"]), FactorClass(["b"]), FactorClass(["ab"])}
    with pytest.raises(RankTooSmall):
        project_factors(rose([1]))


def test_projected_factors_are_proper():
    rng = random.Random(4)
    for _ in range(15):
        r = rng.choice([2, 3])
        G = random_graph(r, rng)
        fs = project_factors(G)
        assert fs and all(1 <= f.rank < r for f in fs)
        assert len(set(fs)) == len(fs)
        # each factor's cover core embeds: it is no longer than the graph itself
        for f in fs:
            assert cover_core(f, G).volume() < 1


def test_projection_is_equivariant():
    rng = random.Random(2)
    for _ in range(30):
        r = rng.choice([2, 3])
        G, phi = random_graph(r, rng), random_automorphism(r, rng, 4)
        assert set(project_factors(act(phi, G))) == {f.apply(phi) for f in project_factors(G)}


def test_candidate_projections_nest_inside_the_graphs():
    checked = 0
    for _, H, geo in engine_paths(12, 0):
        P = geo.path
        pj = [left_right_projection(A, P) for A in project_factors(H)]
        left, right = min(p.left for p in pj), max(p.right for p in pj)
        for loop in candidate_loops(H):
            # candidates through every edge do not sit inside a proper subgraph
            if len({e for e, _ in loop}) == len(H.edges):
                continue
            p = left_right_projection([H.read(loop)], P)
            assert left <= p.left and p.right <= right
            checked += 1
    assert checked >= 20


def test_projection_conventions():
    for _, _, geo in engine_paths(12, 0)[:4]:
        P = geo.path
        n = len(P.events)
        # only closed loops give segments this long; otherwise right falls back to the first event
        p = left_right_projection(["a"], P, illegal_length=10 ** 6)
        illegal_somewhere = any(longest_illegal_segment(cover_core(["a"], e.graph, e.gates)) == float("inf")
                                for e in P.events)
        assert p.right_empty != illegal_somewhere
        if p.right_empty:
            assert p.right == 0
        p = left_right_projection(["a"], P, legal_length=10 ** 6)
        # a legal circle carries legal segments of every length
        legal_somewhere = any(longest_legal_segment(cover_core(["a"], e.graph, e.gates)) == float("inf")
                              for e in P.events)
        assert p.left_empty != legal_somewhere
        if p.left_empty:
            assert p.left == n - 1
        d = p.to_dict()
        assert set(d) == {"left", "right", "left_ratio", "right_ratio", "left_empty", "right_empty"}


def test_legal_factor_projects_to_the_start():
    from outerspace.automorphisms import Automorphism
    from outerspace.folding import standard_geodesic
    phi = Automorphism.from_text("a -> a b\nb -> b")
    geo = standard_geodesic(ROSE, act(phi ** 4, ROSE))
    ev = geo.path.events[0]
    core = cover_core(["a"], ev.graph, ev.gates)
    if longest_legal_segment(core) >= 3:
        assert left_right_projection(["a"], geo.path).left == 0
    assert illegal_length_threshold(2) == 504


def test_pr_is_an_event_snapshot():
    for _, H, geo in engine_paths(12, 0)[:5]:
        i, G = pr(H, geo.path)
        assert G is geo.path.events[i].graph
