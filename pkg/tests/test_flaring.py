import math
import random
from fractions import Fraction as F

import pytest

from helpers import engine_paths, random_automorphism, random_word
from outerspace.automorphisms import Automorphism, inner, out_equal
from outerspace.errors import InvalidSubgroup, SpanTooShort
from outerspace.flaring import (NON_CERTIFYING, SubgroupSpec, act_on_class, cayley_ball,
                                conjugacy_flaring_check, default_alphas, folding_flare_probe,
                                growth_fit, norm, out_order, pingpong_spec, projectively_good,
                                reverify, screen_atoroidal, shorten, torsion_bound)
from outerspace.words import CyclicWord


def A(text):
    return Automorphism.from_text(text)


PARABOLIC = A("a -> a\nb -> b a")
FIB = A("a -> a b\nb -> a")
RANK3 = A("a -> b\nb -> c\nc -> a b")


def test_parabolic_fixture_has_a_counterexample_with_witness_a():
    spec = SubgroupSpec([PARABOLIC], ["f"])
    for lam in ("3/2", 2, 3):
        for M in range(1, 7):
            rep = conjugacy_flaring_check(spec, lam, M, 2 * M, 4)
            assert rep.verdict == "counterexample"
            assert rep.witness["alpha"] == "a"
            assert rep.witness["norm_alpha"] == rep.witness["norm_g1_alpha"] == 1
            assert reverify(rep)


def test_cyclic_balls_grow_linearly():
    spec = SubgroupSpec([PARABOLIC], ["f"])
    assert [len(cayley_ball(spec, n)) for n in range(5)] == [1, 3, 5, 7, 9]
    ball = cayley_ball(spec, 3)
    assert [len(ball.sphere(n)) for n in range(4)] == [1, 2, 2, 2]


def test_identity_generator_is_rejected():
    with pytest.raises(InvalidSubgroup):
        SubgroupSpec([Automorphism.identity(2)], ["e"])
    with pytest.raises(InvalidSubgroup):
        SubgroupSpec([inner(CyclicWord("ab").word(), 2)], ["i"])


def test_rank_three_power_holds_on_sample():
    screen = screen_atoroidal(RANK3, 4, 6)
    assert screen.verdict == "no-short-periodic-class"
    assert screen.banner == NON_CERTIFYING
    rep = conjugacy_flaring_check(SubgroupSpec([RANK3 ** 4], ["f"]), 2, 1, 2, 4)
    assert rep.verdict == "holds-on-sample" and rep.witness is None
    assert rep.census["pairs"] > 0 and rep.census["checks"] == rep.census["pairs"] * rep.census["alphas"]
    assert rep.constants == {"m_breve": 10, "I": rep.constants["I"], "e_r": 11232}


def test_census_grows_with_radius():
    spec = SubgroupSpec([A("a -> a b\nb -> b"), A("a -> a\nb -> b a")], ["s", "t"])
    sizes = [len(cayley_ball(spec, n)) for n in range(4)]
    assert sizes[:2] == [1, 5] and sizes == sorted(sizes)
    pairs = [conjugacy_flaring_check(spec, 2, 1, n, 2, alphas=["ab"]).census["pairs"] for n in (2, 3)]
    assert 0 < pairs[0] < pairs[1]


def test_verdict_ignores_the_automorphism_representative():
    rng = random.Random(7)
    for _ in range(5):
        phi = random_automorphism(2, rng, 3)
        twisted = inner(random_word(2, 3, rng), 2).compose(phi)
        if out_equal(phi, Automorphism.identity(2))[0]:
            continue
        a = conjugacy_flaring_check(SubgroupSpec([phi], ["f"]), 2, 1, 2, 3)
        b = conjugacy_flaring_check(SubgroupSpec([twisted], ["f"]), 2, 1, 2, 3)
        assert a.verdict == b.verdict and a.census == b.census
        for alpha in default_alphas(2, 4):
            assert norm(act_on_class(phi, alpha)) == norm(act_on_class(twisted, alpha))
        assert out_equal(shorten(twisted), phi)[0]


def test_default_alphas_are_unoriented_and_nontrivial():
    alphas = default_alphas(2, 3)
    assert all(alphas) and len(set(alphas)) == len(alphas)
    assert CyclicWord("a") in alphas and CyclicWord("A") not in alphas


def test_screen_examples():
    assert screen_atoroidal(PARABOLIC, 4, 4).periodic == "a"
    assert screen_atoroidal(A("a -> a b\nb -> b"), 4, 4).periodic == "b"
    assert screen_atoroidal(Automorphism.identity(2), 2, 2).verdict == "degenerate"
    # rank 2: the commutator class is always fixed up to orientation
    s = screen_atoroidal(FIB, 4, 6)
    assert (s.periodic, s.power) == ("abAB", 2)


def test_fibonacci_growth():
    g = growth_fit(FIB, "a", 12)
    assert g.lengths == [2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377]
    assert abs(g.slope - math.log((1 + 5 ** 0.5) / 2)) < 0.05 * math.log((1 + 5 ** 0.5) / 2)
    assert g.min_stretch >= 1 and g.max_stretch == 2
    with pytest.raises(ValueError):
        growth_fit(FIB, "a", 3)


def test_torsion_bounds():
    assert torsion_bound(1) == 2 and torsion_bound(2) == 48 and torsion_bound(3) == 11232


def test_stabilizers_stay_below_the_torsion_bound():
    # finite-order elements of a ball fix classes at most e_r times
    spec = SubgroupSpec([A("a -> b\nb -> a"), A("a -> A\nb -> b")], ["s", "t"])
    ball = cayley_ball(spec, 4)
    for alpha in default_alphas(2, 3):
        stab = sum(1 for n in ball.nodes if act_on_class(n.rep, alpha).unoriented() == alpha)
        assert stab <= torsion_bound(2)


def test_projective_goodness():
    assert not projectively_good([A("a -> A\nb -> B")])
    assert projectively_good([A("a -> b\nb -> a")])
    assert projectively_good([])
    assert out_order(A("a -> b\nb -> a")) == 2


def test_pingpong_group():
    spec = pingpong_spec([A("a -> b\nb -> a"), Automorphism.identity(2)], A("a -> a b\nb -> b a b"), 3)
    # the involution is its own inverse and the identity is dropped
    assert spec.names == ["h0", "f^3", "f^3^-1"]
    assert len(cayley_ball(spec, 1)) == 1 + len(spec)


def test_probe_on_constant_path():
    from outerspace.folding import fold_path
    from outerspace.graphs import rose
    from outerspace.maps import optimal_map
    G = rose([F(1, 2), F(1, 2)])
    with pytest.raises(SpanTooShort):
        folding_flare_probe(fold_path(optimal_map(G, G)), ["a"], "1/10")


def test_probe_on_engine_paths():
    rows = 0
    for _, _, geo in engine_paths(12, 0):
        P = geo.path
        span = math.log(P.ratios[-1] / P.ratios[0])
        if span < 0.2:
            continue
        table = folding_flare_probe(P, ["a", "ab"], span / 4, short_length=2)
        rows += len(table.rows)
        for row in table.rows:
            assert row["before"] <= row["event"] <= row["after"] and row["ratio"] > 0
        if table.rows:
            assert table.min_ratio == min(r["ratio"] for r in table.rows)
        assert all(0 <= v <= span for v in table.short_intervals.values())
    assert rows > 0
