import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_word
from outerspace.automorphisms import Automorphism, inner
from outerspace.bundle import (BundleSpec, FiberPoint, bundle_ball, canonical_lift,
                               check_geodesic, fiber_bfs_distance, fiber_distance, inner_word,
                               flaring_sampler, bundle_constants, random_geodesic,
                               transfer_constants)
from outerspace.errors import BallTooSmall, DifferentFibers, NotGeodesic
from outerspace.flaring import SubgroupSpec
from outerspace.words import Word


def A(text):
    return Automorphism.from_text(text)


PARABOLIC = SubgroupSpec([A("a -> a\nb -> b a")], ["f"])
TWO_GEN = SubgroupSpec([A("a -> a b\nb -> a"), A("a -> b\nb -> a")], ["s", "t"])


@pytest.fixture(scope="module")
def parabolic():
    B = BundleSpec(PARABOLIC, 4)
    return B, bundle_ball(B, 4, with_elements=True)


@pytest.fixture(scope="module")
def two_gen():
    B = BundleSpec(TWO_GEN, 4)
    return B, bundle_ball(B, 4, with_elements=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lift_conjugates_inner_automorphisms(seed):
    rng = random.Random(seed)
    t = TWO_GEN.generators[rng.randrange(len(TWO_GEN))]
    x = random_word(2, rng.randint(0, 6), rng)
    assert t.compose(inner(x, 2)).compose(t.invert()) == inner(t.apply(x), 2)


def test_inner_word_inverts_inner():
    for w in ("", "a", "abA", "bbAB"):
        assert inner_word(inner(Word.parse(w), 2)) == Word.parse(w)
    with pytest.raises(ValueError):
        inner_word(A("a -> b\nb -> a"))


def test_symbolic_points_match_composition(two_gen):
    B, ball = two_gen
    for p, g in ball.elements.items():
        assert B.element(p) == g
        assert B.point_of(g) == p


def test_generating_set(two_gen):
    B, _ = two_gen
    names = [n for n, _ in B.generators()]
    assert names[:4] == ["a", "A", "b", "B"] and len(names) == 4 + len(TWO_GEN)


def test_backward_steps_undo_forward_steps(two_gen):
    B, ball = two_gen
    for p in list(ball.points)[:200]:
        for gi in range(len(B.lifts)):
            try:
                q = B.times_lift(p, gi)
            except BallTooSmall:
                continue
            assert B.times_lift_inverse(q, gi) == p


def test_fiber_distance_is_word_length_within_a_fiber(parabolic):
    B, ball = parabolic
    rng = random.Random(0)
    fibers = {}
    for p in ball.points:
        fibers.setdefault(p.base, []).append(p)
    pairs = [pq for ps in fibers.values() for pq in itertools.combinations(ps, 2)]
    for u, v in rng.sample(pairs, 60):
        assert fiber_distance(u, v) == fiber_bfs_distance(B, ball.elements[u], ball.elements[v])
    with pytest.raises(DifferentFibers):
        fiber_distance(FiberPoint(0, Word()), FiberPoint(1, Word()))


def test_properness_of_the_parabolic_bundle(parabolic):
    _, ball = parabolic
    assert ball.properness() == [0, 1, 2, 3, 4]


def test_canonical_lifts_follow_the_geodesic(two_gen):
    B, _ = two_gen
    rng = random.Random(3)
    for _ in range(10):
        gamma = random_geodesic(B, 3, rng)
        nodes = check_geodesic(B, gamma)
        lift = canonical_lift(B, gamma, FiberPoint(0, Word()))
        assert [p.base for p in lift] == nodes
        g = Automorphism.identity(2)
        for p, gi in zip(lift[1:], gamma):
            g = g.compose(B.lifts[gi])
            assert B.element(p) == g


def test_backtracking_path_is_not_geodesic(two_gen):
    B, _ = two_gen
    with pytest.raises(NotGeodesic):
        check_geodesic(B, [0, 1])
    with pytest.raises(BallTooSmall):
        B.step(B.ball.sphere(4)[0].index, 0)


def test_parabolic_sampler_does_not_flare(parabolic):
    B, _ = parabolic
    family = [Word.parse("a" * j) for j in range(1, 8)]
    rep = flaring_sampler(B, 1, 2, 2, 20, 7, family=family)
    assert rep.min_lambda <= 1 + 1e-9
    assert rep.witnesses and rep.to_dict()["note"]


def test_sampler_is_deterministic(two_gen):
    B, _ = two_gen
    a = flaring_sampler(B, 1, 2, 2, 15, 11).to_dict()
    b = flaring_sampler(B, 1, 2, 2, 15, 11).to_dict()
    assert a == b


def test_transfer_constants():
    c = transfer_constants(2, 1, 1, [0, 2, 4, 7, 10, 12])
    assert (c.lambda_k, c.n_k, c.e_k, c.M_k) == (1.5, 1, 10, 44)
    with pytest.raises(BallTooSmall):
        transfer_constants(2, 1, 1, [0, 1, 2])
    with pytest.raises(ValueError):
        transfer_constants(1, 1, 1, [0] * 10)


def test_constants_on_the_parabolic_bundle(parabolic):
    B, _ = parabolic
    c = bundle_constants(3, 1, 1, B)
    assert c.lambda_k == 2 and c.n_k == 1 and c.radius == 4
    assert c.e_k == 4 and c.M_k == 11
    with pytest.raises(BallTooSmall):
        bundle_constants(3, 2, 1, B)
