import random
from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from helpers import random_pair
from outerspace.automorphisms import Automorphism
from outerspace.graphs import act, candidate_loops, lipschitz_distance, rose
from outerspace.maps import optimal_map

ROSE = rose([F(1, 2), F(1, 2)])
PHI = Automorphism.from_text("a -> a b\nb -> b")


def _loop_image_length(f, loop):
    return sum((f.image_length(e) for e, _ in loop), F(0))


def test_identity_map():
    f = optimal_map(ROSE, ROSE)
    assert f.lipschitz() == 1
    assert set(f.slopes().values()) == {1}


def test_rank_two_example():
    f = optimal_map(ROSE, act(PHI, ROSE))
    assert f.slopes() == {"e1": 2, "e2": 1}
    assert f.tension_graph() == ["e1"]
    assert f.lipschitz() == 2


def test_collapsed_edge_has_zero_slope():
    # theta graph mapped onto a rose: the tree edge must die
    from outerspace.graphs import theta
    G = theta()
    H = rose([F(1, 2), F(1, 2)])
    f = optimal_map(G, H)
    assert f.lipschitz() == lipschitz_distance(G, H).ratio
    zero = [e for e, s in f.slopes().items() if s == 0]
    assert all(e not in f.tension_graph() for e in zero)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_optimal_map_is_certified(seed):
    rng = random.Random(seed)
    G, H = random_pair(rng)
    f = optimal_map(G, H)
    d = lipschitz_distance(G, H)
    assert f.lipschitz() == d.ratio
    tension = set(f.tension_graph())
    # the witness is realized inside the tension graph with no cancellation
    loop = G.loop(d.witness)
    assert {e for e, _ in loop} <= tension
    assert _loop_image_length(f, loop) == H.loop_length(d.witness)
    # every candidate's image is at least as long as its tight loop
    for loop in candidate_loops(G):
        alpha = G.read(loop)
        assert _loop_image_length(f, loop) >= H.loop_length(alpha)
