"""Random marked graphs and automorphisms shared by the tests."""

import random
from fractions import Fraction

from outerspace.automorphisms import Automorphism
from outerspace.graphs import act, from_topology
from outerspace.words import CyclicWord, Word

# core graph topologies without separating edges issues: roses, theta, barbell, K4, ...
TOPOLOGIES = {
    2: [
        (["v"], {"e1": ("v", "v"), "e2": ("v", "v")}),
        (["u", "v"], {"e1": ("u", "v"), "e2": ("u", "v"), "e3": ("u", "v")}),
        (["u", "v"], {"e1": ("u", "u"), "e2": ("u", "v"), "e3": ("v", "v")}),
    ],
    3: [
        (["v"], {"e1": ("v", "v"), "e2": ("v", "v"), "e3": ("v", "v")}),
        (["1", "2", "3", "4"], {"e1": ("1", "2"), "e2": ("1", "3"), "e3": ("1", "4"),
                                "e4": ("2", "3"), "e5": ("3", "4"), "e6": ("2", "4")}),
        (["u", "v"], {"e1": ("u", "v"), "e2": ("u", "v"), "e3": ("u", "v"), "e4": ("u", "v")}),
        (["u", "v"], {"e1": ("u", "u"), "e2": ("u", "v"), "e3": ("u", "v"), "e4": ("v", "v")}),
        (["u", "v", "w"], {"e1": ("u", "u"), "e2": ("u", "v"), "e3": ("v", "v"),
                           "e4": ("v", "w"), "e5": ("w", "w")}),
    ],
}


def nielsen(r, rng):
    imgs = [Word((i + 1,)) for i in range(r)]
    i, j = rng.sample(range(r), 2)
    s = rng.choice([1, -1])
    if rng.random() < 0.5:
        imgs[i] = Word((i + 1,)) * Word((s * (j + 1),))
    else:
        imgs[i] = Word((s * (j + 1),)) * Word((i + 1,))
    return Automorphism(imgs, r)


def random_automorphism(r, rng, k):
    phi = Automorphism.identity(r)
    for _ in range(k):
        phi = phi.compose(nielsen(r, rng))
    return phi


def random_graph(r, rng, k=3, top=None):
    vs, es = TOPOLOGIES[r][rng.randrange(len(TOPOLOGIES[r]))] if top is None else TOPOLOGIES[r][top]
    lens = [Fraction(rng.randint(1, 9)) for _ in es]
    total = sum(lens)
    G = from_topology(vs, {e: (a, b, x / total) for (e, (a, b)), x in zip(es.items(), lens)})
    return act(random_automorphism(r, rng, k), G)


def random_pair(rng, ranks=(2, 2, 3)):
    r = rng.choice(ranks)
    return random_graph(r, rng, k=rng.randint(0, 2)), random_graph(r, rng, k=rng.randint(1, 4))


def random_word(r, n, rng):
    letters = []
    while len(letters) < n:
        x = rng.randint(1, r) * rng.choice((1, -1))
        if letters and letters[-1] == -x:
            continue
        letters.append(x)
    return Word(letters)


def random_class(r, n, rng):
    while True:
        w = random_word(r, n, rng).cyclic_reduction()
        if w:
            return CyclicWord(w)


_PATHS = {}


def engine_paths(n, seed=0, ranks=(2, 2, 3)):
    """n standard geodesics between random non-isometric pairs, cached per (n, seed)."""
    from outerspace.folding import standard_geodesic
    from outerspace.graphs import is_marked_isometric
    key = (n, seed, ranks)
    if key not in _PATHS:
        rng = random.Random(seed)
        out = []
        while len(out) < n:
            G, H = random_pair(rng, ranks)
            if is_marked_isometric(G, H):
                continue
            out.append((G, H, standard_geodesic(G, H)))
        _PATHS[key] = out
    return _PATHS[key]
