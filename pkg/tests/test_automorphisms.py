import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_automorphism, random_word
from oracles import all_words, cyclic_length, free_reduce, substitute
from outerspace.automorphisms import (Automorphism, OutElement, abelianize, determinant, inner,
                                      invariant_key, matmul, out_equal)
from outerspace.errors import NotAnAutomorphism
from outerspace.words import Word

PHI = Automorphism.from_text("a -> a b\nb -> b")
PSI = Automorphism.from_text("a -> a\nb -> b a")


def A(text):
    return Automorphism.from_text(text)


def test_apply_examples():
    assert str(PHI.apply(Word.parse("a"))) == "ab"
    assert str(PHI.apply(Word.parse("aB"))) == "a"
    ident = Automorphism.identity(2)
    assert ident.apply(Word.parse("abAAB")) == Word.parse("abAAB")


def test_compose_examples():
    assert PHI.compose(PSI) == A("a -> a b\nb -> b a b")
    assert PHI.compose(Automorphism.identity(2)) == PHI
    assert PHI.compose(PHI.invert()).is_identity()
    assert PHI.invert().compose(PHI).is_identity()


def test_invert_examples():
    assert PHI.invert() == A("a -> a B\nb -> b")
    assert Automorphism.identity(2).invert().is_identity()
    with pytest.raises(NotAnAutomorphism):
        A("a -> a a\nb -> b")


def test_out_equal_examples():
    ok, w = out_equal(PHI, inner(Word.parse("a"), 2).compose(PHI))
    assert ok and str(w) == "a"
    ok, w = out_equal(A("a -> a b\nb -> b"), A("a -> b a\nb -> b"))
    assert ok and str(w) == "b"
    assert out_equal(PHI, Automorphism.identity(2)) == (False, None)


def test_out_equal_witness_matches_exhaustive_search():
    # every conjugator up to length 4 taking PHI's images to the other's
    target = A("a -> b a\nb -> b")
    found = []
    for w in all_words(2, 4):
        winv = tuple(-x for x in reversed(w))
        if all(free_reduce(w + img.letters + winv) == t.letters
               for img, t in zip(PHI.images, target.images)):
            found.append(w)
    assert found == [(2,)]


def test_abelianize_examples():
    assert abelianize(PHI) == [[1, 0], [1, 1]]
    assert abelianize(Automorphism.identity(3)) == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    m = abelianize(Automorphism(["aa", "b"], 2, _checked=True))
    assert m == [[2, 0], [0, 1]] and determinant(m) == 2


def test_text_round_trip():
    phi = A("# a comment\na -> a b   # trailing\nb -> B\n")
    assert Automorphism.from_text(phi.to_text()) == phi
    assert phi.to_text() == "a -> a b\nb -> B\n"


def test_bad_text():
    with pytest.raises(ValueError):
        A("a => b")
    with pytest.raises(ValueError):
        A("a -> b\na -> a")


def test_out_element_hash_and_equality():
    x = OutElement(PHI)
    y = OutElement(inner(Word.parse("ab"), 2).compose(PHI))
    assert x == y and hash(x) == hash(y)
    assert (x * x.inverse()) == OutElement(Automorphism.identity(2))


def _rand(seed, r=None):
    rng = random.Random(seed)
    r = r or rng.choice([2, 3])
    return rng, r


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_apply_respects_composition(seed):
    rng, r = _rand(seed)
    phi, psi = random_automorphism(r, rng, 4), random_automorphism(r, rng, 4)
    w = random_word(r, rng.randint(0, 8), rng)
    assert phi.compose(psi).apply(w) == phi.apply(psi.apply(w))
    # plain substitution oracle
    assert phi.apply(w).letters == substitute([i.letters for i in phi.images], w.letters)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_abelianization_is_multiplicative(seed):
    rng, r = _rand(seed)
    phi, psi = random_automorphism(r, rng, 4), random_automorphism(r, rng, 4)
    assert abelianize(phi.compose(psi)) == matmul(abelianize(phi), abelianize(psi))
    assert abs(determinant(abelianize(phi))) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_inverse_is_two_sided(seed):
    rng, r = _rand(seed)
    phi = random_automorphism(r, rng, 6)
    assert phi.compose(phi.invert()).is_identity()
    assert phi.invert().compose(phi).is_identity()
    assert (phi ** 3).compose(phi ** -3).is_identity()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_out_equal_finds_inner_twists(seed):
    rng, r = _rand(seed)
    phi = random_automorphism(r, rng, 4)
    w = random_word(r, rng.randint(0, 6), rng)
    psi = inner(w, r).compose(phi)
    ok, found = out_equal(phi, psi)
    assert ok
    assert inner(found, r).compose(phi) == psi
    assert invariant_key(phi) == invariant_key(psi)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_conjugacy_length_depends_on_out_class(seed):
    rng, r = _rand(seed)
    phi = random_automorphism(r, rng, 4)
    twisted = inner(random_word(r, 3, rng), r).compose(phi)
    w = random_word(r, rng.randint(1, 8), rng)
    u = random_word(r, 3, rng)
    conj = u * w * u.inverse()
    if not w.cyclic_reduction():
        return
    assert cyclic_length(phi.apply(w).letters) == cyclic_length(twisted.apply(conj).letters)


def test_out_equal_is_an_equivalence_on_a_sample():
    rng = random.Random(11)
    base = [random_automorphism(2, rng, 3) for _ in range(4)]
    pool = []
    for b in base:
        for _ in range(3):
            pool.append(inner(random_word(2, rng.randint(0, 4), rng), 2).compose(b))
    eq = [[out_equal(p, q)[0] for q in pool] for p in pool]
    n = len(pool)
    for i in range(n):
        assert eq[i][i]
        for j in range(n):
            assert eq[i][j] == eq[j][i]
            for k in range(n):
                if eq[i][j] and eq[j][k]:
                    assert eq[i][k]
